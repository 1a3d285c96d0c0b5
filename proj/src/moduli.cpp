#include "aai/moduli.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <deque>
#include <map>
#include <numeric>

namespace aai {

void DiscreteMeasure::validate() const {
  if (atoms.size() != weights.size() || atoms.empty()) {
    throw ValidationError("measure needs matching atoms and weights");
  }
  std::size_t d = atoms[0].size();
  double total = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (atoms[i].size() != d) {
      throw ValidationError("atom dimension mismatch");
    }
    if (!(weights[i] > 0.0)) {
      throw ValidationError("atom weight must be positive");
    }
    total += weights[i];
  }
  if (std::fabs(total - 1.0) > 1e-9) {
    throw ValidationError("measure weights must sum to 1");
  }
}

DiscreteMeasure DiscreteMeasure::normalized(
    std::vector<std::vector<double>> atoms, std::vector<double> weights) {
  if (atoms.size() != weights.size() || atoms.empty()) {
    throw ValidationError("measure needs matching atoms and weights");
  }
  std::map<std::vector<double>, double> merged;
  double total = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (weights[i] < 0.0) throw ValidationError("negative atom weight");
    if (weights[i] == 0.0) continue;
    merged[atoms[i]] += weights[i];
    total += weights[i];
  }
  if (!(total > 0.0)) throw ValidationError("measure has zero mass");
  DiscreteMeasure out;
  for (auto& [a, w] : merged) {
    out.atoms.push_back(a);
    out.weights.push_back(w / total);
  }
  return out;
}

double ground_distance(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) {
    throw ValidationError("ground distance dimension mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += std::fabs(x[i] - y[i]);
  return s / static_cast<double>(x.size());
}

namespace {

// Transportation simplex over the dense bipartite cost matrix. The basis is
// a spanning tree over m+n nodes; pivots keep the plan a polytope vertex,
// so the optimum is exact up to float arithmetic.
class TransportSimplex {
 public:
  TransportSimplex(const DiscreteMeasure& mu, const DiscreteMeasure& nu)
      : m_(mu.size()), n_(nu.size()), a_(mu.weights), b_(nu.weights) {
    cost_.resize(m_ * n_);
    for (std::size_t i = 0; i < m_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) {
        cost_[i * n_ + j] = ground_distance(mu.atoms[i], nu.atoms[j]);
      }
    }
    // Exact balance: normalize both sides.
    double sa = std::accumulate(a_.begin(), a_.end(), 0.0);
    double sb = std::accumulate(b_.begin(), b_.end(), 0.0);
    for (double& v : a_) v /= sa;
    for (double& v : b_) v /= sb;
  }

  TransportPlan solve() {
    northwest_corner();
    const double tol = 1e-12;
    bool bland = false;
    long long since_improve = 0;
    double last_obj = objective();
    const long long pivot_cap = 4000000;
    for (long long pivot = 0;; ++pivot) {
      if (pivot > pivot_cap) {
        throw std::runtime_error("transport solver failed to converge");
      }
      compute_duals();
      int ei = -1, ej = -1;
      double best = -tol;
      for (std::size_t i = 0; i < m_ && (ei < 0 || !bland); ++i) {
        for (std::size_t j = 0; j < n_; ++j) {
          if (in_basis_[i * n_ + j]) continue;
          double rc = cost_[i * n_ + j] - u_[i] - v_[j];
          if (rc < best) {
            best = rc;
            ei = static_cast<int>(i);
            ej = static_cast<int>(j);
            if (bland) break;  // first negative arc
          }
        }
      }
      if (ei < 0) break;  // optimal
      pivot_on(static_cast<std::size_t>(ei), static_cast<std::size_t>(ej));
      double obj = objective();
      if (obj < last_obj - 1e-15) {
        last_obj = obj;
        since_improve = 0;
      } else if (++since_improve > 64 * static_cast<long long>(m_ + n_)) {
        bland = true;  // degenerate stalling: switch to Bland's rule
      }
    }
    return extract_plan();
  }

 private:
  std::size_t m_, n_;
  std::vector<double> a_, b_, cost_;
  std::vector<double> flow_;
  std::vector<char> in_basis_;
  std::vector<std::vector<int>> adj_;  // tree adjacency: node -> arc ids
  std::vector<int> arc_i_, arc_j_;     // basic arcs
  std::vector<double> u_, v_;

  std::size_t node_of_src(std::size_t i) const { return i; }
  std::size_t node_of_dst(std::size_t j) const { return m_ + j; }

  void add_basic(std::size_t i, std::size_t j, double f) {
    in_basis_[i * n_ + j] = 1;
    flow_[i * n_ + j] = f;
    int id = static_cast<int>(arc_i_.size());
    arc_i_.push_back(static_cast<int>(i));
    arc_j_.push_back(static_cast<int>(j));
    adj_[node_of_src(i)].push_back(id);
    adj_[node_of_dst(j)].push_back(id);
  }

  void drop_basic(std::size_t i, std::size_t j) {
    in_basis_[i * n_ + j] = 0;
    flow_[i * n_ + j] = 0.0;
    for (int id = 0; id < static_cast<int>(arc_i_.size()); ++id) {
      if (arc_i_[id] == static_cast<int>(i) &&
          arc_j_[id] == static_cast<int>(j)) {
        auto scrub = [&](std::size_t node) {
          auto& v = adj_[node];
          v.erase(std::find(v.begin(), v.end(), id));
        };
        scrub(node_of_src(i));
        scrub(node_of_dst(j));
        // Swap-remove the arc record; fix the moved arc's id in adj lists.
        int lastid = static_cast<int>(arc_i_.size()) - 1;
        if (id != lastid) {
          arc_i_[id] = arc_i_[lastid];
          arc_j_[id] = arc_j_[lastid];
          for (auto& lst : adj_) {
            for (int& x : lst) {
              if (x == lastid) x = id;
            }
          }
        }
        arc_i_.pop_back();
        arc_j_.pop_back();
        return;
      }
    }
  }

  void northwest_corner() {
    flow_.assign(m_ * n_, 0.0);
    in_basis_.assign(m_ * n_, 0);
    adj_.assign(m_ + n_, {});
    arc_i_.clear();
    arc_j_.clear();
    std::vector<double> ra = a_, rb = b_;
    std::size_t i = 0, j = 0;
    while (true) {
      double f = std::min(ra[i], rb[j]);
      add_basic(i, j, f);
      ra[i] -= f;
      rb[j] -= f;
      if (i == m_ - 1 && j == n_ - 1) break;
      if (ra[i] <= rb[j] && i < m_ - 1) {
        ++i;
      } else {
        ++j;
      }
    }
  }

  void compute_duals() {
    u_.assign(m_, 0.0);
    v_.assign(n_, 0.0);
    std::vector<char> seen(m_ + n_, 0);
    std::deque<std::size_t> queue;
    queue.push_back(0);  // root at source 0, u_0 = 0
    seen[0] = 1;
    while (!queue.empty()) {
      std::size_t node = queue.front();
      queue.pop_front();
      for (int id : adj_[node]) {
        std::size_t si = static_cast<std::size_t>(arc_i_[id]);
        std::size_t sj = static_cast<std::size_t>(arc_j_[id]);
        std::size_t other = node < m_ ? node_of_dst(sj) : node_of_src(si);
        if (seen[other]) continue;
        if (other >= m_) {
          v_[sj] = cost_[si * n_ + sj] - u_[si];
        } else {
          u_[si] = cost_[si * n_ + sj] - v_[sj];
        }
        seen[other] = 1;
        queue.push_back(other);
      }
    }
  }

  // Tree path between two nodes as a list of arc ids.
  std::vector<int> tree_path(std::size_t from, std::size_t to) const {
    std::vector<int> parent_arc(m_ + n_, -1);
    std::vector<int> parent(m_ + n_, -1);
    std::vector<char> seen(m_ + n_, 0);
    std::deque<std::size_t> queue{from};
    seen[from] = 1;
    while (!queue.empty()) {
      std::size_t node = queue.front();
      queue.pop_front();
      if (node == to) break;
      for (int id : adj_[node]) {
        std::size_t si = static_cast<std::size_t>(arc_i_[id]);
        std::size_t sj = static_cast<std::size_t>(arc_j_[id]);
        std::size_t other = node < m_ ? node_of_dst(sj) : node_of_src(si);
        if (seen[other]) continue;
        seen[other] = 1;
        parent[other] = static_cast<int>(node);
        parent_arc[other] = id;
        queue.push_back(other);
      }
    }
    std::vector<int> path;
    std::size_t cur = to;
    while (cur != from) {
      path.push_back(parent_arc[cur]);
      cur = static_cast<std::size_t>(parent[cur]);
    }
    std::reverse(path.begin(), path.end());
    return path;
  }

  void pivot_on(std::size_t ei, std::size_t ej) {
    // Cycle: entering arc plus the tree path from its sink back to its
    // source. Signs alternate starting with + on the entering arc.
    std::vector<int> path = tree_path(node_of_dst(ej), node_of_src(ei));
    double theta = 1e300;
    int leave = -1;
    for (std::size_t k = 0; k < path.size(); ++k) {
      if (k % 2 == 0) {  // minus arcs
        int id = path[k];
        double f = flow_[static_cast<std::size_t>(arc_i_[id]) * n_ +
                         static_cast<std::size_t>(arc_j_[id])];
        if (f < theta) {
          theta = f;
          leave = id;
        }
      }
    }
    for (std::size_t k = 0; k < path.size(); ++k) {
      int id = path[k];
      std::size_t cell = static_cast<std::size_t>(arc_i_[id]) * n_ +
                         static_cast<std::size_t>(arc_j_[id]);
      flow_[cell] += (k % 2 == 0) ? -theta : theta;
    }
    std::size_t li = static_cast<std::size_t>(arc_i_[leave]);
    std::size_t lj = static_cast<std::size_t>(arc_j_[leave]);
    drop_basic(li, lj);
    add_basic(ei, ej, theta);
  }

  double objective() const {
    double s = 0.0;
    for (std::size_t c = 0; c < flow_.size(); ++c) s += flow_[c] * cost_[c];
    return s;
  }

  TransportPlan extract_plan() const {
    TransportPlan plan;
    plan.cost = 0.0;
    for (std::size_t i = 0; i < m_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) {
        double f = flow_[i * n_ + j];
        if (f > 1e-15) {
          plan.src.push_back(static_cast<int>(i));
          plan.dst.push_back(static_cast<int>(j));
          plan.flow.push_back(f);
          plan.cost += f * cost_[i * n_ + j];
        }
      }
    }
    return plan;
  }
};

}  // namespace

std::pair<double, TransportPlan> w1(const DiscreteMeasure& mu,
                                    const DiscreteMeasure& nu) {
  mu.validate();
  nu.validate();
  if (mu.dim() != nu.dim()) {
    throw ValidationError("w1 between measures of different dimension");
  }
  if (mu.size() * nu.size() > 1000000) {
    throw ValidationError("w1 instance above the m*n <= 1e6 cap");
  }
  if (mu.atoms == nu.atoms && mu.weights == nu.weights) {
    // Identical inputs dominate region sampling whenever a radius is zero
    // (every candidate carries the base copula); the diagonal plan is the
    // optimum, so skip the simplex.
    TransportPlan plan;
    plan.src.resize(mu.size());
    plan.dst.resize(mu.size());
    std::iota(plan.src.begin(), plan.src.end(), 0);
    plan.dst = plan.src;
    plan.flow = mu.weights;
    plan.cost = 0.0;
    plan.src_atoms = mu.atoms;
    plan.dst_atoms = nu.atoms;
    return {0.0, plan};
  }
  TransportSimplex solver(mu, nu);
  TransportPlan plan = solver.solve();
  plan.src_atoms = mu.atoms;
  plan.dst_atoms = nu.atoms;
  return {plan.cost, plan};
}

DiscreteMeasure stratified_subsample(const DiscreteMeasure& m,
                                     std::size_t max_atoms,
                                     const RandomStream& stream) {
  if (m.size() <= max_atoms) return m;
  // Sort atoms, then take one representative per equal-mass stratum
  // (systematic resampling with a keyed offset).
  std::vector<std::size_t> order(m.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return m.atoms[x] < m.atoms[y];
  });
  std::vector<double> cum(m.size());
  double run = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    run += m.weights[order[k]];
    cum[k] = run;
  }
  double off = stream.u01("subsample_offset");
  DiscreteMeasure out;
  std::size_t pos = 0;
  for (std::size_t s = 0; s < max_atoms; ++s) {
    double target = (static_cast<double>(s) + off) /
                    static_cast<double>(max_atoms) * run;
    while (pos + 1 < cum.size() && cum[pos] < target) ++pos;
    out.atoms.push_back(m.atoms[order[pos]]);
    out.weights.push_back(1.0 / static_cast<double>(max_atoms));
  }
  return DiscreteMeasure::normalized(std::move(out.atoms),
                                     std::move(out.weights));
}

std::pair<double, TransportPlan> w1_capped(const DiscreteMeasure& mu,
                                           const DiscreteMeasure& nu,
                                           const RandomStream& stream,
                                           bool* subsampled) {
  const std::size_t cap = 1000;
  bool sub = mu.size() > cap || nu.size() > cap;
  if (subsampled) *subsampled = sub;
  if (!sub) return w1(mu, nu);
  // Key each side's subsample by its own content, not by argument position:
  // equal measures then reduce identically, which keeps the capped distance
  // symmetric and zero on the diagonal.
  auto content_key = [](const DiscreteMeasure& m) {
    std::string bytes;
    bytes.reserve(m.size() * (m.dim() + 1) * sizeof(double));
    auto push = [&bytes](double v) {
      char buf[sizeof(double)];
      std::memcpy(buf, &v, sizeof(double));
      bytes.append(buf, sizeof(double));
    };
    for (const auto& a : m.atoms)
      for (double c : a) push(c);
    for (double w : m.weights) push(w);
    return RandomStream::hash_str(bytes);
  };
  DiscreteMeasure a = stratified_subsample(mu, cap, stream.child("sub", content_key(mu)));
  DiscreteMeasure b = stratified_subsample(nu, cap, stream.child("sub", content_key(nu)));
  return w1(a, b);
}

double d_ray(std::span<const double> r, std::span<const double> rp) {
  if (r.size() != rp.size() || r.empty()) {
    throw ValidationError("ray dimension mismatch");
  }
  double sr = 0.0, sp = 0.0;
  for (double x : r) {
    if (x < 0.0) throw ValidationError("ray has negative coordinate");
    sr += x;
  }
  for (double x : rp) {
    if (x < 0.0) throw ValidationError("ray has negative coordinate");
    sp += x;
  }
  if (!(sr > 0.0) || !(sp > 0.0)) {
    throw ValidationError("zero-mass ray");
  }
  double d = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    d += std::fabs(r[i] / sr - rp[i] / sp);
  }
  return d;
}

DiscreteMeasure empirical_copula(const CanonicalRep& canon,
                                 const RandomStream& stream, int* pad_count) {
  std::size_t t = canon.n_tasks();
  if (t == 0) throw ValidationError("empty canonical representation");
  std::size_t n_max = 0;
  for (const auto& v : canon.u) n_max = std::max(n_max, v.size());
  int padded = 0;
  std::vector<std::vector<double>> atoms(n_max, std::vector<double>(t));
  for (std::size_t i = 0; i < n_max; ++i) {
    for (std::size_t ti = 0; ti < t; ++ti) {
      std::size_t nt = canon.u[ti].size();
      if (i < nt) {
        atoms[i][ti] = canon.u[ti][i];
      } else {
        std::size_t k = static_cast<std::size_t>(
            stream.u01("copula_pad", ti, i) * static_cast<double>(nt));
        if (k >= nt) k = nt - 1;
        atoms[i][ti] = canon.u[ti][k];
        ++padded;
      }
    }
  }
  if (pad_count) *pad_count = padded;
  std::vector<double> w(n_max, 1.0 / static_cast<double>(n_max));
  return DiscreteMeasure::normalized(std::move(atoms), std::move(w));
}

ModuliPoint moduli_point_of(const CanonicalRep& canon, const Battery& b,
                            const RandomStream& stream) {
  ModuliPoint p;
  p.skeleton = skeleton_of(b);
  p.tau = canon.tau;
  p.copula = empirical_copula(canon, stream);
  p.ray = canon.ray;
  return p;
}

double d_sharp(const ModuliPoint& a, const ModuliPoint& b, double alpha,
               double beta, double gamma_w, const RandomStream& stream) {
  if (!(a.skeleton == b.skeleton)) {
    throw ValidationError("pair metric across different skeletons");
  }
  if (a.tau.size() != b.tau.size()) {
    throw ValidationError("threshold dimension mismatch");
  }
  auto [wcost, plan] = w1_capped(a.copula, b.copula, stream);
  (void)plan;
  double dtau = 0.0;
  for (std::size_t i = 0; i < a.tau.size(); ++i) {
    dtau += std::fabs(a.tau[i] - b.tau[i]);
  }
  return alpha * wcost + beta * dtau + gamma_w * d_ray(a.ray, b.ray);
}

DiscreteMeasure displacement_interpolate(const TransportPlan& plan, double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw ValidationError("interpolation time outside [0,1]");
  }
  if (plan.src.empty() || plan.src_atoms.empty() || plan.dst_atoms.empty()) {
    throw ValidationError("plan carries no coupling entries");
  }
  std::vector<std::vector<double>> atoms;
  std::vector<double> weights;
  std::size_t d = plan.src_atoms[0].size();
  for (std::size_t k = 0; k < plan.src.size(); ++k) {
    const auto& x = plan.src_atoms[static_cast<std::size_t>(plan.src[k])];
    const auto& y = plan.dst_atoms[static_cast<std::size_t>(plan.dst[k])];
    std::vector<double> z(d);
    for (std::size_t c = 0; c < d; ++c) {
      z[c] = (1.0 - t) * x[c] + t * y[c];
    }
    atoms.push_back(std::move(z));
    weights.push_back(plan.flow[k]);
  }
  return DiscreteMeasure::normalized(std::move(atoms), std::move(weights));
}

std::pair<ModuliPoint, double> snap_to_grid(const ModuliPoint& p, int denom,
                                            double alpha, double beta,
                                            double gamma_w,
                                            const RandomStream& stream) {
  if (denom < 1) throw ValidationError("grid denominator must be >= 1");
  double d = static_cast<double>(denom);
  auto snap = [&](double x) { return std::round(x * d) / d; };

  ModuliPoint out;
  out.skeleton = p.skeleton;
  out.tau.reserve(p.tau.size());
  for (double v : p.tau) out.tau.push_back(snap(v));

  std::vector<std::vector<double>> atoms = p.copula.atoms;
  for (auto& a : atoms) {
    for (double& v : a) v = snap(v);
  }
  out.copula = DiscreteMeasure::normalized(std::move(atoms), p.copula.weights);

  out.ray.resize(p.ray.size());
  double total = 0.0;
  for (std::size_t i = 0; i < p.ray.size(); ++i) {
    out.ray[i] = snap(p.ray[i]);
    if (out.ray[i] < 0.0) out.ray[i] = 0.0;
    total += out.ray[i];
  }
  if (total > 0.0) {
    for (double& v : out.ray) v /= total;
  } else {
    // Everything rounded to zero: keep the dominant direction.
    std::size_t best = 0;
    for (std::size_t i = 1; i < p.ray.size(); ++i) {
      if (p.ray[i] > p.ray[best]) best = i;
    }
    std::fill(out.ray.begin(), out.ray.end(), 0.0);
    out.ray[best] = 1.0;
  }

  double dist = d_sharp(p, out, alpha, beta, gamma_w, stream);
  return {out, dist};
}

}  // namespace aai
