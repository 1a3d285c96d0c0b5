#include "aai/battery.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "aai/rng.hpp"

namespace aai {

namespace {

const std::set<std::string>& axis_tags() {
  static const std::set<std::string> tags = {"A", "G", "P", "M", "T",
                                             "R", "S", "E", "W", "$"};
  return tags;
}

void normalize_weight_map(std::map<std::string, double>& w, bool& flagged,
                          const char* what) {
  double sum = 0.0;
  for (auto& [k, v] : w) {
    if (!(v > 0.0)) {
      throw ValidationError(std::string(what) + " weight for '" + k +
                            "' must be positive");
    }
    sum += v;
  }
  if (sum <= 0.0) throw ValidationError(std::string(what) + " weights empty");
  if (std::fabs(sum - 1.0) > 1e-12) {
    flagged = true;
    for (auto& [k, v] : w) v /= sum;
  }
}

}  // namespace

int Battery::index_of(const std::string& task_id) const {
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (tasks[i].id == task_id) return static_cast<int>(i);
  }
  return -1;
}

std::vector<std::string> Battery::family_names() const {
  std::set<std::string> fams;
  for (const auto& t : tasks) fams.insert(t.family);
  return {fams.begin(), fams.end()};
}

std::vector<std::size_t> Battery::family_task_indices(
    const std::string& fam) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (tasks[i].family == fam) idx.push_back(i);
  }
  return idx;
}

void validate_battery(Battery& b) {
  if (b.tasks.empty()) throw ValidationError("battery has no tasks");
  std::set<std::string> ids;
  for (const auto& t : b.tasks) {
    if (t.id.empty()) throw ValidationError("empty task id");
    if (!ids.insert(t.id).second) {
      throw ValidationError("duplicate task id '" + t.id + "'");
    }
    if (t.family.empty()) {
      throw ValidationError("task '" + t.id + "' has empty family");
    }
    if (!(t.q_star >= 0.0 && t.q_star <= 1.0)) {
      throw ValidationError("task '" + t.id + "' threshold outside [0,1]");
    }
    if (!t.axis.empty() && !axis_tags().count(t.axis)) {
      throw ValidationError("task '" + t.id + "' has unknown axis tag '" +
                            t.axis + "'");
    }
  }
  auto fams = b.family_names();
  for (const auto& f : fams) {
    if (!b.family_weights.count(f)) {
      throw ValidationError("missing family weight for '" + f + "'");
    }
  }
  for (const auto& [f, w] : b.family_weights) {
    if (std::find(fams.begin(), fams.end(), f) == fams.end()) {
      throw ValidationError("family weight for unknown family '" + f + "'");
    }
    (void)w;
  }
  normalize_weight_map(b.family_weights, b.weights_were_renormalized,
                       "family");

  if (b.resource_names.empty()) {
    throw ValidationError("battery declares no resources");
  }
  std::set<std::string> rnames(b.resource_names.begin(),
                               b.resource_names.end());
  if (rnames.size() != b.resource_names.size()) {
    throw ValidationError("duplicate resource name");
  }
  if (b.resource_units.size() != b.resource_names.size()) {
    b.resource_units.resize(b.resource_names.size());
  }

  if (!b.sampling_weights.empty()) {
    for (const auto& [tid, w] : b.sampling_weights) {
      if (b.index_of(tid) < 0) {
        throw ValidationError("sampling weight for unknown task '" + tid +
                              "'");
      }
      (void)w;
    }
    normalize_weight_map(b.sampling_weights, b.weights_were_renormalized,
                         "sampling");
  }
}

std::size_t AgentRep::total_runs() const {
  std::size_t n = 0;
  for (const auto& v : runs) n += v.size();
  return n;
}

AgentRep make_agent_rep(Battery battery, std::span<const RunRecord> records) {
  AgentRep rep;
  rep.battery = std::move(battery);
  rep.runs.resize(rep.battery.tasks.size());
  for (const RunRecord& r : records) {
    int idx = rep.battery.index_of(r.task_id);
    if (idx < 0) {
      ++rep.rejected_unknown_task;
      continue;
    }
    if (r.resources.size() != rep.battery.n_resources()) {
      ++rep.rejected_bad_resources;
      continue;
    }
    RunRecord rec = r;
    rec.xi_task = RandomStream::hash_str(rec.task_id);
    rec.xi_index = static_cast<std::uint32_t>(rep.runs[idx].size());
    rep.runs[idx].push_back(std::move(rec));
  }
  return rep;
}

Skeleton skeleton_of(const Battery& b) {
  Skeleton sk;
  for (const auto& t : b.tasks) {
    sk.family_sizes[t.family]++;
    if (!t.axis.empty()) sk.axis_counts[t.axis]++;
  }

  // Coincidence classes of thresholds, ascending by value.
  std::map<double, std::map<std::string, int>> classes;
  for (const auto& t : b.tasks) classes[t.q_star][t.family]++;
  for (auto& [v, fams] : classes) sk.threshold_classes.push_back(fams);

  // Weak order of families by their sorted threshold multiset.
  std::map<std::string, std::vector<double>> fam_thresholds;
  for (const auto& t : b.tasks) fam_thresholds[t.family].push_back(t.q_star);
  for (auto& [f, v] : fam_thresholds) std::sort(v.begin(), v.end());
  std::vector<std::pair<std::vector<double>, std::string>> order;
  for (auto& [f, v] : fam_thresholds) order.emplace_back(v, f);
  std::sort(order.begin(), order.end());
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i == 0 || order[i].first != order[i - 1].first) {
      sk.family_order.emplace_back();
    }
    sk.family_order.back().push_back(order[i].second);
  }
  return sk;
}

double PiecewiseLinearMap::operator()(double x) const {
  std::size_t k = xs.size();
  if (x <= xs.front()) {
    double slope = (ys[1] - ys[0]) / (xs[1] - xs[0]);
    return ys.front() + (x - xs.front()) * slope;
  }
  if (x >= xs.back()) {
    double slope = (ys[k - 1] - ys[k - 2]) / (xs[k - 1] - xs[k - 2]);
    return ys.back() + (x - xs.back()) * slope;
  }
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  std::size_t i = static_cast<std::size_t>(it - xs.begin());
  double t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
  return ys[i - 1] + t * (ys[i] - ys[i - 1]);
}

PiecewiseLinearMap PiecewiseLinearMap::inverse() const {
  return PiecewiseLinearMap{ys, xs};
}

void PiecewiseLinearMap::validate() const {
  if (xs.size() < 2 || xs.size() != ys.size()) {
    throw ValidationError("piecewise-linear map needs >= 2 knots");
  }
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (!(xs[i] > xs[i - 1]) || !(ys[i] > ys[i - 1])) {
      throw ValidationError("piecewise-linear map must be strictly increasing");
    }
  }
}

PiecewiseLinearMap PiecewiseLinearMap::identity() {
  return PiecewiseLinearMap{{0.0, 1.0}, {0.0, 1.0}};
}

Symmetry inverse(const Symmetry& g) {
  Symmetry inv;
  inv.kind = g.kind;
  switch (g.kind) {
    case Symmetry::Kind::family_permutation:
      for (const auto& [a, b] : g.task_relabel) inv.task_relabel[b] = a;
      break;
    case Symmetry::Kind::score_rescale:
      for (const auto& [tid, m] : g.rescale) inv.rescale[tid] = m.inverse();
      break;
    case Symmetry::Kind::resource_rescale:
      for (double s : g.resource_scales) {
        inv.resource_scales.push_back(1.0 / s);
      }
      break;
    case Symmetry::Kind::seed_relabel:
      for (const auto& [a, b] : g.seed_map) inv.seed_map[b] = a;
      break;
  }
  return inv;
}

SymmetricPair apply_symmetry(const Battery& b, const AgentRep& rep,
                             const Symmetry& g) {
  SymmetricPair out;
  out.battery = b;
  out.rep = rep;

  switch (g.kind) {
    case Symmetry::Kind::family_permutation: {
      // Validate: bijection on task ids, family preserving.
      auto relabel = [&](const std::string& id) -> const std::string& {
        auto it = g.task_relabel.find(id);
        return it == g.task_relabel.end() ? id : it->second;
      };
      std::set<std::string> images;
      for (const auto& t : b.tasks) {
        const std::string& img = relabel(t.id);
        int j = b.index_of(img);
        if (j < 0) {
          throw ValidationError("permutation image '" + img +
                                "' is not a task id");
        }
        if (b.tasks[static_cast<std::size_t>(j)].family != t.family) {
          throw ValidationError("permutation moves '" + t.id +
                                "' across families");
        }
        if (!images.insert(img).second) {
          throw ValidationError("permutation is not injective");
        }
      }
      // Task t is renamed to g(t) and placed where g(t) used to sit;
      // its threshold and axis travel with it.
      for (std::size_t i = 0; i < b.tasks.size(); ++i) {
        const TaskSpec& t = b.tasks[i];
        const std::string& img = relabel(t.id);
        std::size_t j = static_cast<std::size_t>(b.index_of(img));
        out.battery.tasks[j] = TaskSpec{img, t.family, t.q_star, t.axis};
      }
      out.rep.battery = out.battery;
      for (auto& v : out.rep.runs) v.clear();
      for (std::size_t i = 0; i < rep.runs.size(); ++i) {
        const std::string& img = relabel(b.tasks[i].id);
        std::size_t j = static_cast<std::size_t>(b.index_of(img));
        out.rep.runs[j] = rep.runs[i];
        for (auto& rec : out.rep.runs[j]) rec.task_id = img;
      }
      break;
    }
    case Symmetry::Kind::score_rescale: {
      for (const auto& [tid, m] : g.rescale) {
        if (b.index_of(tid) < 0) {
          throw ValidationError("rescale for unknown task '" + tid + "'");
        }
        m.validate();
      }
      for (std::size_t i = 0; i < b.tasks.size(); ++i) {
        auto it = g.rescale.find(b.tasks[i].id);
        if (it == g.rescale.end()) continue;
        out.battery.tasks[i].q_star = it->second(b.tasks[i].q_star);
        for (auto& rec : out.rep.runs[i]) rec.score = it->second(rec.score);
      }
      out.rep.battery = out.battery;
      break;
    }
    case Symmetry::Kind::resource_rescale: {
      if (g.resource_scales.size() != b.n_resources()) {
        throw ValidationError("resource scale arity mismatch");
      }
      for (double s : g.resource_scales) {
        if (!(s > 0.0)) throw ValidationError("resource scale must be > 0");
      }
      for (auto& v : out.rep.runs) {
        for (auto& rec : v) {
          for (std::size_t j = 0; j < rec.resources.size(); ++j) {
            rec.resources[j] *= g.resource_scales[j];
          }
        }
      }
      break;
    }
    case Symmetry::Kind::seed_relabel: {
      std::set<std::int64_t> images;
      for (const auto& [a, s] : g.seed_map) {
        (void)a;
        if (!images.insert(s).second) {
          throw ValidationError("seed relabeling is not injective");
        }
      }
      for (auto& v : out.rep.runs) {
        for (auto& rec : v) {
          auto it = g.seed_map.find(rec.seed);
          if (it != g.seed_map.end()) rec.seed = it->second;
        }
      }
      break;
    }
  }
  return out;
}

}  // namespace aai
