#include "aai/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <memory>

#include "aai/mathutil.hpp"

namespace aai {

namespace {

std::uint64_t cell_hash(const CoreCell& cell) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : cell) {
    h ^= b + 1;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Joint indicator samples with keyed padding when run counts differ.
std::vector<CoreCell> joint_cells(const CanonicalRep& canon,
                                  const RandomStream& stream) {
  std::size_t t = canon.n_tasks();
  std::size_t n_max = 0;
  for (const auto& v : canon.q) n_max = std::max(n_max, v.size());
  std::vector<CoreCell> cells(n_max, CoreCell(t));
  for (std::size_t i = 0; i < n_max; ++i) {
    for (std::size_t ti = 0; ti < t; ++ti) {
      std::size_t nt = canon.q[ti].size();
      std::size_t k = i;
      if (i >= nt) {
        k = static_cast<std::size_t>(stream.u01("core_pad", ti, i) *
                                     static_cast<double>(nt));
        if (k >= nt) k = nt - 1;
      }
      cells[i][ti] = canon.q[ti][k];
    }
  }
  return cells;
}

// Uniform draw inside one coordinate of a cell.
double lift_coordinate(std::uint8_t bit, double tau, double xi) {
  if (bit) return tau + (1.0 - tau) * xi;  // [tau, 1)
  return tau * xi;                         // [0, tau)
}

}  // namespace

CoreRep project_core(const CanonicalRep& canon, const RandomStream& stream) {
  if (canon.n_tasks() == 0) {
    throw ValidationError("empty canonical representation");
  }
  CoreRep core;
  core.task_ids = canon.task_ids;
  core.tau = canon.tau;
  auto cells = joint_cells(canon, stream);
  core.n_samples = cells.size();
  double w = 1.0 / static_cast<double>(cells.size());
  for (auto& c : cells) core.cells[c] += w;
  return core;
}

CanonicalRep max_entropy_lift(const CoreRep& core, int n_samples,
                              const RandomStream& stream,
                              const std::vector<double>& reference_resources) {
  if (n_samples <= 0) throw ValidationError("lift needs n_samples >= 1");
  if (core.cells.empty()) throw ValidationError("core has no cells");
  std::size_t t = core.tau.size();
  for (const auto& [cell, p] : core.cells) {
    (void)p;
    if (cell.size() != t) throw ValidationError("core cell arity mismatch");
    for (std::size_t ti = 0; ti < t; ++ti) {
      if (!cell[ti] && core.tau[ti] <= 0.0) {
        throw ValidationError(
            "lift undefined: failing cell with threshold at zero");
      }
    }
  }
  double total = 0.0;
  for (const auto& [cell, p] : core.cells) {
    (void)cell;
    total += p;
  }
  if (std::fabs(total - 1.0) > 1e-9) {
    throw ValidationError("core cell probabilities must sum to 1");
  }

  CanonicalRep out;
  out.task_ids = core.task_ids;
  out.tau = core.tau;
  out.master_seed = stream.state();
  out.ray_is_reference = true;
  out.u.assign(t, std::vector<double>(static_cast<std::size_t>(n_samples)));
  out.q.assign(t,
               std::vector<std::uint8_t>(static_cast<std::size_t>(n_samples)));

  for (int i = 0; i < n_samples; ++i) {
    double pick = stream.u01("lift_cell", static_cast<std::uint64_t>(i));
    double acc = 0.0;
    const CoreCell* chosen = nullptr;
    for (const auto& [cell, p] : core.cells) {
      acc += p;
      if (pick <= acc) {
        chosen = &cell;
        break;
      }
    }
    if (!chosen) chosen = &core.cells.rbegin()->first;
    for (std::size_t ti = 0; ti < t; ++ti) {
      double xi = stream.u01("lift_u", static_cast<std::uint64_t>(i), ti);
      double u = lift_coordinate((*chosen)[ti], core.tau[ti], xi);
      out.u[ti][static_cast<std::size_t>(i)] = u;
      out.q[ti][static_cast<std::size_t>(i)] = (*chosen)[ti];
    }
  }

  if (reference_resources.empty()) {
    throw ValidationError("lift needs a reference resource vector");
  }
  out.mean_resources = reference_resources;
  double mass = 0.0;
  for (double v : reference_resources) {
    if (v < 0.0) throw ValidationError("negative reference resource");
    mass += v;
  }
  if (!(mass > 0.0)) throw ValidationError("zero-mass reference resources");
  out.ray.resize(reference_resources.size());
  for (std::size_t j = 0; j < out.ray.size(); ++j) {
    out.ray[j] = reference_resources[j] / mass;
  }
  return out;
}

double aai_core(const CoreRep& core, const Battery& b,
                const FunctionalConfig& cfg, const RandomStream& stream,
                const std::vector<double>& reference_resources) {
  if (cfg.functional != "tractable") {
    throw ValidationError("core scores need the tractable functional");
  }
  CanonicalRep lift = max_entropy_lift(core, cfg.lift_samples,
                                       stream.child("core_lift"),
                                       reference_resources);
  return tractable_phi(lift, b, cfg.psi, cfg.lambda, cfg.gamma, cfg.cost)
      .value;
}

double NonCoreInvariant::centered_value(const CoreCell& cell,
                                        std::span<const double> u,
                                        std::span<const double> r) const {
  auto it = centers.find(cell);
  if (!centered || it == centers.end()) {
    throw ValidationError("uncentered invariant '" + name + "'");
  }
  return eval(u, r) - it->second;
}

void center_invariant(NonCoreInvariant& inv, const CoreRep& core, int n_mc,
                      const RandomStream& stream,
                      const std::vector<double>& reference_resources) {
  if (n_mc <= 0) throw ValidationError("centering needs n_mc >= 1");
  std::size_t t = core.tau.size();
  RandomStream cs = stream.child("invariant_center",
                                 RandomStream::hash_str(inv.name));
  inv.centers.clear();
  for (const auto& [cell, p] : core.cells) {
    (void)p;
    std::uint64_t ch = cell_hash(cell);
    double acc = 0.0;
    std::vector<double> u(t);
    for (int k = 0; k < n_mc; ++k) {
      for (std::size_t ti = 0; ti < t; ++ti) {
        double xi = cs.u01("mc", ch, static_cast<std::uint64_t>(k), ti);
        u[ti] = lift_coordinate(cell[ti], core.tau[ti], xi);
      }
      acc += inv.eval(u, reference_resources);
    }
    inv.centers[cell] = acc / static_cast<double>(n_mc);
  }
  inv.centered = true;
  inv.center_samples = n_mc;
  inv.center_state = cs.state();
}

void check_centering(const NonCoreInvariant& inv, const CoreRep& core,
                     const std::vector<double>& reference_resources) {
  if (!inv.centered || inv.center_samples <= 0) {
    throw ValidationError("uncentered invariant '" + inv.name + "'");
  }
  std::size_t t = core.tau.size();
  // Replay the centering draws from the recorded stream state; the
  // residual must vanish identically for a table built by center_invariant.
  RandomStream replay = RandomStream::from_state(inv.center_state);
  for (const auto& [cell, p] : core.cells) {
    (void)p;
    auto it = inv.centers.find(cell);
    if (it == inv.centers.end()) {
      throw ValidationError("invariant '" + inv.name +
                            "' lacks a center for an observed cell");
    }
    std::uint64_t ch = cell_hash(cell);
    double acc = 0.0;
    std::vector<double> u(t);
    for (int k = 0; k < inv.center_samples; ++k) {
      for (std::size_t ti = 0; ti < t; ++ti) {
        double xi = replay.u01("mc", ch, static_cast<std::uint64_t>(k), ti);
        u[ti] = lift_coordinate(cell[ti], core.tau[ti], xi);
      }
      acc += inv.eval(u, reference_resources);
    }
    double residual =
        std::fabs(acc / static_cast<double>(inv.center_samples) - it->second);
    if (residual > 1e-9) {
      throw ValidationError("invariant '" + inv.name +
                            "' centering residual above 1e-9");
    }
  }
}

namespace {

double invariant_term(const CanonicalRep& canon,
                      const NonCoreInvariant& inv) {
  std::size_t t = canon.n_tasks();
  std::size_t n = canon.u.empty() ? 0 : canon.u[0].size();
  for (const auto& v : canon.u) {
    if (v.size() != n) {
      throw ValidationError("continuations need aligned run counts");
    }
  }
  if (n == 0) throw InsufficientRuns("no canonical samples");
  std::vector<double> u(t);
  CoreCell cell(t);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t ti = 0; ti < t; ++ti) {
      u[ti] = canon.u[ti][i];
      cell[ti] = canon.q[ti][i];
    }
    acc += inv.centered_value(cell, u, canon.mean_resources);
  }
  return acc / static_cast<double>(n);
}

}  // namespace

double continuation_value(const CanonicalRep& canon, const Battery& b,
                          const FunctionalConfig& cfg,
                          std::span<const double> theta,
                          const std::vector<NonCoreInvariant>& invariants,
                          const RandomStream& stream) {
  if (theta.size() != invariants.size()) {
    throw ValidationError("theta arity does not match the invariants");
  }
  CoreRep core = project_core(canon, stream.child("core_proj"));
  for (const auto& inv : invariants) {
    check_centering(inv, core, canon.mean_resources);
  }
  double value =
      aai_core(core, b, cfg, stream, canon.mean_resources);
  for (std::size_t j = 0; j < invariants.size(); ++j) {
    value += theta[j] * invariant_term(canon, invariants[j]);
  }
  return value;
}

CalibrationResult calibrate_theta(
    const std::vector<CanonicalRep>& reps, std::span<const double> targets,
    const Battery& b, const FunctionalConfig& cfg,
    const std::vector<NonCoreInvariant>& invariants,
    const RandomStream& stream) {
  if (reps.size() != targets.size() || reps.empty()) {
    throw ValidationError("calibration needs matching reps and targets");
  }
  if (invariants.empty()) throw ValidationError("no invariants to calibrate");
  if (reps.size() < invariants.size()) {
    throw ValidationError("underdetermined calibration");
  }
  std::vector<std::vector<double>> design(
      reps.size(), std::vector<double>(invariants.size()));
  std::vector<double> rhs(reps.size());
  for (std::size_t i = 0; i < reps.size(); ++i) {
    CoreRep core = project_core(reps[i], stream.child("core_proj", i));
    for (const auto& inv : invariants) {
      check_centering(inv, core, reps[i].mean_resources);
    }
    double base = aai_core(core, b, cfg, stream, reps[i].mean_resources);
    rhs[i] = targets[i] - base;
    for (std::size_t j = 0; j < invariants.size(); ++j) {
      design[i][j] = invariant_term(reps[i], invariants[j]);
    }
  }
  CalibrationResult res;
  res.smallest_singular = smallest_singular_value(design);
  if (res.smallest_singular <= 1e-8) {
    throw ValidationError("collinear invariants: design matrix rank-deficient");
  }
  res.theta = qr_least_squares(design, rhs);
  double ss = 0.0;
  for (std::size_t i = 0; i < reps.size(); ++i) {
    double pred = 0.0;
    for (std::size_t j = 0; j < res.theta.size(); ++j) {
      pred += design[i][j] * res.theta[j];
    }
    double e = rhs[i] - pred;
    ss += e * e;
  }
  res.residual = std::sqrt(ss);
  return res;
}

std::pair<double, double> envelopes(
    const CanonicalRep& canon, const Battery& b, const FunctionalConfig& cfg,
    const std::vector<NonCoreInvariant>& f_class, const RandomStream& stream) {
  if (f_class.empty()) throw ValidationError("empty envelope class");
  CoreRep core = project_core(canon, stream.child("core_proj"));
  for (const auto& inv : f_class) {
    check_centering(inv, core, canon.mean_resources);
  }
  double base = aai_core(core, b, cfg, stream, canon.mean_resources);
  double lo = 1e300, hi = -1e300;
  for (const auto& inv : f_class) {
    double term = invariant_term(canon, inv);
    lo = std::min(lo, term);
    hi = std::max(hi, term);
  }
  return {base + lo, base + hi};
}

// ---------------------------------------------------------------------------
// Invariant expression DSL
// ---------------------------------------------------------------------------

namespace {

struct Expr;
using ExprPtr = std::shared_ptr<Expr>;

struct Expr {
  enum class Op { constant, field_u, field_r, add, sub, mul, div, neg,
                  fn_min, fn_max, fn_abs };
  Op op;
  double value = 0.0;
  std::size_t index = 0;
  ExprPtr a, b;

  double eval(std::span<const double> u, std::span<const double> r) const {
    switch (op) {
      case Op::constant: return value;
      case Op::field_u:
        if (index >= u.size()) {
          throw ValidationError("invariant references u out of range");
        }
        return u[index];
      case Op::field_r:
        if (index >= r.size()) {
          throw ValidationError("invariant references r out of range");
        }
        return r[index];
      case Op::add: return a->eval(u, r) + b->eval(u, r);
      case Op::sub: return a->eval(u, r) - b->eval(u, r);
      case Op::mul: return a->eval(u, r) * b->eval(u, r);
      case Op::div: return a->eval(u, r) / b->eval(u, r);
      case Op::neg: return -a->eval(u, r);
      case Op::fn_min: return std::min(a->eval(u, r), b->eval(u, r));
      case Op::fn_max: return std::max(a->eval(u, r), b->eval(u, r));
      case Op::fn_abs: return std::fabs(a->eval(u, r));
    }
    return 0.0;
  }
};

class Parser {
 public:
  explicit Parser(const std::string& text) : s_(text) {}

  ExprPtr parse() {
    ExprPtr e = expression();
    skip_ws();
    if (pos_ != s_.size()) {
      throw ValidationError("trailing characters in invariant expression");
    }
    return e;
  }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) {
      ++pos_;
    }
  }
  bool eat(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  ExprPtr expression() {
    ExprPtr e = term();
    while (true) {
      if (eat('+')) {
        auto n = std::make_shared<Expr>();
        n->op = Expr::Op::add;
        n->a = e;
        n->b = term();
        e = n;
      } else if (eat('-')) {
        auto n = std::make_shared<Expr>();
        n->op = Expr::Op::sub;
        n->a = e;
        n->b = term();
        e = n;
      } else {
        return e;
      }
    }
  }

  ExprPtr term() {
    ExprPtr e = factor();
    while (true) {
      if (eat('*')) {
        auto n = std::make_shared<Expr>();
        n->op = Expr::Op::mul;
        n->a = e;
        n->b = factor();
        e = n;
      } else if (eat('/')) {
        auto n = std::make_shared<Expr>();
        n->op = Expr::Op::div;
        n->a = e;
        n->b = factor();
        e = n;
      } else {
        return e;
      }
    }
  }

  ExprPtr factor() {
    skip_ws();
    if (eat('-')) {
      auto n = std::make_shared<Expr>();
      n->op = Expr::Op::neg;
      n->a = factor();
      return n;
    }
    if (eat('(')) {
      ExprPtr e = expression();
      if (!eat(')')) throw ValidationError("missing ')' in invariant");
      return e;
    }
    if (pos_ >= s_.size()) throw ValidationError("truncated invariant");
    char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      return number();
    }
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    throw ValidationError("unexpected character in invariant expression");
  }

  ExprPtr number() {
    std::size_t end = pos_;
    while (end < s_.size() &&
           (std::isdigit(static_cast<unsigned char>(s_[end])) ||
            s_[end] == '.' || s_[end] == 'e' || s_[end] == 'E' ||
            ((s_[end] == '+' || s_[end] == '-') && end > pos_ &&
             (s_[end - 1] == 'e' || s_[end - 1] == 'E')))) {
      ++end;
    }
    auto n = std::make_shared<Expr>();
    n->op = Expr::Op::constant;
    n->value = std::stod(s_.substr(pos_, end - pos_));
    pos_ = end;
    return n;
  }

  ExprPtr identifier() {
    std::size_t end = pos_;
    while (end < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[end])) ||
            s_[end] == '_')) {
      ++end;
    }
    std::string name = s_.substr(pos_, end - pos_);
    pos_ = end;
    if ((name[0] == 'u' || name[0] == 'r') && name.size() > 1 &&
        std::all_of(name.begin() + 1, name.end(), [](char ch) {
          return std::isdigit(static_cast<unsigned char>(ch));
        })) {
      auto n = std::make_shared<Expr>();
      n->op = name[0] == 'u' ? Expr::Op::field_u : Expr::Op::field_r;
      n->index = static_cast<std::size_t>(std::stoul(name.substr(1)));
      return n;
    }
    if (name == "min" || name == "max" || name == "abs") {
      if (!eat('(')) throw ValidationError("function call needs '('");
      auto n = std::make_shared<Expr>();
      n->a = expression();
      if (name == "abs") {
        n->op = Expr::Op::fn_abs;
      } else {
        if (!eat(',')) throw ValidationError("min/max need two arguments");
        n->op = name == "min" ? Expr::Op::fn_min : Expr::Op::fn_max;
        n->b = expression();
      }
      if (!eat(')')) throw ValidationError("missing ')' after arguments");
      return n;
    }
    throw ValidationError("unknown identifier '" + name + "' in invariant");
  }
};

}  // namespace

std::function<double(std::span<const double>, std::span<const double>)>
parse_invariant_expression(const std::string& text) {
  Parser p(text);
  ExprPtr root = p.parse();
  return [root](std::span<const double> u, std::span<const double> r) {
    return root->eval(u, r);
  };
}

}  // namespace aai
