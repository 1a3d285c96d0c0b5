#include "aai/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "aai/mathutil.hpp"

namespace aai {

double UtilityFamily::operator()(double u, double tau) const {
  switch (shape) {
    case Shape::ramp:
      if (tau <= 0.0) return 1.0;
      return u >= tau ? 1.0 : u / tau;
    case Shape::exp_sat: {
      if (!(c > 0.0)) throw ValidationError("exp_sat needs c > 0");
      return (1.0 - std::exp(-c * u)) / (1.0 - std::exp(-c));
    }
  }
  return 0.0;
}

double UtilityFamily::u_slope_bound(double tau_min) const {
  switch (shape) {
    case Shape::ramp:
      return 1.0 / std::max(tau_min, 1e-12);
    case Shape::exp_sat:
      return c / (1.0 - std::exp(-c));
  }
  return 0.0;
}

double CostModel::operator()(std::span<const double> r) const {
  if (weights.empty()) return 0.0;
  if (weights.size() != r.size()) {
    throw ValidationError("cost weight arity mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) s += weights[i] * r[i];
  return std::min(s, cap);
}

double dispersion_penalty(std::span<const double> family_means,
                          double lambda) {
  if (family_means.empty()) return 0.0;
  return lambda * variance_pop(family_means);
}

ScoreReport aggregate_tractable(const Battery& b,
                                std::span<const double> task_means,
                                double lambda, double gamma,
                                double mean_cost) {
  if (task_means.size() != b.n_tasks()) {
    throw ValidationError("per-task values do not match the battery");
  }
  ScoreReport rep;
  std::vector<double> fam_means;
  for (const std::string& fam : b.family_names()) {
    auto idx = b.family_task_indices(fam);
    double m = 0.0;
    for (std::size_t i : idx) m += task_means[i];
    m /= static_cast<double>(idx.size());
    rep.family_means.emplace_back(fam, m);
    fam_means.push_back(m);
    rep.weighted_mean += b.family_weights.at(fam) * m;
  }
  rep.dispersion_penalty = dispersion_penalty(fam_means, lambda);
  rep.cost_penalty = gamma * mean_cost;
  rep.value = rep.weighted_mean - rep.dispersion_penalty - rep.cost_penalty;
  return rep;
}

ScoreReport tractable_phi(const CanonicalRep& canon, const Battery& b,
                          const UtilityFamily& psi, double lambda,
                          double gamma, const CostModel& cost) {
  if (canon.n_tasks() != b.n_tasks()) {
    throw ValidationError("canonical rep does not match the battery");
  }
  std::vector<double> task_means(b.n_tasks());
  for (std::size_t i = 0; i < b.n_tasks(); ++i) {
    const auto& us = canon.u[i];
    if (us.empty()) throw InsufficientRuns("task without canonical samples");
    double s = 0.0;
    for (double u : us) s += psi(u, canon.tau[i]);
    task_means[i] = s / static_cast<double>(us.size());
  }
  double mean_cost;
  if (!canon.run_resources.empty()) {
    double s = 0.0;
    for (const auto& r : canon.run_resources) s += cost(r);
    mean_cost = s / static_cast<double>(canon.run_resources.size());
  } else {
    mean_cost = cost(canon.mean_resources);
  }
  ScoreReport rep = aggregate_tractable(b, task_means, lambda, gamma,
                                        mean_cost);
  for (std::size_t i = 0; i < b.n_tasks(); ++i) {
    rep.runs_per_task[b.tasks[i].id] = canon.u[i].size();
  }
  return rep;
}

namespace {

struct AxisEval {
  bool per_run = false;
  double aggregate = 0.0;          // raw, before clipping
  std::vector<double> run_values;  // raw per-run values (per-run axes)
};

double metric_or_throw(const RunRecord& rec, const std::string& key,
                       std::set<std::string>& missing) {
  auto it = rec.metrics.find(key);
  if (it == rec.metrics.end()) {
    missing.insert(key);
    return 0.0;
  }
  return it->second;
}

// Records an axis evaluates over: tasks tagged with the axis when any are,
// otherwise the whole battery.
std::vector<std::pair<std::size_t, std::size_t>> axis_records(
    const AgentRep& rep, const std::string& axis) {
  std::vector<std::size_t> tagged;
  for (std::size_t i = 0; i < rep.battery.tasks.size(); ++i) {
    if (rep.battery.tasks[i].axis == axis) tagged.push_back(i);
  }
  if (tagged.empty()) {
    tagged.resize(rep.battery.tasks.size());
    for (std::size_t i = 0; i < tagged.size(); ++i) tagged[i] = i;
  }
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i : tagged) {
    for (std::size_t k = 0; k < rep.runs[i].size(); ++k) out.emplace_back(i, k);
  }
  return out;
}

AxisEval axis_eval(const CanonicalRep& canon, const AgentRep& rep,
                   const std::string& axis, const AxisConfig& cfg) {
  auto pit = cfg.axes.find(axis);
  if (pit == cfg.axes.end()) {
    throw ValidationError("axis '" + axis + "' missing from config");
  }
  const AxisParams& p = pit->second;
  auto recs = axis_records(rep, axis);
  if (recs.empty()) throw InsufficientRuns("axis '" + axis + "' has no runs");
  std::set<std::string> missing;
  AxisEval ev;

  auto rec_of = [&](std::size_t t, std::size_t k) -> const RunRecord& {
    return rep.runs[t][k];
  };

  if (axis == "A") {
    ev.per_run = true;
    for (auto [t, k] : recs) {
      double a = metric_or_throw(rec_of(t, k), "action_count", missing);
      ev.run_values.push_back(std::min(a / p.horizon, 1.0));
    }
  } else if (axis == "G") {
    double met = 0.0, fams = 0.0;
    for (const std::string& fam : rep.battery.family_names()) {
      auto it = p.family_thresholds.find(fam);
      if (it == p.family_thresholds.end()) {
        throw ValidationError("axis G missing threshold for family '" + fam +
                              "'");
      }
      double qsum = 0.0, qn = 0.0;
      for (std::size_t i : rep.battery.family_task_indices(fam)) {
        for (double qi : canon.q[i]) {
          qsum += qi;
          qn += 1.0;
        }
      }
      if (qn == 0.0) throw InsufficientRuns("family without runs");
      fams += 1.0;
      if (qsum / qn >= it->second) met += 1.0;
    }
    ev.aggregate = met / fams;
  } else if (axis == "P") {
    ev.per_run = true;
    for (auto [t, k] : recs) {
      if (!canon.q[t][k]) continue;  // plan depth counts on successes only
      double d = metric_or_throw(rec_of(t, k), "plan_depth", missing);
      ev.run_values.push_back(std::min(d / p.depth_anchor, 1.0));
    }
    if (ev.run_values.empty()) ev.run_values.push_back(0.0);
  } else if (axis == "M") {
    ev.per_run = true;
    for (auto [t, k] : recs) {
      double rc = metric_or_throw(rec_of(t, k), "recall_at_k", missing);
      double lag = metric_or_throw(rec_of(t, k), "lag", missing);
      double decay = std::exp(-lag / p.half_life);
      ev.run_values.push_back(std::sqrt(clip01(rc) * clip01(decay)));
    }
  } else if (axis == "T") {
    if (p.categories.empty()) {
      throw ValidationError("axis T needs a tool category list");
    }
    std::set<double> seen;
    double dsum = 0.0, dn = 0.0, disc = 0.0;
    for (auto [t, k] : recs) {
      seen.insert(metric_or_throw(rec_of(t, k), "tool_category", missing));
      dsum += metric_or_throw(rec_of(t, k), "drift_success", missing);
      disc += metric_or_throw(rec_of(t, k), "discovery_size", missing);
      dn += 1.0;
    }
    double coverage =
        clip01(static_cast<double>(seen.size()) /
               static_cast<double>(p.categories.size()));
    double drift_rate = clip01(dsum / dn);
    double discovery = clip01(std::log1p(disc / dn) /
                              std::log1p(p.discovery_anchor));
    ev.aggregate = std::cbrt(coverage * drift_rate * discovery);
  } else if (axis == "R") {
    ev.per_run = true;
    for (auto [t, k] : recs) {
      const RunRecord& rec = rec_of(t, k);
      double pg = metric_or_throw(rec, "patch_gain", missing);
      double cg = metric_or_throw(rec, "control_gain", missing);
      double w = 1.0;
      auto it = rec.metrics.find("action_count");
      if (it != rec.metrics.end()) {
        w = std::min(it->second / p.horizon, 1.0);
      }
      ev.run_values.push_back(w * (pg - cg));
    }
  } else if (axis == "S") {
    double lift = 0.0, dead = 0.0, n = 0.0;
    for (auto [t, k] : recs) {
      lift += metric_or_throw(rec_of(t, k), "multi_lift", missing);
      dead += metric_or_throw(rec_of(t, k), "deadlock", missing);
      n += 1.0;
    }
    ev.aggregate = clip01(lift / n) * (1.0 - clip01(dead / n));
  } else if (axis == "E") {
    double ok = 0.0, incid = 0.0, agree = 0.0, n = 0.0;
    for (auto [t, k] : recs) {
      const RunRecord& rec = rec_of(t, k);
      ok += metric_or_throw(rec, "actuation_ok", missing);
      double sev = metric_or_throw(rec, "safety_severity", missing);
      if (sev > 0.0 && !p.severity_weights.empty()) {
        std::size_t level = static_cast<std::size_t>(std::llround(sev));
        level = std::min(level, p.severity_weights.size());
        incid += p.severity_weights[level - 1];
      } else if (sev > 0.0) {
        incid += 1.0;
      }
      agree += metric_or_throw(rec, "sim2real_agreement", missing);
      n += 1.0;
    }
    double g = clip01(ok / n) * clip01(1.0 - incid / n) * clip01(agree / n);
    ev.aggregate = std::cbrt(g);
  } else if (axis == "W") {
    ev.per_run = true;
    if (!(p.brier_ref > 0.0)) {
      throw ValidationError("axis W needs a positive reference brier");
    }
    for (auto [t, k] : recs) {
      double br = metric_or_throw(rec_of(t, k), "brier", missing);
      ev.run_values.push_back(1.0 - br / p.brier_ref);
    }
  } else if (axis == "$") {
    ev.per_run = true;
    if (!(p.throughput_scale > 0.0)) {
      throw ValidationError("axis $ needs a positive throughput scale");
    }
    for (auto [t, k] : recs) {
      double tph = metric_or_throw(rec_of(t, k), "tph", missing);
      double cph = metric_or_throw(rec_of(t, k), "cph", missing);
      double ratio = cph > 0.0 ? tph / cph : 1e18;
      ev.run_values.push_back(ratio / p.throughput_scale);
    }
  } else {
    throw ValidationError("unknown axis tag '" + axis + "'");
  }

  if (!missing.empty()) {
    std::string msg = "axis '" + axis + "' missing metrics:";
    for (const auto& k : missing) msg += " " + k;
    throw ValidationError(msg);
  }
  if (ev.per_run) {
    ev.aggregate = mean(ev.run_values);
  }
  return ev;
}

double clip_axis(double raw, double epsilon) {
  return std::max(epsilon, clip01(raw));
}

}  // namespace

double axis_value(const CanonicalRep& canon, const AgentRep& rep,
                  const std::string& axis, const AxisConfig& cfg) {
  if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0)) {
    throw ValidationError("axis clip floor must lie in (0,1)");
  }
  AxisEval ev = axis_eval(canon, rep, axis, cfg);
  return clip_axis(ev.aggregate, cfg.epsilon);
}

ScoreReport geometric_aai(const CanonicalRep& canon, const AgentRep& rep,
                          const AxisConfig& cfg) {
  if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0)) {
    throw ValidationError("axis clip floor must lie in (0,1)");
  }
  double total_w = 0.0;
  for (const auto& [tag, p] : cfg.axes) {
    if (p.weight < 0.0) throw ValidationError("negative axis weight");
    total_w += p.weight;
  }
  if (!(total_w > 0.0)) throw ValidationError("axis weights sum to zero");

  ScoreReport out;
  double acc = 0.0;
  for (const auto& [tag, p] : cfg.axes) {
    if (p.weight == 0.0) continue;
    AxisEval ev = axis_eval(canon, rep, tag, cfg);
    double mean_log;
    if (ev.per_run) {
      double s = 0.0;
      for (double v : ev.run_values) s += std::log(clip_axis(v, cfg.epsilon));
      mean_log = s / static_cast<double>(ev.run_values.size());
    } else {
      mean_log = std::log(clip_axis(ev.aggregate, cfg.epsilon));
    }
    acc += p.weight * mean_log;
    out.axis_values[tag] = clip_axis(ev.aggregate, cfg.epsilon);
  }
  out.value = std::exp(acc / total_w);
  for (std::size_t i = 0; i < rep.battery.tasks.size(); ++i) {
    out.runs_per_task[rep.battery.tasks[i].id] = rep.runs[i].size();
  }
  return out;
}

double lipschitz_modulus(const AxisConfig& cfg, double alpha) {
  if (!(alpha > 0.0)) throw ValidationError("alpha must be positive");
  if (!(cfg.epsilon > 0.0)) throw ValidationError("epsilon must be positive");
  double total_w = 0.0, acc = 0.0;
  for (const auto& [tag, p] : cfg.axes) {
    if (p.weight <= 0.0) continue;
    if (!(p.lipschitz > 0.0)) {
      throw ValidationError("axis '" + tag + "' lacks Lipschitz data");
    }
    total_w += p.weight;
    acc += p.weight * p.lipschitz;
  }
  if (!(total_w > 0.0)) throw ValidationError("axis weights sum to zero");
  return acc / (alpha * total_w * cfg.epsilon);
}

double score_moduli_point(const ModuliPoint& p, const Battery& b,
                          const UtilityFamily& psi, double lambda,
                          double gamma, const CostModel& cost) {
  if (p.tau.size() != b.n_tasks() || p.copula.dim() != b.n_tasks()) {
    throw ValidationError("moduli point does not match the battery");
  }
  std::vector<double> task_means(b.n_tasks(), 0.0);
  for (std::size_t a = 0; a < p.copula.size(); ++a) {
    double w = p.copula.weights[a];
    for (std::size_t t = 0; t < b.n_tasks(); ++t) {
      task_means[t] += w * psi(p.copula.atoms[a][t], p.tau[t]);
    }
  }
  double mean_cost = cost.weights.empty() ? 0.0 : cost(p.ray);
  return aggregate_tractable(b, task_means, lambda, gamma, mean_cost).value;
}

double tractable_moduli_lipschitz(const Battery& b, const UtilityFamily& psi,
                                  double lambda, double gamma,
                                  const CostModel& cost, double tau_min,
                                  double alpha, double beta, double gamma_w) {
  if (!(alpha > 0.0 && beta > 0.0 && gamma_w > 0.0)) {
    throw ValidationError("pair metric weights must be positive");
  }
  double s = psi.u_slope_bound(tau_min);
  double t_count = static_cast<double>(b.n_tasks());
  auto fams = b.family_names();
  double k_count = static_cast<double>(fams.size());

  double max_coef = 0.0;      // max_t w_k / |F_k|
  double sum_inv_size = 0.0;  // sum_k 1 / |F_k|
  double max_var_coef = 0.0;  // max_t 1 / |F_k|
  for (const auto& fam : fams) {
    double size = static_cast<double>(b.family_task_indices(fam).size());
    max_coef = std::max(max_coef, b.family_weights.at(fam) / size);
    sum_inv_size += 1.0 / size;
    max_var_coef = std::max(max_var_coef, 1.0 / size);
  }

  double l_cop = max_coef * s * t_count +
                 lambda * (2.0 / k_count) * s * t_count * sum_inv_size;
  double tau_slope = psi.uses_tau() ? 1.0 / std::max(tau_min, 1e-12) : 0.0;
  double l_tau =
      (max_coef + lambda * (2.0 / k_count) * max_var_coef) * tau_slope;
  double max_price = 0.0;
  for (double wj : cost.weights) max_price = std::max(max_price, wj);
  double l_ray = gamma * max_price;

  return std::max({l_cop / alpha, l_tau / beta, l_ray / gamma_w});
}

ScoreReport score_agent(const CanonicalRep& canon, const AgentRep& rep,
                        const FunctionalConfig& cfg) {
  if (cfg.functional == "tractable")
    return tractable_phi(canon, rep.battery, cfg.psi, cfg.lambda, cfg.gamma,
                         cfg.cost);
  if (cfg.functional == "geometric") return geometric_aai(canon, rep, cfg.axes);
  throw ValidationError("unknown functional '" + cfg.functional + "'");
}

}  // namespace aai
