#include "aai/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "aai/mathutil.hpp"

namespace aai {

namespace {

double percentile(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw ValidationError("percentile of empty sample");
  double h = p * static_cast<double>(sorted.size() - 1);
  std::size_t lo = static_cast<std::size_t>(std::floor(h));
  std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  double frac = h - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace

double concentration_c_default(const Battery& battery) {
  double max_coef = 0.0;
  for (const auto& fam : battery.family_names()) {
    double size =
        static_cast<double>(battery.family_task_indices(fam).size());
    max_coef = std::max(max_coef, battery.family_weights.at(fam) / size);
  }
  double v = max_coef * static_cast<double>(battery.n_tasks());
  return 0.5 * v * v;
}

double concentration_k_default(const Battery& battery) {
  double k_fam = static_cast<double>(battery.family_names().size());
  return 2.0 * std::sqrt(std::log(4.0 * k_fam) / 2.0);
}

double concentration_bound(const Battery& battery,
                           const ConcentrationParams& params, int n_per_task) {
  if (n_per_task < 1) throw ValidationError("need at least one run per task");
  if (!(params.delta_p > 0.0 && params.delta_p < 1.0))
    throw ValidationError("failure probability must lie in (0, 1)");
  double c = params.c_constant < 0.0 ? concentration_c_default(battery)
                                     : params.c_constant;
  double k = params.k_constant < 0.0 ? concentration_k_default(battery)
                                     : params.k_constant;
  double n = static_cast<double>(n_per_task);
  double t = static_cast<double>(battery.n_tasks());
  return params.lipschitz *
             std::sqrt(c * std::log(2.0 / params.delta_p) / (n * t)) +
         params.lambda * k / std::sqrt(n);
}

CoverageResult empirical_coverage(const Battery& battery,
                                  const SyntheticAgent& agent,
                                  const FunctionalConfig& cfg,
                                  const ConcentrationParams& params,
                                  int n_per_task, int replications,
                                  const RandomStream& stream, Exec exec) {
  if (replications < 1) throw ValidationError("need at least one replication");
  CoverageResult out;
  out.replications = replications;
  out.oracle =
      oracle_phi_exact(agent, battery, cfg.psi, cfg.lambda, cfg.gamma, cfg.cost);
  out.bound = concentration_bound(battery, params, n_per_task);

  std::vector<char> violated(static_cast<std::size_t>(replications), 0);
  parallel_for(static_cast<std::size_t>(replications), exec,
               [&](std::size_t r) {
                 auto records = generate_runs(agent, battery, n_per_task,
                                              stream.child("coverage_gen", r));
                 AgentRep rep = make_agent_rep(battery, records);
                 CanonicalRep canon =
                     canonicalize(rep, stream.child("coverage_pit", r));
                 double value = tractable_phi(canon, battery, cfg.psi,
                                              cfg.lambda, cfg.gamma, cfg.cost)
                                    .value;
                 violated[r] = std::abs(value - out.oracle) > out.bound;
               });
  for (char v : violated) out.violations += v;
  out.violation_rate =
      static_cast<double>(out.violations) / static_cast<double>(replications);
  return out;
}

BootstrapResult bootstrap_ci(const AgentRep& rep, const FunctionalConfig& cfg,
                             int replicates, double level,
                             const RandomStream& pit_stream,
                             const RandomStream& boot_stream, Exec exec) {
  if (replicates < 2) throw ValidationError("need at least two replicates");
  if (!(level > 0.0 && level < 1.0))
    throw ValidationError("confidence level must lie in (0, 1)");
  for (std::size_t t = 0; t < rep.runs.size(); ++t)
    if (rep.runs[t].empty())
      throw InsufficientRuns("task '" + rep.battery.tasks[t].id +
                             "' has no runs to resample");

  const auto fams = rep.battery.family_names();
  std::vector<double> values(static_cast<std::size_t>(replicates), 0.0);

  parallel_for(static_cast<std::size_t>(replicates), exec, [&](std::size_t b) {
    Battery boot = rep.battery;
    boot.tasks.clear();
    boot.sampling_weights.clear();
    AgentRep boot_rep;
    std::size_t slot = 0;
    for (std::size_t fi = 0; fi < fams.size(); ++fi) {
      auto members = rep.battery.family_task_indices(fams[fi]);
      for (std::size_t s = 0; s < members.size(); ++s) {
        double pick_u = boot_stream.u01("boot_task", b, fi, s);
        std::size_t pick = members[std::min(
            members.size() - 1,
            static_cast<std::size_t>(pick_u *
                                     static_cast<double>(members.size())))];
        const TaskSpec& src = rep.battery.tasks[pick];
        boot.tasks.push_back(
            TaskSpec{"slot" + std::to_string(slot), src.family, src.q_star,
                     src.axis});
        const auto& pool = rep.runs[pick];
        std::vector<RunRecord> drawn;
        drawn.reserve(pool.size());
        for (std::size_t j = 0; j < pool.size(); ++j) {
          double run_u = boot_stream.u01("boot_run", b, slot, j);
          RunRecord r = pool[std::min(
              pool.size() - 1,
              static_cast<std::size_t>(run_u *
                                       static_cast<double>(pool.size())))];
          // The record keeps its original randomization identity, so the
          // replicate reuses the sample's xi draws instead of fresh ones.
          r.task_id = boot.tasks.back().id;
          drawn.push_back(std::move(r));
        }
        boot_rep.runs.push_back(std::move(drawn));
        ++slot;
      }
    }
    boot_rep.battery = std::move(boot);
    CanonicalRep canon = canonicalize(boot_rep, pit_stream);
    values[b] = score_agent(canon, boot_rep, cfg).value;
  });

  std::sort(values.begin(), values.end());
  BootstrapResult out;
  out.level = level;
  out.lo = percentile(values, (1.0 - level) / 2.0);
  out.hi = percentile(values, 1.0 - (1.0 - level) / 2.0);
  out.values = std::move(values);
  return out;
}

double drift_stability_bound(const DriftParams& p, std::size_t n_tasks) {
  if (p.l_phi < 0.0 || p.alpha < 0.0 || p.beta < 0.0 || p.gamma_w < 0.0 ||
      p.copula_shift < 0.0 || p.tau_shift < 0.0 || p.resource_bound < 0.0 ||
      p.scale_shift < 0.0)
    throw ValidationError("drift parameters must be nonnegative");
  return p.l_phi * (p.alpha * p.copula_shift +
                    p.beta * static_cast<double>(n_tasks) * p.tau_shift) +
         p.gamma_w * p.resource_bound * p.scale_shift;
}

WorstCase worst_case_over_region(const RegionSpec& region,
                                 const PointFunctional& f, int probes,
                                 const RandomStream& stream, Exec exec) {
  if (probes < 1) throw ValidationError("need at least one probe");
  std::vector<ModuliPoint> points(static_cast<std::size_t>(probes));
  std::vector<double> scores(static_cast<std::size_t>(probes), 0.0);
  RandomStream probe_stream = stream.child("region_probe");
  parallel_for(static_cast<std::size_t>(probes), exec, [&](std::size_t i) {
    points[i] = i == 0 ? region.base
                       : sample_region_point(region, probe_stream, i);
    scores[i] = f(points[i]);
  });
  WorstCase out;
  out.min_value = std::numeric_limits<double>::infinity();
  out.max_value = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] < out.min_value) {
      out.min_value = scores[i];
      out.argmin_index = i;
    }
    out.max_value = std::max(out.max_value, scores[i]);
  }
  out.argmin = points[out.argmin_index];
  return out;
}

KappaResult kappa_from_curve(std::span<const double> resource,
                             std::span<const double> score) {
  if (resource.size() != score.size())
    throw ValidationError("resource and score curves differ in length");
  if (resource.size() < 2)
    throw ValidationError("improvement rate needs at least two checkpoints");
  for (std::size_t i = 1; i < resource.size(); ++i)
    if (!(resource[i] > resource[i - 1]))
      throw ValidationError("checkpoint resources must be strictly increasing");

  std::size_t n = resource.size();
  std::size_t window = std::max<std::size_t>(
      2, static_cast<std::size_t>(
             std::ceil(0.2 * static_cast<double>(n))));
  window = std::min(window, n);

  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < window; ++i) {
    mx += resource[i];
    my += score[i];
  }
  mx /= static_cast<double>(window);
  my /= static_cast<double>(window);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < window; ++i) {
    sxy += (resource[i] - mx) * (score[i] - my);
    sxx += (resource[i] - mx) * (resource[i] - mx);
  }
  KappaResult out;
  out.window = static_cast<int>(window);
  out.kappa_abs = sxy / sxx;
  if (score[0] <= 0.0)
    throw ValidationError(
        "relative improvement needs a positive base score");
  out.kappa_rel = out.kappa_abs / score[0];
  return out;
}

ConcordanceResult anchor_concordance(std::span<const double> anchor,
                                     std::span<const double> scores,
                                     double threshold) {
  ConcordanceResult out;
  out.threshold = threshold;
  out.tau = kendall_tau(anchor, scores);
  out.trigger = out.tau < threshold;
  return out;
}

ConcordanceResult anchor_concordance(std::span<const std::string> ranking_a,
                                     std::span<const std::string> ranking_b,
                                     double threshold) {
  if (ranking_a.size() != ranking_b.size())
    throw ValidationError("rankings differ in length");
  std::map<std::string, double> pos_a;
  for (std::size_t i = 0; i < ranking_a.size(); ++i) {
    if (!pos_a.emplace(ranking_a[i], static_cast<double>(i)).second)
      throw ValidationError("duplicate id '" + ranking_a[i] + "' in ranking");
  }
  std::vector<double> a, b;
  a.reserve(ranking_b.size());
  b.reserve(ranking_b.size());
  for (std::size_t i = 0; i < ranking_b.size(); ++i) {
    auto it = pos_a.find(ranking_b[i]);
    if (it == pos_a.end())
      throw ValidationError("rankings cover different id sets ('" +
                            ranking_b[i] + "' unmatched)");
    a.push_back(it->second);
    b.push_back(static_cast<double>(i));
  }
  return anchor_concordance(a, b, threshold);
}

}  // namespace aai
