#include "aai/simulator.hpp"

#include <algorithm>
#include <cmath>

#include "aai/mathutil.hpp"

namespace aai {

void ScoreLaw::validate() const {
  if (kind == Kind::beta) {
    if (!(a > 0.0 && b > 0.0)) {
      throw ValidationError("beta law needs positive shapes");
    }
    return;
  }
  if (values.empty() || values.size() != probs.size()) {
    throw ValidationError("discrete law needs matching values and probs");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0 && !(values[i] > values[i - 1])) {
      throw ValidationError("discrete support must be strictly increasing");
    }
    if (!(probs[i] > 0.0)) {
      throw ValidationError("discrete law needs positive probabilities");
    }
    total += probs[i];
  }
  if (std::fabs(total - 1.0) > 1e-9) {
    throw ValidationError("discrete probabilities must sum to 1");
  }
}

double ScoreLaw::quantile(double u) const {
  if (kind == Kind::beta) return beta_quantile(a, b, u);
  double acc = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    acc += probs[i];
    if (u <= acc) return values[i];
  }
  return values.back();
}

std::pair<double, double> ScoreLaw::cdf_pair(double x) const {
  if (kind != Kind::discrete) {
    throw ValidationError("exact CDF only for discrete laws");
  }
  double below = 0.0, at = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] < x) below += probs[i];
    if (values[i] == x) at = probs[i];
  }
  return {below, below + at};
}

std::vector<RunRecord> generate_runs(const SyntheticAgent& agent,
                                     const Battery& b, int n_per_task,
                                     const RandomStream& stream,
                                     const std::string& drift,
                                     double resource_level) {
  std::size_t t_count = b.n_tasks();
  if (agent.score_laws.size() != t_count) {
    throw ValidationError("agent score laws do not match the battery");
  }
  for (const auto& law : agent.score_laws) law.validate();
  if (agent.resources.size() != b.n_resources()) {
    throw ValidationError("agent resource laws do not match the battery");
  }
  if (n_per_task <= 0) throw ValidationError("need n_per_task >= 1");

  std::vector<std::vector<double>> chol;
  if (!agent.correlation.empty()) {
    if (agent.correlation.size() != t_count) {
      throw ValidationError("correlation matrix does not match the battery");
    }
    for (const auto& row : agent.correlation) {
      if (row.size() != t_count) {
        throw ValidationError("correlation matrix is not square");
      }
    }
    chol = cholesky(agent.correlation);  // throws when not PSD
  }

  std::vector<RunRecord> out;
  out.reserve(t_count * static_cast<std::size_t>(n_per_task));
  for (std::size_t ti = 0; ti < t_count; ++ti) {
    for (int i = 0; i < n_per_task; ++i) {
      RunRecord rec;
      rec.task_id = b.tasks[ti].id;
      rec.seed = i;
      rec.drift = drift;

      double z;
      if (chol.empty()) {
        z = stream.normal("sim_z", static_cast<std::uint64_t>(i), ti);
      } else {
        z = 0.0;
        for (std::size_t k = 0; k <= ti; ++k) {
          z += chol[ti][k] *
               stream.normal("sim_z", static_cast<std::uint64_t>(i), k);
        }
      }
      double u = clamp(normal_cdf(z), 1e-15, 1.0 - 1e-15);
      ScoreLaw law = agent.score_laws[ti];
      if (law.kind == ScoreLaw::Kind::beta) {
        law.a += agent.improvement_rate * resource_level;
      }
      rec.score = law.quantile(u);

      rec.resources.resize(b.n_resources());
      for (std::size_t j = 0; j < b.n_resources(); ++j) {
        const ResourceLaw& rl = agent.resources[j];
        if (rl.kind == ResourceLaw::Kind::constant) {
          rec.resources[j] = rl.value;
        } else {
          double g = stream.normal("sim_r", ti,
                                   static_cast<std::uint64_t>(i), j);
          rec.resources[j] = std::exp(rl.mu + rl.sigma * g);
        }
      }

      for (const auto& [key, gen] : agent.metrics) {
        std::uint64_t kh = RandomStream::hash_str(key);
        double v = 0.0;
        switch (gen.kind) {
          case MetricGen::Kind::constant:
            v = gen.value;
            break;
          case MetricGen::Kind::uniform:
            v = gen.lo + (gen.hi - gen.lo) *
                             stream.u01("sim_m", kh, ti,
                                        static_cast<std::uint64_t>(i));
            break;
          case MetricGen::Kind::bernoulli:
            v = stream.u01("sim_m", kh, ti,
                           static_cast<std::uint64_t>(i)) < gen.p
                    ? 1.0
                    : 0.0;
            break;
        }
        rec.metrics[key] = v;
      }
      out.push_back(std::move(rec));
    }
  }
  return out;
}

double oracle_aligned_threshold(const ScoreLaw& law, double q_star) {
  auto [lo, hi] = law.cdf_pair(q_star);
  return lo + 0.5 * (hi - lo);
}

double expected_psi_uniform(const UtilityFamily& psi, double tau) {
  switch (psi.shape) {
    case UtilityFamily::Shape::ramp:
      if (tau <= 0.0) return 1.0;
      return 1.0 - 0.5 * tau;
    case UtilityFamily::Shape::exp_sat:
      return 1.0 / (1.0 - std::exp(-psi.c)) - 1.0 / psi.c;
  }
  return 0.0;
}

double oracle_phi_exact(const SyntheticAgent& agent, const Battery& b,
                        const UtilityFamily& psi, double lambda, double gamma,
                        const CostModel& cost) {
  if (agent.score_laws.size() != b.n_tasks()) {
    throw ValidationError("agent score laws do not match the battery");
  }
  for (const auto& law : agent.score_laws) {
    law.validate();
    if (law.kind != ScoreLaw::Kind::discrete) {
      throw ValidationError("exact oracle needs finite score laws");
    }
  }
  std::vector<double> fixed_resources(b.n_resources());
  if (agent.resources.size() != b.n_resources()) {
    throw ValidationError("agent resource laws do not match the battery");
  }
  for (std::size_t j = 0; j < agent.resources.size(); ++j) {
    if (agent.resources[j].kind != ResourceLaw::Kind::constant) {
      throw ValidationError("exact oracle needs constant resources");
    }
    fixed_resources[j] = agent.resources[j].value;
  }

  // On the canonical scale the per-task term depends on the law only
  // through the exact aligned threshold, so per-task enumeration suffices.
  std::vector<double> task_means(b.n_tasks());
  for (std::size_t i = 0; i < b.n_tasks(); ++i) {
    double tau =
        oracle_aligned_threshold(agent.score_laws[i], b.tasks[i].q_star);
    task_means[i] = expected_psi_uniform(psi, tau);
  }
  double mean_cost = cost.weights.empty() ? 0.0 : cost(fixed_resources);
  return aggregate_tractable(b, task_means, lambda, gamma, mean_cost).value;
}

}  // namespace aai
