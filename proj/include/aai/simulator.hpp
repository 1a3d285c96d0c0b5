#pragma once

#include <map>
#include <string>
#include <vector>

#include "aai/battery.hpp"
#include "aai/functionals.hpp"
#include "aai/rng.hpp"

namespace aai {

struct ScoreLaw {
  enum class Kind { beta, discrete };
  Kind kind = Kind::beta;
  double a = 2.0, b = 2.0;           // beta shapes
  std::vector<double> values;        // discrete support, strictly increasing
  std::vector<double> probs;         // positive, sums to 1

  void validate() const;
  double quantile(double u) const;
  // Exact (F(x-), F(x)) for discrete laws.
  std::pair<double, double> cdf_pair(double x) const;
};

struct ResourceLaw {
  enum class Kind { constant, lognormal };
  Kind kind = Kind::constant;
  double value = 1.0;  // constant
  double mu = 0.0, sigma = 1.0;  // lognormal parameters
};

struct MetricGen {
  enum class Kind { constant, uniform, bernoulli };
  Kind kind = Kind::constant;
  double value = 0.0;
  double lo = 0.0, hi = 1.0;
  double p = 0.5;
};

struct SyntheticAgent {
  std::vector<ScoreLaw> score_laws;               // one per battery task
  std::vector<std::vector<double>> correlation;   // Gaussian copula; empty=id
  std::vector<ResourceLaw> resources;             // one per resource
  std::map<std::string, MetricGen> metrics;
  double improvement_rate = 0.0;  // beta 'a' shift per unit resource level
};

// n runs per task; cross-task dependence realized by one Gaussian copula
// draw per run index. Every draw is keyed, so records are reproducible.
std::vector<RunRecord> generate_runs(const SyntheticAgent& agent,
                                     const Battery& b, int n_per_task,
                                     const RandomStream& stream,
                                     const std::string& drift = "none",
                                     double resource_level = 0.0);

// Exact value of the tractable score under the agent's law: on the
// canonical scale the per-task expectation is a closed form in the exact
// aligned threshold, so finite score laws and constant resources admit
// exact enumeration. Beta laws or random resources are an error.
double oracle_phi_exact(const SyntheticAgent& agent, const Battery& b,
                        const UtilityFamily& psi, double lambda, double gamma,
                        const CostModel& cost);

// Exact aligned threshold of a discrete law at threshold q_star (midpoint
// of the CDF jump when q_star sits on an atom).
double oracle_aligned_threshold(const ScoreLaw& law, double q_star);

// E[psi(U, tau)] for U uniform on [0,1]: the canonical-scale per-task term.
double expected_psi_uniform(const UtilityFamily& psi, double tau);

}  // namespace aai
