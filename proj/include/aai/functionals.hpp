#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aai/battery.hpp"
#include "aai/canonical.hpp"
#include "aai/moduli.hpp"

namespace aai {

// Per-task utility applied on the canonical scale.
struct UtilityFamily {
  enum class Shape { ramp, exp_sat };
  Shape shape = Shape::ramp;
  double c = 4.0;  // exp_sat curvature, > 0

  // ramp: min(u/tau, 1), and 1 when tau == 0 (nothing to clear).
  // exp_sat: (1 - e^{-c u}) / (1 - e^{-c}); threshold-free.
  double operator()(double u, double tau) const;

  // Upper bound on |d psi / d u| over u in [0,1], tau >= tau_min.
  double u_slope_bound(double tau_min) const;
  bool uses_tau() const { return shape == Shape::ramp; }
};

struct CostModel {
  std::vector<double> weights;  // linear resource prices
  double cap = 1e18;            // hard budget B

  double operator()(std::span<const double> r) const;
};

struct AxisParams {
  double weight = 0.0;
  double lipschitz = 0.0;  // L_x when known; required by lipschitz_modulus

  // Anchors; each axis reads only its own.
  double horizon = 100.0;                           // A, and R's autonomy
  std::map<std::string, double> family_thresholds;  // G
  double depth_anchor = 10.0;                       // P
  double half_life = 10.0;                          // M
  std::vector<double> categories;                   // T
  double discovery_anchor = 10.0;                   // T
  std::vector<double> severity_weights;             // E
  double brier_ref = 0.25;                          // W
  double throughput_scale = 1.0;                    // $
};

struct AxisConfig {
  std::map<std::string, AxisParams> axes;  // keyed by tag
  double epsilon = 0.01;                   // clip floor
};

struct FunctionalConfig {
  std::string functional = "tractable";  // or "geometric"
  UtilityFamily psi;
  double lambda = 0.0;
  double gamma = 0.0;
  CostModel cost;
  AxisConfig axes;
  // Weights of the pair metric d# = alpha*W1 + beta*||dtau||_1 + gamma_w*d_ray.
  double alpha = 1.0;
  double beta = 1.0;
  double gamma_w = 1.0;
  int lift_samples = 10000;
};

struct ScoreReport {
  double value = 0.0;
  double weighted_mean = 0.0;       // sum_k w_k * family mean
  double dispersion_penalty = 0.0;  // lambda * Var_k(family means)
  double cost_penalty = 0.0;        // gamma * mean cost
  std::vector<std::pair<std::string, double>> family_means;  // sorted
  std::map<std::string, double> axis_values;                 // geometric
  std::map<std::string, std::size_t> runs_per_task;
};

// Aggregation core shared by the tractable score and by embeddings of the
// geometric index: task_means[i] is the per-run mean of any per-task value.
ScoreReport aggregate_tractable(const Battery& b,
                                std::span<const double> task_means,
                                double lambda, double gamma, double mean_cost);

// Dispersion penalty on a vector of family means (population variance).
double dispersion_penalty(std::span<const double> family_means, double lambda);

ScoreReport tractable_phi(const CanonicalRep& canon, const Battery& b,
                          const UtilityFamily& psi, double lambda, double gamma,
                          const CostModel& cost);

// Single axis score in [epsilon, 1]. Axes with per-run semantics
// (A P M R W $) average per-run values; G T S E are population functionals.
// Missing required metrics raise ValidationError naming the keys.
double axis_value(const CanonicalRep& canon, const AgentRep& rep,
                  const std::string& axis, const AxisConfig& cfg);

// Geometric mean of axis scores: exp(W^-1 sum_x w_x mean[log pi_x]) where
// per-run axes contribute the mean of per-run logs.
ScoreReport geometric_aai(const CanonicalRep& canon, const AgentRep& rep,
                          const AxisConfig& cfg);

// L = (sum_x w_x L_x) / (alpha * W * epsilon): regularity modulus of the
// geometric index on the moduli coordinates.
double lipschitz_modulus(const AxisConfig& cfg, double alpha);

// Dispatch on cfg.functional ("tractable" or "geometric").
ScoreReport score_agent(const CanonicalRep& canon, const AgentRep& rep,
                        const FunctionalConfig& cfg);

// Tractable score read off moduli coordinates (copula atoms, tau, ray);
// costs apply to the ray. Used for panel scoring and region probes.
double score_moduli_point(const ModuliPoint& p, const Battery& b,
                          const UtilityFamily& psi, double lambda, double gamma,
                          const CostModel& cost);

// Conservative Lipschitz modulus of score_moduli_point w.r.t. the pair
// metric with weights (alpha, beta, gamma_w), valid while every tau in the
// region stays >= tau_min.
double tractable_moduli_lipschitz(const Battery& b, const UtilityFamily& psi,
                                  double lambda, double gamma,
                                  const CostModel& cost, double tau_min,
                                  double alpha, double beta, double gamma_w);

}  // namespace aai
