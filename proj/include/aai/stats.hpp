#pragma once

#include <span>
#include <vector>

#include "aai/canonical.hpp"
#include "aai/certify.hpp"
#include "aai/functionals.hpp"
#include "aai/parallel.hpp"
#include "aai/simulator.hpp"

namespace aai {

// Finite-sample deviation bound for the tractable score. Negative C or K
// select the battery-derived defaults.
struct ConcentrationParams {
  double lipschitz = 1.0;
  double c_constant = -1.0;
  double k_constant = -1.0;
  double delta_p = 0.05;   // failure probability
  double lambda = 0.0;     // dispersion penalty weight in the functional
};

double concentration_c_default(const Battery& battery);
double concentration_k_default(const Battery& battery);
double concentration_bound(const Battery& battery,
                           const ConcentrationParams& params, int n_per_task);

struct CoverageResult {
  double bound = 0.0;
  double oracle = 0.0;
  double violation_rate = 0.0;
  int violations = 0;
  int replications = 0;
};

// Monte Carlo check of the concentration bound against the closed-form
// score of a synthetic agent.
CoverageResult empirical_coverage(const Battery& battery,
                                  const SyntheticAgent& agent,
                                  const FunctionalConfig& cfg,
                                  const ConcentrationParams& params,
                                  int n_per_task, int replications,
                                  const RandomStream& stream,
                                  Exec exec = Exec::parallel);

struct BootstrapResult {
  double lo = 0.0;
  double hi = 0.0;
  double level = 0.0;
  std::vector<double> values;  // sorted replicate scores
};

// Two-stage percentile bootstrap: tasks are resampled within families,
// then runs within each resampled task. Replicates reuse the original
// per-record randomization, so a replicate equal to the sample scores
// identically to it.
BootstrapResult bootstrap_ci(const AgentRep& rep, const FunctionalConfig& cfg,
                             int replicates, double level,
                             const RandomStream& pit_stream,
                             const RandomStream& boot_stream,
                             Exec exec = Exec::parallel);

// Drift scenario: the copula moves at most epsilon in W1, every threshold
// at most tau_shift, and resources rescale by at most (1 + scale_shift);
// the cost term is capped at resource_bound, which bounds its change.
struct DriftParams {
  double l_phi = 0.0;
  double alpha = 1.0;
  double beta = 1.0;
  double gamma_w = 1.0;
  double copula_shift = 0.0;    // epsilon, W1
  double tau_shift = 0.0;       // per-coordinate threshold shift
  double resource_bound = 0.0;  // cost cap B
  double scale_shift = 0.0;     // |Delta scale|
};

double drift_stability_bound(const DriftParams& p, std::size_t n_tasks);

struct WorstCase {
  double min_value = 0.0;
  double max_value = 0.0;
  std::size_t argmin_index = 0;
  ModuliPoint argmin;
};

// Sampled minimum of a functional over a region; probe 0 is the base point.
WorstCase worst_case_over_region(const RegionSpec& region,
                                 const PointFunctional& f, int probes,
                                 const RandomStream& stream,
                                 Exec exec = Exec::parallel);

struct KappaResult {
  double kappa_abs = 0.0;
  double kappa_rel = 0.0;
  int window = 0;
};

// Early-window least-squares slope of a score-versus-resource curve. The
// window is the first max(2, ceil(0.2 n)) checkpoints; resources must be
// strictly increasing.
KappaResult kappa_from_curve(std::span<const double> resource,
                             std::span<const double> score);

struct ConcordanceResult {
  double tau = 0.0;
  bool trigger = false;
  double threshold = 0.0;
};

// Kendall rank agreement between anchor scores and battery scores; the
// trigger fires when agreement drops below the threshold.
ConcordanceResult anchor_concordance(std::span<const double> anchor,
                                     std::span<const double> scores,
                                     double threshold);

// Same agreement computed from two orderings of one id set; the rankings
// must contain exactly the same ids.
ConcordanceResult anchor_concordance(std::span<const std::string> ranking_a,
                                     std::span<const std::string> ranking_b,
                                     double threshold);

}  // namespace aai
