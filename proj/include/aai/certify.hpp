#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "aai/functionals.hpp"
#include "aai/moduli.hpp"
#include "aai/parallel.hpp"
#include "aai/rng.hpp"

namespace aai {

// Thrown when the candidate budget runs out before the net covers the
// region; the CLI maps it to exit code 4.
struct BudgetExhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Product region around a base point: a threshold box, a W1 ball realized
// by displacement interpolation, and a ray ball on the simplex.
struct RegionSpec {
  ModuliPoint base;
  double rho = 0.0;        // copula ball radius (W1)
  double delta_tau = 0.0;  // per-coordinate threshold half-width
  double delta_ray = 0.0;  // ray ball radius (l1 between unit rays)
};

// Deterministic sample of the region; distinct indices give independent
// points under the keyed stream.
ModuliPoint sample_region_point(const RegionSpec& region,
                                const RandomStream& stream,
                                std::uint64_t index);

struct Panel {
  std::vector<ModuliPoint> points;
  std::vector<double> scores;   // filled by score_panel
  double target_delta = 0.0;
  double achieved_radius = 0.0;  // empirical covering radius
  bool covering_failed = false;
  long long candidates_tried = 0;
  int grid_denom = 0;
};

// Greedy farthest-point net: candidates are sampled from the region,
// snapped to the 1/ceil(4/delta) grid, and kept when farther than delta/2
// from the panel. Stops after 1000 consecutive covered candidates, then
// validates the covering radius on fresh samples (repairing with extra
// points while budget remains).
Panel build_delta_net(const RegionSpec& region, double delta, long long budget,
                      double alpha, double beta, double gamma_w,
                      const RandomStream& stream);

using PointFunctional = std::function<double(const ModuliPoint&)>;

void score_panel(Panel& panel, const PointFunctional& f,
                 Exec exec = Exec::parallel);

struct CertificationReport {
  double threshold = 0.0;
  double margin = 0.0;
  double lipschitz = 0.0;
  double delta = 0.0;  // achieved covering radius
  double min_panel_score = 0.0;
  double max_panel_score = 0.0;
  double lower_bound = 0.0;  // min panel score - 2 L delta
  bool panel_pass = false;
  bool bound_pass = false;
  bool pass = false;
  bool covering_failed = false;
  std::size_t panel_size = 0;
};

CertificationReport certify(const Panel& panel, double threshold,
                            double margin, double lipschitz);

struct DeterminacyReport {
  double max_panel_disagreement = 0.0;
  double bound = 0.0;  // disagreement + (L_f + L_g) * delta
};

// Sup-norm control of |f - g| over the region from panel agreement.
DeterminacyReport determinacy_check(const Panel& panel,
                                    const PointFunctional& f,
                                    const PointFunctional& g, double l_f,
                                    double l_g, Exec exec = Exec::parallel);

}  // namespace aai
