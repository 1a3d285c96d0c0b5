#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "aai/battery.hpp"
#include "aai/canonical.hpp"
#include "aai/functionals.hpp"
#include "aai/rng.hpp"

namespace aai {

// One joint success/failure pattern across tasks.
using CoreCell = std::vector<std::uint8_t>;

// Empirical law of the joint indicator vector plus the thresholds that
// define the cells. Everything downstream of the core sees only this.
struct CoreRep {
  std::vector<std::string> task_ids;
  std::vector<double> tau;
  std::map<CoreCell, double> cells;  // probabilities, sum to 1
  std::size_t n_samples = 0;
};

CoreRep project_core(const CanonicalRep& canon, const RandomStream& stream);

// Maximum-entropy coupling consistent with the core: sample a cell, then
// draw each coordinate uniformly on [tau,1] (success) or [0,tau) (failure).
// A failing cell at tau == 0 has no room and is an error. The lift carries
// no resource data of its own; reference_resources fills that slot.
CanonicalRep max_entropy_lift(const CoreRep& core, int n_samples,
                              const RandomStream& stream,
                              const std::vector<double>& reference_resources);

// Score of the core alone: functional applied to the max-entropy lift.
// Only the tractable functional is defined on lifts (no metrics survive
// the projection).
double aai_core(const CoreRep& core, const Battery& b,
                const FunctionalConfig& cfg, const RandomStream& stream,
                const std::vector<double>& reference_resources);

// Invariant of the non-core directions: a function of the joint canonical
// sample (u, r) forced to mean zero inside every core cell.
struct NonCoreInvariant {
  std::string name;
  std::function<double(std::span<const double> u, std::span<const double> r)>
      eval;
  std::map<CoreCell, double> centers;
  bool centered = false;
  int center_samples = 0;
  std::uint64_t center_state = 0;  // stream identity used for centering

  double centered_value(const CoreCell& cell, std::span<const double> u,
                        std::span<const double> r) const;
};

// Fills the centering table: per cell, the Monte-Carlo mean of the raw
// invariant under the max-entropy cell law with keyed draws (deterministic,
// so the residual check can replay them exactly).
void center_invariant(NonCoreInvariant& inv, const CoreRep& core, int n_mc,
                      const RandomStream& stream,
                      const std::vector<double>& reference_resources);

// Verifies the centering table replays to zero residual for every cell the
// canon visits; throws ValidationError above 1e-9.
void check_centering(const NonCoreInvariant& inv, const CoreRep& core,
                     const std::vector<double>& reference_resources);

// Continuation score: core score plus theta-weighted means of centered
// invariants over the canon's joint samples.
double continuation_value(const CanonicalRep& canon, const Battery& b,
                          const FunctionalConfig& cfg,
                          std::span<const double> theta,
                          const std::vector<NonCoreInvariant>& invariants,
                          const RandomStream& stream);

struct CalibrationResult {
  std::vector<double> theta;
  double residual = 0.0;        // l2 of the least-squares residual
  double smallest_singular = 0.0;
};

// Least-squares fit of theta against observed scores; the design matrix is
// E[Z_j] per rep. Rank failure (smallest singular value <= 1e-8) throws.
CalibrationResult calibrate_theta(
    const std::vector<CanonicalRep>& reps, std::span<const double> targets,
    const Battery& b, const FunctionalConfig& cfg,
    const std::vector<NonCoreInvariant>& invariants,
    const RandomStream& stream);

// Envelope of continuations over a finite class of centered invariants:
// core score plus the min/max invariant mean.
std::pair<double, double> envelopes(
    const CanonicalRep& canon, const Battery& b, const FunctionalConfig& cfg,
    const std::vector<NonCoreInvariant>& f_class, const RandomStream& stream);

// Parses a small arithmetic expression over run fields into an invariant
// evaluator. Identifiers: u0,u1,... (canonical scores), r0,r1,...
// (resources); operators + - * /; functions min(a,b), max(a,b), abs(a).
std::function<double(std::span<const double>, std::span<const double>)>
parse_invariant_expression(const std::string& text);

}  // namespace aai
