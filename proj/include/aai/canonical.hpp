#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "aai/battery.hpp"
#include "aai/rng.hpp"

namespace aai {

// Thrown when a task has no usable runs; the CLI maps it to exit code 3.
struct InsufficientRuns : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class EmpiricalCDF {
 public:
  static EmpiricalCDF from_samples(std::vector<double> samples);

  int n() const { return n_; }
  // (F(x-), F(x)): left limit and value. Equal except at sample atoms.
  std::pair<double, double> eval(double x) const;

 private:
  std::vector<double> values_;  // sorted unique
  std::vector<double> cum_;     // F at each value
  int n_ = 0;
};

// u = F(s-) + xi * (F(s) - F(s-)). Strictly increasing score relabelings
// leave ranks alone, so the same xi stream gives bit-identical u.
double randomized_pit(const EmpiricalCDF& cdf, double s, double xi);

// Threshold on the canonical scale; at an atom of F the midpoint of the
// jump is used so success indicators are reparameterization-stable.
double aligned_threshold(const EmpiricalCDF& cdf, double q_star);

struct CanonicalRep {
  std::vector<std::string> task_ids;
  std::vector<double> tau;                 // per task
  std::vector<std::vector<double>> u;      // per task, per run (record order)
  std::vector<std::vector<std::uint8_t>> q;
  std::vector<double> ray;                 // l1-normalized resource direction
  std::vector<double> mean_resources;      // absolute mean, kept for costs
  std::vector<std::vector<double>> run_resources;  // all records, task-major
  std::uint64_t master_seed = 0;
  bool ray_is_reference = false;  // true for lifted reps

  std::size_t n_tasks() const { return task_ids.size(); }
};

struct CanonicalizeOptions {
  // When set, the PIT conditions on the drift label: each record's u comes
  // from the empirical CDF of its own (task, drift) stratum. Thresholds
  // stay pooled per task so q = 1{u >= tau} keeps a single tau per task.
  bool per_drift = false;
};

CanonicalRep canonicalize(const AgentRep& rep, const RandomStream& stream,
                          const CanonicalizeOptions& opts = {});

// Replaces each joint sample by the per-coordinate mean of its dyadic cell
// at scale 2^-level. Requires aligned run counts across tasks. Success
// indicators are recomputed; tau and the ray are untouched.
CanonicalRep dyadic_coarsen(const CanonicalRep& canon, int level);

}  // namespace aai
