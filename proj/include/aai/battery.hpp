#pragma once

#include <cstdint>
#include <stdexcept>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace aai {

// Thrown for structural problems in batteries, configs, or symmetry inputs.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct TaskSpec {
  std::string id;
  std::string family;
  double q_star = 0.0;   // success threshold on the task's score scale
  std::string axis;      // optional tag, one of A G P M T R S E W $
};

struct Battery {
  std::vector<TaskSpec> tasks;
  std::map<std::string, double> family_weights;  // normalized by validate
  std::vector<std::string> resource_names;
  std::vector<std::string> resource_units;
  std::map<std::string, double> sampling_weights;  // optional, normalized
  bool weights_were_renormalized = false;

  std::size_t n_tasks() const { return tasks.size(); }
  std::size_t n_resources() const { return resource_names.size(); }
  int index_of(const std::string& task_id) const;  // -1 when unknown
  std::vector<std::string> family_names() const;   // sorted
  std::vector<std::size_t> family_task_indices(const std::string& fam) const;
};

// Validates structure and normalizes weight maps in place.
void validate_battery(Battery& b);

struct RunRecord {
  std::string task_id;
  std::int64_t seed = 0;
  std::string drift = "none";
  double score = 0.0;
  std::vector<double> resources;
  std::map<std::string, double> metrics;

  // Randomization identity, assigned once at ingestion and preserved by
  // symmetries so that re-canonicalization draws the same xi.
  std::uint64_t xi_task = 0;
  std::uint32_t xi_index = 0;
};

struct AgentRep {
  Battery battery;
  std::vector<std::vector<RunRecord>> runs;  // indexed like battery.tasks
  int rejected_unknown_task = 0;
  int rejected_bad_resources = 0;

  std::size_t total_runs() const;
};

// Builds an AgentRep from already-parsed records: records for unknown tasks
// or with a wrong resource arity are rejected and counted.
AgentRep make_agent_rep(Battery battery, std::span<const RunRecord> records);

// Combinatorial identity of a battery: what survives quotienting by the
// symmetry group. Coincidence classes are listed in ascending threshold
// order as family -> count maps, so relabeling tasks cannot change them.
struct Skeleton {
  std::map<std::string, int> family_sizes;
  std::vector<std::map<std::string, int>> threshold_classes;
  std::vector<std::vector<std::string>> family_order;  // weak order levels
  std::map<std::string, int> axis_counts;

  bool operator==(const Skeleton&) const = default;
};

Skeleton skeleton_of(const Battery& b);

// Strictly increasing piecewise-linear reparameterization.
struct PiecewiseLinearMap {
  std::vector<double> xs;  // strictly increasing knots
  std::vector<double> ys;  // strictly increasing images

  double operator()(double x) const;       // linear extension beyond knots
  PiecewiseLinearMap inverse() const;      // swap coordinates
  void validate() const;
  static PiecewiseLinearMap identity();
};

struct Symmetry {
  enum class Kind {
    family_permutation,
    score_rescale,
    resource_rescale,
    seed_relabel
  };
  Kind kind = Kind::family_permutation;

  // family_permutation: bijection on task ids, family-preserving.
  std::map<std::string, std::string> task_relabel;
  // score_rescale: per-task strictly increasing map; missing ids = identity.
  std::map<std::string, PiecewiseLinearMap> rescale;
  // resource_rescale: positive per-coordinate scale factors.
  std::vector<double> resource_scales;
  // seed_relabel: bijection on seed labels; missing seeds = identity.
  std::map<std::int64_t, std::int64_t> seed_map;
};

Symmetry inverse(const Symmetry& g);

struct SymmetricPair {
  Battery battery;
  AgentRep rep;
};

// Applies a symmetry to battery and records together. Thresholds travel
// with their tasks, scores map through the task's rescale, and each
// record's xi identity is preserved.
SymmetricPair apply_symmetry(const Battery& b, const AgentRep& rep,
                             const Symmetry& g);

}  // namespace aai
