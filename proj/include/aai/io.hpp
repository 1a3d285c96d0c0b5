#pragma once

#include <cstdint>
#include <stdexcept>
#include <span>
#include <string>
#include <vector>

#include "aai/battery.hpp"
#include "aai/canonical.hpp"
#include "aai/certify.hpp"
#include "aai/core.hpp"
#include "aai/functionals.hpp"
#include "aai/moduli.hpp"
#include "aai/simulator.hpp"
#include "aai/stats.hpp"

namespace aai {

// Thrown for malformed files or JSON that fails schema checks; the CLI
// maps it (like ValidationError) to exit code 2.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr int kFormatVersion = 1;

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// Battery file: {format_version, tasks:[{id,family,q_star,axis?}],
// family_weights, resources:[{name,unit}], sampling_weights?}.
Battery parse_battery_json(const std::string& text);
std::string battery_to_json_text(const Battery& b);

// Run records: JSON lines with task_id, seed, drift, score, resources,
// metrics. Serialization preserves record order.
std::vector<RunRecord> parse_runs_jsonl(const std::string& text);
std::string runs_to_jsonl_text(std::span<const RunRecord> records);

FunctionalConfig parse_config_json(const std::string& text);
std::string config_to_json_text(const FunctionalConfig& cfg);

// Synthetic agent config; score laws are keyed by task id and ordered
// against the battery.
SyntheticAgent parse_agent_json(const std::string& text, const Battery& b);

// Interchange format between subcommands: per-task u arrays, tau, ray,
// master seed.
std::string canonical_to_json_text(const CanonicalRep& canon);
CanonicalRep parse_canonical_json(const std::string& text);

std::string moduli_to_json_text(const ModuliPoint& p);
ModuliPoint parse_moduli_json(const std::string& text);

std::string panel_to_json_text(const Panel& panel);
Panel parse_panel_json(const std::string& text);

// Continuation config: {theta:[...], invariants:[{name, expression}]} with
// the expression DSL of parse_invariant_expression. The returned
// invariants are uncentered; callers run center_invariant before use.
struct ContinuationSpec {
  std::vector<double> theta;
  std::vector<NonCoreInvariant> invariants;
};
ContinuationSpec parse_continuation_json(const std::string& text);

// FNV-1a over the concatenated parts, rendered as 16 hex digits. Reports
// embed it over the battery and config bytes so an audit can detect any
// change to either.
std::string content_hash_hex(std::span<const std::string> parts);

struct ReportMeta {
  std::uint64_t master_seed = 0;
  std::string content_hash;
};

// All report serializers emit a fixed key order and one trailing newline,
// so identical inputs give byte-identical files.
std::string eval_report_json(const ScoreReport& score,
                             const FunctionalConfig& cfg, const AgentRep& rep,
                             const ReportMeta& meta,
                             const BootstrapResult* ci = nullptr);
std::string family_means_csv(const ScoreReport& score);

std::string certification_report_json(const CertificationReport& cert,
                                      const Panel& panel,
                                      const ReportMeta& meta);

struct DriftReport {
  double base_score = 0.0;
  double min_score = 0.0;
  double max_score = 0.0;
  double max_deviation = 0.0;
  double bound = 0.0;
  double lipschitz = 0.0;
  int probes = 0;
  int violations = 0;
  double rho = 0.0;
  double delta_tau = 0.0;
  double delta_ray = 0.0;
};
std::string drift_report_json(const DriftReport& drift, const ReportMeta& meta);

struct CoreReport {
  double aai = 0.0;
  double aai_core = 0.0;
  double gap = 0.0;
  std::size_t cells = 0;
  int lift_samples = 0;
};
std::string core_report_json(const CoreReport& core, const ReportMeta& meta);

}  // namespace aai
