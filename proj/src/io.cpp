#include "aai/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace aai {

namespace {

using ojson = nlohmann::ordered_json;

// Shortest round-trip decimal form; shared by JSON and CSV output so the
// same value always prints the same bytes.
std::string num_text(double v) { return ojson(v).dump(); }

const ojson& field(const ojson& j, const char* key, const char* what) {
  auto it = j.find(key);
  if (it == j.end())
    throw ParseError(std::string(what) + ": missing field '" + key + "'");
  return *it;
}

void require_version(const ojson& j, const char* what) {
  if (!j.is_object())
    throw ParseError(std::string(what) + ": expected a JSON object");
  const ojson& v = field(j, "format_version", what);
  if (!v.is_number_integer() || v.get<int>() != kFormatVersion)
    throw ParseError(std::string(what) + ": unsupported format_version");
}

double num(const ojson& v, const char* what) {
  if (!v.is_number())
    throw ParseError(std::string(what) + ": expected a number");
  return v.get<double>();
}

std::string str(const ojson& v, const char* what) {
  if (!v.is_string())
    throw ParseError(std::string(what) + ": expected a string");
  return v.get<std::string>();
}

std::vector<double> num_array(const ojson& v, const char* what) {
  if (!v.is_array())
    throw ParseError(std::string(what) + ": expected an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& e : v) out.push_back(num(e, what));
  return out;
}

std::map<std::string, double> num_map(const ojson& v, const char* what) {
  if (!v.is_object())
    throw ParseError(std::string(what) + ": expected an object");
  std::map<std::string, double> out;
  for (const auto& [k, e] : v.items()) out[k] = num(e, what);
  return out;
}

ojson parse_text(const std::string& text, const char* what) {
  try {
    return ojson::parse(text);
  } catch (const std::exception& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

ojson skeleton_to_json(const Skeleton& s) {
  ojson j;
  j["family_sizes"] = s.family_sizes;
  j["threshold_classes"] = s.threshold_classes;
  j["family_order"] = s.family_order;
  j["axis_counts"] = s.axis_counts;
  return j;
}

Skeleton skeleton_from_json(const ojson& j, const char* what) {
  Skeleton s;
  s.family_sizes =
      field(j, "family_sizes", what).get<std::map<std::string, int>>();
  s.threshold_classes =
      field(j, "threshold_classes", what)
          .get<std::vector<std::map<std::string, int>>>();
  s.family_order = field(j, "family_order", what)
                       .get<std::vector<std::vector<std::string>>>();
  s.axis_counts =
      field(j, "axis_counts", what).get<std::map<std::string, int>>();
  return s;
}

ojson measure_to_json(const DiscreteMeasure& m) {
  ojson j;
  j["atoms"] = m.atoms;
  j["weights"] = m.weights;
  return j;
}

DiscreteMeasure measure_from_json(const ojson& j, const char* what) {
  DiscreteMeasure m;
  m.atoms =
      field(j, "atoms", what).get<std::vector<std::vector<double>>>();
  m.weights = num_array(field(j, "weights", what), what);
  m.validate();
  return m;
}

ojson point_body_to_json(const ModuliPoint& p) {
  ojson j;
  j["tau"] = p.tau;
  j["copula"] = measure_to_json(p.copula);
  j["ray"] = p.ray;
  return j;
}

ModuliPoint point_body_from_json(const ojson& j, Skeleton skeleton,
                                 const char* what) {
  ModuliPoint p;
  p.skeleton = std::move(skeleton);
  p.tau = num_array(field(j, "tau", what), what);
  p.copula = measure_from_json(field(j, "copula", what), what);
  p.ray = num_array(field(j, "ray", what), what);
  return p;
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParseError("cannot write '" + path + "'");
  out << content;
  if (!out.good()) throw ParseError("short write to '" + path + "'");
}

Battery parse_battery_json(const std::string& text) {
  ojson j = parse_text(text, "battery");
  try {
    require_version(j, "battery");
    Battery b;
    for (const auto& t : field(j, "tasks", "battery")) {
      TaskSpec ts;
      ts.id = str(field(t, "id", "battery task"), "battery task id");
      ts.family =
          str(field(t, "family", "battery task"), "battery task family");
      ts.q_star = num(field(t, "q_star", "battery task"), "battery q_star");
      if (t.contains("axis")) ts.axis = str(t.at("axis"), "battery axis");
      b.tasks.push_back(std::move(ts));
    }
    b.family_weights =
        num_map(field(j, "family_weights", "battery"), "family_weights");
    for (const auto& r : field(j, "resources", "battery")) {
      b.resource_names.push_back(
          str(field(r, "name", "battery resource"), "resource name"));
      b.resource_units.push_back(
          r.contains("unit") ? str(r.at("unit"), "resource unit") : "");
    }
    if (j.contains("sampling_weights"))
      b.sampling_weights =
          num_map(j.at("sampling_weights"), "sampling_weights");
    validate_battery(b);
    return b;
  } catch (const ojson::exception& e) {
    throw ParseError(std::string("battery: ") + e.what());
  }
}

std::string battery_to_json_text(const Battery& b) {
  ojson j;
  j["format_version"] = kFormatVersion;
  j["tasks"] = ojson::array();
  for (const auto& t : b.tasks) {
    ojson jt;
    jt["id"] = t.id;
    jt["family"] = t.family;
    jt["q_star"] = t.q_star;
    if (!t.axis.empty()) jt["axis"] = t.axis;
    j["tasks"].push_back(std::move(jt));
  }
  j["family_weights"] = b.family_weights;
  j["resources"] = ojson::array();
  for (std::size_t i = 0; i < b.resource_names.size(); ++i) {
    ojson jr;
    jr["name"] = b.resource_names[i];
    jr["unit"] = i < b.resource_units.size() ? b.resource_units[i] : "";
    j["resources"].push_back(std::move(jr));
  }
  if (!b.sampling_weights.empty()) j["sampling_weights"] = b.sampling_weights;
  return j.dump(2) + "\n";
}

std::vector<RunRecord> parse_runs_jsonl(const std::string& text) {
  std::vector<RunRecord> out;
  std::istringstream lines(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::string what = "runs line " + std::to_string(lineno);
    ojson j = parse_text(line, what.c_str());
    try {
      if (!j.is_object()) throw ParseError(what + ": expected an object");
      if (!j.contains("task_id") && j.contains("format_version")) {
        require_version(j, what.c_str());
        continue;
      }
      RunRecord r;
      r.task_id = str(field(j, "task_id", what.c_str()), what.c_str());
      if (j.contains("seed")) {
        if (!j.at("seed").is_number_integer())
          throw ParseError(what + ": seed must be an integer");
        r.seed = j.at("seed").get<std::int64_t>();
      }
      if (j.contains("drift")) r.drift = str(j.at("drift"), what.c_str());
      r.score = num(field(j, "score", what.c_str()), what.c_str());
      if (j.contains("resources"))
        r.resources = num_array(j.at("resources"), what.c_str());
      if (j.contains("metrics"))
        r.metrics = num_map(j.at("metrics"), what.c_str());
      out.push_back(std::move(r));
    } catch (const ojson::exception& e) {
      throw ParseError(what + ": " + e.what());
    }
  }
  return out;
}

std::string runs_to_jsonl_text(std::span<const RunRecord> records) {
  std::string out;
  {
    ojson header;
    header["format_version"] = kFormatVersion;
    out += header.dump();
    out += "\n";
  }
  for (const RunRecord& r : records) {
    ojson j;
    j["task_id"] = r.task_id;
    j["seed"] = r.seed;
    j["drift"] = r.drift;
    j["score"] = r.score;
    j["resources"] = r.resources;
    j["metrics"] = r.metrics;
    out += j.dump();
    out += "\n";
  }
  return out;
}

FunctionalConfig parse_config_json(const std::string& text) {
  ojson j = parse_text(text, "config");
  try {
    require_version(j, "config");
    FunctionalConfig cfg;
    if (j.contains("functional"))
      cfg.functional = str(j.at("functional"), "config functional");
    if (cfg.functional != "tractable" && cfg.functional != "geometric")
      throw ParseError("config: unknown functional '" + cfg.functional + "'");
    if (j.contains("psi")) {
      const ojson& p = j.at("psi");
      std::string shape =
          p.contains("shape") ? str(p.at("shape"), "psi shape") : "ramp";
      if (shape == "ramp") {
        cfg.psi.shape = UtilityFamily::Shape::ramp;
      } else if (shape == "exp_sat") {
        cfg.psi.shape = UtilityFamily::Shape::exp_sat;
      } else {
        throw ParseError("config: unknown psi shape '" + shape + "'");
      }
      if (p.contains("c")) cfg.psi.c = num(p.at("c"), "psi c");
      if (cfg.psi.c <= 0.0)
        throw ParseError("config: psi curvature must be positive");
    }
    if (j.contains("lambda")) cfg.lambda = num(j.at("lambda"), "lambda");
    if (j.contains("gamma")) cfg.gamma = num(j.at("gamma"), "gamma");
    if (cfg.lambda < 0.0 || cfg.gamma < 0.0)
      throw ParseError("config: penalty weights must be nonnegative");
    if (j.contains("cost")) {
      const ojson& c = j.at("cost");
      if (c.contains("weights"))
        cfg.cost.weights = num_array(c.at("weights"), "cost weights");
      for (double w : cfg.cost.weights)
        if (w < 0.0) throw ParseError("config: cost weights must be >= 0");
      if (c.contains("cap")) cfg.cost.cap = num(c.at("cap"), "cost cap");
      if (cfg.cost.cap <= 0.0)
        throw ParseError("config: cost cap must be positive");
    }
    if (j.contains("metric")) {
      const ojson& m = j.at("metric");
      if (m.contains("alpha")) cfg.alpha = num(m.at("alpha"), "alpha");
      if (m.contains("beta")) cfg.beta = num(m.at("beta"), "beta");
      if (m.contains("gamma_w")) cfg.gamma_w = num(m.at("gamma_w"), "gamma_w");
      if (cfg.alpha <= 0.0 || cfg.beta <= 0.0 || cfg.gamma_w <= 0.0)
        throw ParseError("config: metric weights must be positive");
    }
    if (j.contains("lift_samples")) {
      cfg.lift_samples =
          static_cast<int>(num(j.at("lift_samples"), "lift_samples"));
      if (cfg.lift_samples < 1)
        throw ParseError("config: lift_samples must be >= 1");
    }
    if (j.contains("axes")) {
      const ojson& a = j.at("axes");
      if (!a.is_object()) throw ParseError("config: axes must be an object");
      for (const auto& [tag, body] : a.items()) {
        if (tag == "epsilon") {
          cfg.axes.epsilon = num(body, "axes epsilon");
          continue;
        }
        AxisParams ap;
        if (body.contains("weight"))
          ap.weight = num(body.at("weight"), "axis weight");
        if (body.contains("lipschitz"))
          ap.lipschitz = num(body.at("lipschitz"), "axis lipschitz");
        if (body.contains("horizon"))
          ap.horizon = num(body.at("horizon"), "axis horizon");
        if (body.contains("family_thresholds"))
          ap.family_thresholds =
              num_map(body.at("family_thresholds"), "family_thresholds");
        if (body.contains("depth_anchor"))
          ap.depth_anchor = num(body.at("depth_anchor"), "depth_anchor");
        if (body.contains("half_life"))
          ap.half_life = num(body.at("half_life"), "half_life");
        if (body.contains("categories"))
          ap.categories = num_array(body.at("categories"), "categories");
        if (body.contains("discovery_anchor"))
          ap.discovery_anchor =
              num(body.at("discovery_anchor"), "discovery_anchor");
        if (body.contains("severity_weights"))
          ap.severity_weights =
              num_array(body.at("severity_weights"), "severity_weights");
        if (body.contains("brier_ref"))
          ap.brier_ref = num(body.at("brier_ref"), "brier_ref");
        if (body.contains("throughput_scale"))
          ap.throughput_scale =
              num(body.at("throughput_scale"), "throughput_scale");
        cfg.axes.axes[tag] = std::move(ap);
      }
      if (!(cfg.axes.epsilon > 0.0 && cfg.axes.epsilon < 1.0))
        throw ParseError("config: axes epsilon must lie in (0, 1)");
    }
    return cfg;
  } catch (const ojson::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
}

std::string config_to_json_text(const FunctionalConfig& cfg) {
  ojson j;
  j["format_version"] = kFormatVersion;
  j["functional"] = cfg.functional;
  j["psi"]["shape"] =
      cfg.psi.shape == UtilityFamily::Shape::ramp ? "ramp" : "exp_sat";
  j["psi"]["c"] = cfg.psi.c;
  j["lambda"] = cfg.lambda;
  j["gamma"] = cfg.gamma;
  j["cost"]["weights"] = cfg.cost.weights;
  j["cost"]["cap"] = cfg.cost.cap;
  j["metric"]["alpha"] = cfg.alpha;
  j["metric"]["beta"] = cfg.beta;
  j["metric"]["gamma_w"] = cfg.gamma_w;
  j["lift_samples"] = cfg.lift_samples;
  ojson axes;
  axes["epsilon"] = cfg.axes.epsilon;
  for (const auto& [tag, ap] : cfg.axes.axes) {
    ojson body;
    body["weight"] = ap.weight;
    body["lipschitz"] = ap.lipschitz;
    body["horizon"] = ap.horizon;
    if (!ap.family_thresholds.empty())
      body["family_thresholds"] = ap.family_thresholds;
    body["depth_anchor"] = ap.depth_anchor;
    body["half_life"] = ap.half_life;
    if (!ap.categories.empty()) body["categories"] = ap.categories;
    body["discovery_anchor"] = ap.discovery_anchor;
    if (!ap.severity_weights.empty())
      body["severity_weights"] = ap.severity_weights;
    body["brier_ref"] = ap.brier_ref;
    body["throughput_scale"] = ap.throughput_scale;
    axes[tag] = std::move(body);
  }
  j["axes"] = std::move(axes);
  return j.dump(2) + "\n";
}

SyntheticAgent parse_agent_json(const std::string& text, const Battery& b) {
  ojson j = parse_text(text, "agent");
  try {
    require_version(j, "agent");
    SyntheticAgent agent;
    const ojson& laws = field(j, "score_laws", "agent");
    for (const auto& task : b.tasks) {
      auto it = laws.find(task.id);
      if (it == laws.end())
        throw ParseError("agent: no score law for task '" + task.id + "'");
      ScoreLaw law;
      std::string kind = str(field(*it, "kind", "score law"), "law kind");
      if (kind == "beta") {
        law.kind = ScoreLaw::Kind::beta;
        if (it->contains("a")) law.a = num(it->at("a"), "beta a");
        if (it->contains("b")) law.b = num(it->at("b"), "beta b");
      } else if (kind == "discrete") {
        law.kind = ScoreLaw::Kind::discrete;
        law.values = num_array(field(*it, "values", "score law"), "values");
        law.probs = num_array(field(*it, "probs", "score law"), "probs");
      } else {
        throw ParseError("agent: unknown score law kind '" + kind + "'");
      }
      law.validate();
      agent.score_laws.push_back(std::move(law));
    }
    if (j.contains("correlation")) {
      agent.correlation =
          j.at("correlation").get<std::vector<std::vector<double>>>();
      if (agent.correlation.size() != b.n_tasks())
        throw ParseError("agent: correlation size must match the task count");
    }
    const ojson& res = field(j, "resources", "agent");
    if (res.size() != b.n_resources())
      throw ParseError("agent: resource law count must match the battery");
    for (const auto& r : res) {
      ResourceLaw law;
      std::string kind = str(field(r, "kind", "resource law"), "law kind");
      if (kind == "constant") {
        law.kind = ResourceLaw::Kind::constant;
        if (r.contains("value")) law.value = num(r.at("value"), "value");
      } else if (kind == "lognormal") {
        law.kind = ResourceLaw::Kind::lognormal;
        if (r.contains("mu")) law.mu = num(r.at("mu"), "mu");
        if (r.contains("sigma")) law.sigma = num(r.at("sigma"), "sigma");
      } else {
        throw ParseError("agent: unknown resource law kind '" + kind + "'");
      }
      agent.resources.push_back(law);
    }
    if (j.contains("metrics")) {
      for (const auto& [key, m] : j.at("metrics").items()) {
        MetricGen gen;
        std::string kind = str(field(m, "kind", "metric gen"), "gen kind");
        if (kind == "constant") {
          gen.kind = MetricGen::Kind::constant;
          if (m.contains("value")) gen.value = num(m.at("value"), "value");
        } else if (kind == "uniform") {
          gen.kind = MetricGen::Kind::uniform;
          if (m.contains("lo")) gen.lo = num(m.at("lo"), "lo");
          if (m.contains("hi")) gen.hi = num(m.at("hi"), "hi");
        } else if (kind == "bernoulli") {
          gen.kind = MetricGen::Kind::bernoulli;
          if (m.contains("p")) gen.p = num(m.at("p"), "p");
        } else {
          throw ParseError("agent: unknown metric gen kind '" + kind + "'");
        }
        agent.metrics[key] = gen;
      }
    }
    if (j.contains("improvement_rate"))
      agent.improvement_rate =
          num(j.at("improvement_rate"), "improvement_rate");
    return agent;
  } catch (const ojson::exception& e) {
    throw ParseError(std::string("agent: ") + e.what());
  }
}

std::string canonical_to_json_text(const CanonicalRep& canon) {
  ojson j;
  j["format_version"] = kFormatVersion;
  j["master_seed"] = canon.master_seed;
  j["task_ids"] = canon.task_ids;
  j["tau"] = canon.tau;
  j["u"] = canon.u;
  j["q"] = canon.q;
  j["ray"] = canon.ray;
  j["mean_resources"] = canon.mean_resources;
  j["run_resources"] = canon.run_resources;
  j["ray_is_reference"] = canon.ray_is_reference;
  return j.dump() + "\n";
}

CanonicalRep parse_canonical_json(const std::string& text) {
  ojson j = parse_text(text, "canonical");
  try {
    require_version(j, "canonical");
    CanonicalRep c;
    c.master_seed = field(j, "master_seed", "canonical").get<std::uint64_t>();
    c.task_ids =
        field(j, "task_ids", "canonical").get<std::vector<std::string>>();
    c.tau = num_array(field(j, "tau", "canonical"), "canonical tau");
    c.u = field(j, "u", "canonical").get<std::vector<std::vector<double>>>();
    c.q = field(j, "q", "canonical")
              .get<std::vector<std::vector<std::uint8_t>>>();
    c.ray = num_array(field(j, "ray", "canonical"), "canonical ray");
    c.mean_resources = num_array(field(j, "mean_resources", "canonical"),
                                 "canonical mean_resources");
    if (j.contains("run_resources"))
      c.run_resources =
          j.at("run_resources").get<std::vector<std::vector<double>>>();
    if (j.contains("ray_is_reference"))
      c.ray_is_reference = j.at("ray_is_reference").get<bool>();
    if (c.tau.size() != c.task_ids.size() || c.u.size() != c.task_ids.size() ||
        c.q.size() != c.task_ids.size())
      throw ParseError("canonical: per-task arrays must align with task_ids");
    return c;
  } catch (const ojson::exception& e) {
    throw ParseError(std::string("canonical: ") + e.what());
  }
}

std::string moduli_to_json_text(const ModuliPoint& p) {
  ojson j;
  j["format_version"] = kFormatVersion;
  j["skeleton"] = skeleton_to_json(p.skeleton);
  j["tau"] = p.tau;
  j["copula"] = measure_to_json(p.copula);
  j["ray"] = p.ray;
  return j.dump() + "\n";
}

ModuliPoint parse_moduli_json(const std::string& text) {
  ojson j = parse_text(text, "moduli");
  try {
    require_version(j, "moduli");
    Skeleton s = skeleton_from_json(field(j, "skeleton", "moduli"), "moduli");
    return point_body_from_json(j, std::move(s), "moduli");
  } catch (const ojson::exception& e) {
    throw ParseError(std::string("moduli: ") + e.what());
  }
}

std::string panel_to_json_text(const Panel& panel) {
  ojson j;
  j["format_version"] = kFormatVersion;
  j["target_delta"] = panel.target_delta;
  j["achieved_radius"] = panel.achieved_radius;
  j["grid_denom"] = panel.grid_denom;
  j["covering_failed"] = panel.covering_failed;
  j["candidates_tried"] = panel.candidates_tried;
  j["skeleton"] = panel.points.empty()
                      ? skeleton_to_json(Skeleton{})
                      : skeleton_to_json(panel.points[0].skeleton);
  j["points"] = ojson::array();
  for (const auto& p : panel.points)
    j["points"].push_back(point_body_to_json(p));
  j["scores"] = panel.scores;
  return j.dump() + "\n";
}

Panel parse_panel_json(const std::string& text) {
  ojson j = parse_text(text, "panel");
  try {
    require_version(j, "panel");
    Panel panel;
    panel.target_delta = num(field(j, "target_delta", "panel"), "panel");
    panel.achieved_radius =
        num(field(j, "achieved_radius", "panel"), "panel");
    panel.grid_denom =
        static_cast<int>(num(field(j, "grid_denom", "panel"), "panel"));
    panel.covering_failed = field(j, "covering_failed", "panel").get<bool>();
    panel.candidates_tried =
        field(j, "candidates_tried", "panel").get<long long>();
    Skeleton s = skeleton_from_json(field(j, "skeleton", "panel"), "panel");
    for (const auto& p : field(j, "points", "panel"))
      panel.points.push_back(point_body_from_json(p, s, "panel point"));
    panel.scores = num_array(field(j, "scores", "panel"), "panel scores");
    if (!panel.scores.empty() && panel.scores.size() != panel.points.size())
      throw ParseError("panel: scores must align with points");
    return panel;
  } catch (const ojson::exception& e) {
    throw ParseError(std::string("panel: ") + e.what());
  }
}

ContinuationSpec parse_continuation_json(const std::string& text) {
  ojson j = parse_text(text, "continuation");
  try {
    require_version(j, "continuation");
    ContinuationSpec spec;
    spec.theta = num_array(field(j, "theta", "continuation"), "theta");
    for (const auto& inv : field(j, "invariants", "continuation")) {
      NonCoreInvariant z;
      z.name = str(field(inv, "name", "invariant"), "invariant name");
      z.eval = parse_invariant_expression(
          str(field(inv, "expression", "invariant"), "invariant expression"));
      spec.invariants.push_back(std::move(z));
    }
    if (spec.theta.size() != spec.invariants.size())
      throw ParseError("continuation: theta and invariants differ in length");
    return spec;
  } catch (const ojson::exception& e) {
    throw ParseError(std::string("continuation: ") + e.what());
  }
}

std::string content_hash_hex(std::span<const std::string> parts) {
  std::string all;
  for (const auto& part : parts) {
    all += part;
    all.push_back('\0');  // keeps part boundaries from aliasing
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(RandomStream::hash_str(all)));
  return std::string(buf);
}

std::string eval_report_json(const ScoreReport& score,
                             const FunctionalConfig& cfg, const AgentRep& rep,
                             const ReportMeta& meta,
                             const BootstrapResult* ci) {
  ojson j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "eval";
  j["master_seed"] = meta.master_seed;
  j["content_hash"] = meta.content_hash;
  j["functional"] = cfg.functional;
  j["value"] = score.value;
  j["weighted_mean"] = score.weighted_mean;
  j["dispersion_penalty"] = score.dispersion_penalty;
  j["cost_penalty"] = score.cost_penalty;
  ojson fams;
  for (const auto& [fam, mean] : score.family_means) fams[fam] = mean;
  j["family_means"] = std::move(fams);
  if (!score.axis_values.empty()) j["axis_values"] = score.axis_values;
  j["runs_per_task"] = score.runs_per_task;
  j["rejected"]["unknown_task"] = rep.rejected_unknown_task;
  j["rejected"]["bad_resources"] = rep.rejected_bad_resources;
  if (ci != nullptr) {
    j["bootstrap"]["level"] = ci->level;
    j["bootstrap"]["lo"] = ci->lo;
    j["bootstrap"]["hi"] = ci->hi;
    j["bootstrap"]["replicates"] = ci->values.size();
  }
  return j.dump(2) + "\n";
}

std::string family_means_csv(const ScoreReport& score) {
  std::string out = "family,mean\n";
  for (const auto& [fam, mean] : score.family_means) {
    out += fam;
    out += ",";
    out += num_text(mean);
    out += "\n";
  }
  return out;
}

std::string certification_report_json(const CertificationReport& cert,
                                      const Panel& panel,
                                      const ReportMeta& meta) {
  ojson j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "certificate";
  j["master_seed"] = meta.master_seed;
  j["content_hash"] = meta.content_hash;
  j["threshold"] = cert.threshold;
  j["margin"] = cert.margin;
  j["lipschitz"] = cert.lipschitz;
  j["target_delta"] = panel.target_delta;
  j["achieved_delta"] = cert.delta;
  j["panel_size"] = cert.panel_size;
  j["candidates_tried"] = panel.candidates_tried;
  j["grid_denom"] = panel.grid_denom;
  j["min_panel_score"] = cert.min_panel_score;
  j["max_panel_score"] = cert.max_panel_score;
  j["lower_bound"] = cert.lower_bound;
  j["panel_pass"] = cert.panel_pass;
  j["bound_pass"] = cert.bound_pass;
  j["covering_failed"] = cert.covering_failed;
  j["pass"] = cert.pass;
  return j.dump(2) + "\n";
}

std::string drift_report_json(const DriftReport& drift,
                              const ReportMeta& meta) {
  ojson j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "drift";
  j["master_seed"] = meta.master_seed;
  j["content_hash"] = meta.content_hash;
  j["base_score"] = drift.base_score;
  j["min_score"] = drift.min_score;
  j["max_score"] = drift.max_score;
  j["max_deviation"] = drift.max_deviation;
  j["bound"] = drift.bound;
  j["lipschitz"] = drift.lipschitz;
  j["probes"] = drift.probes;
  j["violations"] = drift.violations;
  j["region"]["rho"] = drift.rho;
  j["region"]["delta_tau"] = drift.delta_tau;
  j["region"]["delta_ray"] = drift.delta_ray;
  return j.dump(2) + "\n";
}

std::string core_report_json(const CoreReport& core, const ReportMeta& meta) {
  ojson j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "core";
  j["master_seed"] = meta.master_seed;
  j["content_hash"] = meta.content_hash;
  j["aai"] = core.aai;
  j["aai_core"] = core.aai_core;
  j["gap"] = core.gap;
  j["cells"] = core.cells;
  j["lift_samples"] = core.lift_samples;
  return j.dump(2) + "\n";
}

}  // namespace aai
