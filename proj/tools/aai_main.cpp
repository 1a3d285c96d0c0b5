// Command-line surface for the battery evaluation pipeline. Every
// subcommand reads JSON inputs, routes all randomness through one master
// seed, and writes reports that embed the seed and a content hash of the
// inputs, so a fixed invocation is byte-reproducible.

#include <cmath>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "aai/canonical.hpp"
#include "aai/certify.hpp"
#include "aai/core.hpp"
#include "aai/functionals.hpp"
#include "aai/io.hpp"
#include "aai/moduli.hpp"
#include "aai/simulator.hpp"
#include "aai/stats.hpp"

namespace {

struct CommonArgs {
  std::string battery_path;
  std::string runs_path;
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
};

struct RegionArgs {
  double rho = 0.0;
  double dtau = 0.0;
  double dray = 0.0;
};

struct Loaded {
  aai::Battery battery;
  aai::AgentRep rep;
  aai::FunctionalConfig cfg;
  aai::ReportMeta meta;
};

std::string out_path(const CommonArgs& args, const std::string& name) {
  if (args.out_dir.empty() || args.out_dir == ".") return name;
  return args.out_dir + "/" + name;
}

Loaded load_inputs(const CommonArgs& args, bool need_config) {
  Loaded l;
  std::string battery_text = aai::read_text_file(args.battery_path);
  l.battery = aai::parse_battery_json(battery_text);
  std::string config_text;
  if (need_config) {
    config_text = aai::read_text_file(args.config_path);
    l.cfg = aai::parse_config_json(config_text);
  }
  if (!args.runs_path.empty()) {
    auto records = aai::parse_runs_jsonl(aai::read_text_file(args.runs_path));
    l.rep = aai::make_agent_rep(l.battery, records);
  } else {
    l.rep.battery = l.battery;
    l.rep.runs.resize(l.battery.n_tasks());
  }
  std::vector<std::string> parts{battery_text, config_text};
  l.meta.master_seed = args.seed;
  l.meta.content_hash = aai::content_hash_hex(parts);
  return l;
}

// Lipschitz modulus of the moduli-coordinate score over a region whose
// thresholds stay within dtau of the base point's.
double region_modulus(const aai::Battery& battery,
                      const aai::FunctionalConfig& cfg,
                      const aai::ModuliPoint& base, double dtau) {
  double tau_min = 1.0;
  for (double t : base.tau) tau_min = std::min(tau_min, t);
  tau_min -= dtau;
  if (cfg.psi.uses_tau() && tau_min <= 0.0)
    throw aai::ValidationError(
        "threshold region touches zero; the ramp utility has no Lipschitz "
        "modulus there (shrink --dtau or switch psi)");
  return aai::tractable_moduli_lipschitz(battery, cfg.psi, cfg.lambda,
                                         cfg.gamma, cfg.cost, tau_min,
                                         cfg.alpha, cfg.beta, cfg.gamma_w);
}

int cmd_eval(const CommonArgs& args, bool per_drift,
             const std::string& functional_override, int bootstrap,
             double level) {
  Loaded l = load_inputs(args, true);
  if (!functional_override.empty()) l.cfg.functional = functional_override;
  aai::RandomStream master(args.seed);
  aai::CanonicalizeOptions opts;
  opts.per_drift = per_drift;
  aai::CanonicalRep canon = aai::canonicalize(l.rep, master, opts);
  aai::ScoreReport score = aai::score_agent(canon, l.rep, l.cfg);

  aai::BootstrapResult ci;
  bool have_ci = bootstrap > 0;
  if (have_ci)
    ci = aai::bootstrap_ci(l.rep, l.cfg, bootstrap, level, master,
                           master.child("bootstrap"));

  aai::write_text_file(out_path(args, "report.json"),
                       aai::eval_report_json(score, l.cfg, l.rep, l.meta,
                                             have_ci ? &ci : nullptr));
  aai::write_text_file(out_path(args, "family_means.csv"),
                       aai::family_means_csv(score));
  std::cout << "value " << score.value << "\n";
  return 0;
}

int cmd_copula(const CommonArgs& args) {
  Loaded l = load_inputs(args, false);
  aai::RandomStream master(args.seed);
  aai::CanonicalRep canon = aai::canonicalize(l.rep, master);
  aai::ModuliPoint point =
      aai::moduli_point_of(canon, l.battery, master.child("moduli"));
  aai::write_text_file(out_path(args, "copula.json"),
                       aai::moduli_to_json_text(point));
  std::cout << "atoms " << point.copula.size() << "\n";
  return 0;
}

aai::ModuliPoint base_point(const CommonArgs& args, const Loaded& l,
                            const std::string& copula_path,
                            aai::RandomStream& master) {
  if (!copula_path.empty())
    return aai::parse_moduli_json(aai::read_text_file(copula_path));
  aai::CanonicalRep canon = aai::canonicalize(l.rep, master);
  return aai::moduli_point_of(canon, l.battery, master.child("moduli"));
}

int cmd_drift(const CommonArgs& args, const RegionArgs& region_args,
              const std::string& copula_path, int probes) {
  Loaded l = load_inputs(args, true);
  aai::RandomStream master(args.seed);
  aai::ModuliPoint base = base_point(args, l, copula_path, master);
  aai::RegionSpec region{base, region_args.rho, region_args.dtau,
                         region_args.dray};

  double lipschitz = region_modulus(l.battery, l.cfg, base, region_args.dtau);
  // Every region point sits within this d# radius of the base point, so
  // the modulus converts the radius into a score-deviation bound.
  double radius = l.cfg.alpha * region_args.rho +
                  l.cfg.beta * static_cast<double>(base.tau.size()) *
                      region_args.dtau +
                  l.cfg.gamma_w * region_args.dray;
  double bound = lipschitz * radius;

  auto score = [&](const aai::ModuliPoint& p) {
    return aai::score_moduli_point(p, l.battery, l.cfg.psi, l.cfg.lambda,
                                   l.cfg.gamma, l.cfg.cost);
  };
  double base_score = score(base);

  std::vector<double> values(static_cast<std::size_t>(probes), 0.0);
  aai::RandomStream probe_stream = master.child("drift_probe");
  aai::parallel_for(values.size(), aai::Exec::parallel, [&](std::size_t i) {
    values[i] = score(aai::sample_region_point(region, probe_stream, i));
  });

  aai::DriftReport report;
  report.base_score = base_score;
  report.min_score = base_score;
  report.max_score = base_score;
  report.lipschitz = lipschitz;
  report.bound = bound;
  report.probes = probes;
  report.rho = region_args.rho;
  report.delta_tau = region_args.dtau;
  report.delta_ray = region_args.dray;
  for (double v : values) {
    report.min_score = std::min(report.min_score, v);
    report.max_score = std::max(report.max_score, v);
    double dev = std::abs(v - base_score);
    report.max_deviation = std::max(report.max_deviation, dev);
    if (dev > bound) ++report.violations;
  }
  aai::write_text_file(out_path(args, "drift.json"),
                       aai::drift_report_json(report, l.meta));
  std::cout << "max_deviation " << report.max_deviation << " bound " << bound
            << "\n";
  return 0;
}

int cmd_core(const CommonArgs& args) {
  Loaded l = load_inputs(args, true);
  if (l.cfg.functional != "tractable")
    throw aai::ValidationError(
        "core scores need the tractable functional (--functional tractable)");
  aai::RandomStream master(args.seed);
  aai::CanonicalRep canon = aai::canonicalize(l.rep, master);
  aai::ScoreReport full = aai::score_agent(canon, l.rep, l.cfg);
  aai::CoreRep core = aai::project_core(canon, master.child("core_proj"));
  double core_value = aai::aai_core(core, l.battery, l.cfg,
                                    master.child("core_lift"),
                                    canon.mean_resources);

  aai::CoreReport report;
  report.aai = full.value;
  report.aai_core = core_value;
  report.gap = full.value - core_value;
  report.cells = core.cells.size();
  report.lift_samples = l.cfg.lift_samples;
  aai::write_text_file(out_path(args, "core.json"),
                       aai::core_report_json(report, l.meta));
  std::cout << "aai " << report.aai << " aai_core " << report.aai_core
            << " gap " << report.gap << "\n";
  return 0;
}

int build_and_write_panel(const CommonArgs& args, const RegionArgs& region_args,
                          const std::string& copula_path, double delta,
                          long long budget, aai::Panel& panel, Loaded& l,
                          aai::RandomStream& master) {
  l = load_inputs(args, true);
  aai::ModuliPoint base = base_point(args, l, copula_path, master);
  aai::RegionSpec region{base, region_args.rho, region_args.dtau,
                         region_args.dray};
  panel = aai::build_delta_net(region, delta, budget, l.cfg.alpha, l.cfg.beta,
                               l.cfg.gamma_w, master.child("net"));
  auto score = [&](const aai::ModuliPoint& p) {
    return aai::score_moduli_point(p, l.battery, l.cfg.psi, l.cfg.lambda,
                                   l.cfg.gamma, l.cfg.cost);
  };
  aai::score_panel(panel, score);
  aai::write_text_file(out_path(args, "panel.json"),
                       aai::panel_to_json_text(panel));
  return panel.covering_failed ? 4 : 0;
}

int cmd_panel(const CommonArgs& args, const RegionArgs& region_args,
              const std::string& copula_path, double delta, long long budget) {
  Loaded l;
  aai::Panel panel;
  aai::RandomStream master(args.seed);
  int rc = build_and_write_panel(args, region_args, copula_path, delta, budget,
                                 panel, l, master);
  std::cout << "panel_size " << panel.points.size() << " achieved_radius "
            << panel.achieved_radius << "\n";
  if (rc != 0) std::cerr << "error: net budget exhausted before coverage\n";
  return rc;
}

int cmd_certify(const CommonArgs& args, const RegionArgs& region_args,
                const std::string& copula_path, double delta, long long budget,
                double threshold, double margin, double lipschitz_flag) {
  Loaded l;
  aai::Panel panel;
  aai::RandomStream master(args.seed);
  int rc = build_and_write_panel(args, region_args, copula_path, delta, budget,
                                 panel, l, master);
  double lipschitz = lipschitz_flag;
  if (lipschitz <= 0.0) {
    aai::ModuliPoint base = panel.points.empty()
                                ? base_point(args, l, copula_path, master)
                                : panel.points[0];
    lipschitz = region_modulus(l.battery, l.cfg, base, region_args.dtau);
  }
  aai::CertificationReport cert =
      aai::certify(panel, threshold, margin, lipschitz);
  aai::write_text_file(out_path(args, "certificate.json"),
                       aai::certification_report_json(cert, panel, l.meta));
  std::cout << (cert.pass ? "PASS" : "FAIL") << " lower_bound "
            << cert.lower_bound << "\n";
  if (rc != 0) {
    std::cerr << "error: net budget exhausted before coverage\n";
    return rc;
  }
  return 0;
}

int cmd_simulate(const CommonArgs& args, const std::string& agent_path,
                 int n_per_task, const std::string& drift,
                 double resource_level) {
  std::string battery_text = aai::read_text_file(args.battery_path);
  aai::Battery battery = aai::parse_battery_json(battery_text);
  aai::SyntheticAgent agent =
      aai::parse_agent_json(aai::read_text_file(agent_path), battery);
  aai::RandomStream master(args.seed);
  auto records = aai::generate_runs(agent, battery, n_per_task,
                                    master.child("simulate"), drift,
                                    resource_level);
  aai::write_text_file(out_path(args, "runs.jsonl"),
                       aai::runs_to_jsonl_text(records));
  std::cout << "records " << records.size() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"battery evaluation toolkit"};
  app.require_subcommand(1);

  CommonArgs common;
  RegionArgs region;
  bool per_drift = false;
  std::string functional_override;
  int bootstrap = 0;
  double level = 0.95;
  std::string copula_path;
  int probes = 1000;
  double delta = 0.05;
  long long budget = 200000;
  double threshold = 0.0;
  double margin = 0.0;
  double lipschitz_flag = 0.0;
  std::string agent_path;
  int n_per_task = 100;
  std::string drift_label = "none";
  double resource_level = 0.0;

  auto add_common = [&](CLI::App* sub, bool runs_required,
                        bool config_required) {
    sub->add_option("--battery", common.battery_path, "battery JSON path")
        ->required();
    auto* runs_opt =
        sub->add_option("--runs", common.runs_path, "run records JSONL path");
    if (runs_required) runs_opt->required();
    auto* cfg_opt = sub->add_option("--config", common.config_path,
                                    "functional config JSON path");
    if (config_required) cfg_opt->required();
    sub->add_option("--seed", common.seed, "master seed");
    sub->add_option("--out", common.out_dir, "output directory");
  };
  auto add_region = [&](CLI::App* sub) {
    sub->add_option("--rho", region.rho, "copula ball radius (W1)");
    sub->add_option("--dtau", region.dtau, "threshold box half-width");
    sub->add_option("--dray", region.dray, "ray ball radius (l1)");
    sub->add_option("--copula", copula_path,
                    "moduli point JSON to use as the base point");
  };

  CLI::App* eval = app.add_subcommand("eval", "score run records");
  add_common(eval, true, true);
  eval->add_flag("--per-drift", per_drift,
                 "stratify the PIT by drift label");
  eval->add_option("--functional", functional_override,
                   "override the configured functional")
      ->check(CLI::IsMember({"tractable", "geometric"}));
  eval->add_option("--bootstrap", bootstrap, "bootstrap replicates");
  eval->add_option("--level", level, "confidence level");

  CLI::App* certify = app.add_subcommand("certify", "certify over a region");
  add_common(certify, true, true);
  add_region(certify);
  certify->add_option("--delta", delta, "net resolution");
  certify->add_option("--panel-budget", budget, "candidate budget");
  certify->add_option("--threshold", threshold, "certification threshold");
  certify->add_option("--margin", margin, "required margin above threshold");
  certify->add_option("--lipschitz", lipschitz_flag,
                      "override the Lipschitz modulus");

  CLI::App* drift = app.add_subcommand("drift", "probe a robustness region");
  add_common(drift, true, true);
  add_region(drift);
  drift->add_option("--probes", probes, "region probes");

  CLI::App* core = app.add_subcommand("core", "core score and gap");
  add_common(core, true, true);

  CLI::App* panel = app.add_subcommand("panel", "export a scored delta-net");
  add_common(panel, true, true);
  add_region(panel);
  panel->add_option("--delta", delta, "net resolution");
  panel->add_option("--panel-budget", budget, "candidate budget");

  CLI::App* simulate =
      app.add_subcommand("simulate", "generate synthetic run records");
  add_common(simulate, false, false);
  simulate->add_option("--agent", agent_path, "agent config JSON")->required();
  simulate->add_option("--n", n_per_task, "runs per task");
  simulate->add_option("--drift", drift_label, "drift label for records");
  simulate->add_option("--resource-level", resource_level,
                       "improvement path position");

  CLI::App* copula =
      app.add_subcommand("copula", "export the empirical moduli point");
  add_common(copula, true, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (eval->parsed())
      return cmd_eval(common, per_drift, functional_override, bootstrap,
                      level);
    if (certify->parsed())
      return cmd_certify(common, region, copula_path, delta, budget, threshold,
                         margin, lipschitz_flag);
    if (drift->parsed()) return cmd_drift(common, region, copula_path, probes);
    if (core->parsed()) return cmd_core(common);
    if (panel->parsed())
      return cmd_panel(common, region, copula_path, delta, budget);
    if (simulate->parsed())
      return cmd_simulate(common, agent_path, n_per_task, drift_label,
                          resource_level);
    if (copula->parsed()) return cmd_copula(common);
  } catch (const aai::InsufficientRuns& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const aai::BudgetExhausted& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const aai::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const aai::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
