// Serial reference path versus the OpenMP kernels. Both produce identical
// bits (the tests assert that); this target only reports the speedup.

#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "aai/battery.hpp"
#include "aai/canonical.hpp"
#include "aai/certify.hpp"
#include "aai/functionals.hpp"
#include "aai/moduli.hpp"
#include "aai/rng.hpp"
#include "aai/simulator.hpp"
#include "aai/stats.hpp"

using namespace aai;

namespace {

Battery flat_battery(int n_tasks) {
  Battery b;
  for (int i = 0; i < n_tasks; ++i)
    b.tasks.push_back({"t" + std::to_string(i), "fam", 0.5, ""});
  b.family_weights["fam"] = 1.0;
  b.resource_names = {"tokens"};
  b.resource_units = {"count"};
  validate_battery(b);
  return b;
}

AgentRep sampled_rep(const Battery& b, int n_runs) {
  RandomStream gen(17);
  std::vector<RunRecord> records;
  for (std::size_t t = 0; t < b.n_tasks(); ++t)
    for (int i = 0; i < n_runs; ++i) {
      RunRecord r;
      r.task_id = b.tasks[t].id;
      r.seed = i;
      r.score = gen.u01("s", t, i);
      r.resources = {1.0 + gen.u01("r", t, i)};
      records.push_back(std::move(r));
    }
  return make_agent_rep(b, records);
}

struct BootFixture {
  Battery battery = flat_battery(10);
  AgentRep rep = sampled_rep(battery, 200);
  FunctionalConfig cfg;
};

const BootFixture& boot_fixture() {
  static BootFixture fx;
  return fx;
}

struct PanelFixture {
  Battery battery = flat_battery(2);
  UtilityFamily psi;
  CostModel cost{{0.2}, 5.0};
  RegionSpec region;
  Panel panel;
  PointFunctional f;

  PanelFixture() {
    AgentRep rep = sampled_rep(battery, 24);
    CanonicalRep canon = canonicalize(rep, RandomStream(90));
    region.base = moduli_point_of(canon, battery, RandomStream(91));
    region.delta_tau = 0.05;
    panel = build_delta_net(region, 0.05, 100000, 1.0, 1.0, 1.0,
                            RandomStream(92));
    f = [this](const ModuliPoint& p) {
      return score_moduli_point(p, battery, psi, 0.3, 0.1, cost);
    };
  }
};

const PanelFixture& panel_fixture() {
  static PanelFixture fx;
  return fx;
}

struct CoverageFixture {
  Battery battery = flat_battery(4);
  SyntheticAgent agent;
  FunctionalConfig cfg;
  ConcentrationParams params;

  CoverageFixture() {
    for (int t = 0; t < 4; ++t) {
      ScoreLaw law;
      law.kind = ScoreLaw::Kind::discrete;
      law.values = {0.1 + 0.05 * t, 0.8};
      law.probs = {0.45, 0.55};
      agent.score_laws.push_back(law);
    }
    agent.resources = {ResourceLaw{}};
  }
};

const CoverageFixture& coverage_fixture() {
  static CoverageFixture fx;
  return fx;
}

void bench_bootstrap(benchmark::State& state, Exec exec) {
  const BootFixture& fx = boot_fixture();
  for (auto _ : state) {
    BootstrapResult r = bootstrap_ci(fx.rep, fx.cfg, 64, 0.9, RandomStream(5),
                                     RandomStream(6), exec);
    benchmark::DoNotOptimize(r.lo);
  }
}

void bench_score_panel(benchmark::State& state, Exec exec) {
  const PanelFixture& fx = panel_fixture();
  for (auto _ : state) {
    Panel panel = fx.panel;
    score_panel(panel, fx.f, exec);
    benchmark::DoNotOptimize(panel.scores.front());
  }
}

void bench_determinacy(benchmark::State& state, Exec exec) {
  const PanelFixture& fx = panel_fixture();
  PointFunctional g = [&fx](const ModuliPoint& p) { return fx.f(p) + 0.01; };
  for (auto _ : state) {
    DeterminacyReport r = determinacy_check(fx.panel, fx.f, g, 1.0, 1.0, exec);
    benchmark::DoNotOptimize(r.bound);
  }
}

void bench_worst_case(benchmark::State& state, Exec exec) {
  const PanelFixture& fx = panel_fixture();
  for (auto _ : state) {
    WorstCase r = worst_case_over_region(fx.region, fx.f, 500,
                                         RandomStream(93), exec);
    benchmark::DoNotOptimize(r.min_value);
  }
}

void bench_coverage(benchmark::State& state, Exec exec) {
  const CoverageFixture& fx = coverage_fixture();
  for (auto _ : state) {
    CoverageResult r = empirical_coverage(fx.battery, fx.agent, fx.cfg,
                                          fx.params, 25, 100, RandomStream(71),
                                          exec);
    benchmark::DoNotOptimize(r.violation_rate);
  }
}

}  // namespace

BENCHMARK_CAPTURE(bench_bootstrap, serial, Exec::serial);
BENCHMARK_CAPTURE(bench_bootstrap, parallel, Exec::parallel);
BENCHMARK_CAPTURE(bench_score_panel, serial, Exec::serial);
BENCHMARK_CAPTURE(bench_score_panel, parallel, Exec::parallel);
BENCHMARK_CAPTURE(bench_determinacy, serial, Exec::serial);
BENCHMARK_CAPTURE(bench_determinacy, parallel, Exec::parallel);
BENCHMARK_CAPTURE(bench_worst_case, serial, Exec::serial);
BENCHMARK_CAPTURE(bench_worst_case, parallel, Exec::parallel);
BENCHMARK_CAPTURE(bench_coverage, serial, Exec::serial);
BENCHMARK_CAPTURE(bench_coverage, parallel, Exec::parallel);

BENCHMARK_MAIN();
