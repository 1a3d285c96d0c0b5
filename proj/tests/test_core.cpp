#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "aai/battery.hpp"
#include "aai/canonical.hpp"
#include "aai/core.hpp"
#include "aai/functionals.hpp"
#include "aai/mathutil.hpp"
#include "aai/rng.hpp"

using namespace aai;

namespace {

Battery battery_of(int n_tasks) {
  Battery b;
  for (int t = 0; t < n_tasks; ++t)
    b.tasks.push_back({"t" + std::to_string(t + 1), "fam", 0.5, ""});
  b.family_weights = {{"fam", 1.0}};
  b.resource_names = {"tokens"};
  b.resource_units = {"count"};
  validate_battery(b);
  return b;
}

CanonicalRep canon_of(std::vector<std::vector<double>> u,
                      std::vector<double> tau) {
  CanonicalRep c;
  for (std::size_t i = 0; i < u.size(); ++i)
    c.task_ids.push_back("t" + std::to_string(i + 1));
  c.tau = std::move(tau);
  c.u = std::move(u);
  c.q.resize(c.u.size());
  for (std::size_t t = 0; t < c.u.size(); ++t)
    for (double v : c.u[t]) c.q[t].push_back(v >= c.tau[t] ? 1 : 0);
  c.ray = {1.0};
  c.mean_resources = {1.0};
  return c;
}

FunctionalConfig plain_config(int lift_samples = 10000) {
  FunctionalConfig cfg;
  cfg.lift_samples = lift_samples;
  return cfg;
}

}  // namespace

TEST_CASE("core projection counts joint success patterns") {
  CanonicalRep all_good = canon_of({{0.6, 0.7, 0.9}}, {0.5});
  CoreRep core = project_core(all_good, RandomStream(1));
  REQUIRE(core.cells.size() == 1);
  CHECK(core.cells.at({1}) == doctest::Approx(1.0));
  CHECK(core.n_samples == 3);

  CanonicalRep mixed = canon_of({{0.6, 0.7, 0.9, 0.1, 0.2,
                                  0.8, 0.9, 0.55, 0.7, 0.6}},
                                {0.5});
  CoreRep core2 = project_core(mixed, RandomStream(2));
  CHECK(core2.cells.at({1}) == doctest::Approx(0.8));
  CHECK(core2.cells.at({0}) == doctest::Approx(0.2));

  CanonicalRep joint = canon_of({{0.9, 0.1}, {0.9, 0.9}}, {0.5, 0.5});
  CoreRep core3 = project_core(joint, RandomStream(3));
  CHECK(core3.cells.at({1, 1}) == doctest::Approx(0.5));
  CHECK(core3.cells.at({0, 1}) == doctest::Approx(0.5));
}

TEST_CASE("core projection pads unequal run counts deterministically") {
  CanonicalRep c = canon_of({{0.9, 0.1, 0.7, 0.6, 0.8}, {0.9, 0.2, 0.7}},
                            {0.5, 0.5});
  CoreRep core = project_core(c, RandomStream(4));
  CHECK(core.n_samples == 5);
  double total = 0.0;
  for (const auto& [cell, p] : core.cells) {
    CHECK(cell.size() == 2);
    total += p;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CoreRep again = project_core(c, RandomStream(4));
  CHECK(core.cells == again.cells);
}

TEST_CASE("max-entropy lift draws uniformly inside each cell") {
  CoreRep core;
  core.task_ids = {"t1"};
  core.tau = {0.5};
  core.cells[{1}] = 1.0;
  core.n_samples = 100;
  CanonicalRep lift =
      max_entropy_lift(core, 10000, RandomStream(5), {1.0});
  REQUIRE(lift.u.size() == 1);
  REQUIRE(lift.u[0].size() == 10000);
  double lo = 1.0, hi = 0.0, m = 0.0;
  for (double v : lift.u[0]) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    m += v;
  }
  m /= 10000.0;
  CHECK(lo >= 0.5);
  CHECK(hi <= 1.0);
  CHECK(std::abs(m - 0.75) < 0.01);
  for (auto qv : lift.u[0])
    CHECK(qv >= lift.tau[0]);
  CHECK(lift.ray_is_reference);
  CHECK(lift.mean_resources == std::vector<double>{1.0});
}

TEST_CASE("failures at a zero threshold cannot be lifted") {
  CoreRep core;
  core.task_ids = {"t1"};
  core.tau = {0.0};
  core.cells[{0}] = 1.0;
  core.n_samples = 10;
  CHECK_THROWS_AS(max_entropy_lift(core, 100, RandomStream(6), {1.0}),
                  ValidationError);
  // Success at zero threshold is fine: the whole interval works.
  core.cells.clear();
  core.cells[{1}] = 1.0;
  CanonicalRep lift = max_entropy_lift(core, 500, RandomStream(7), {1.0});
  for (std::size_t i = 0; i < lift.u[0].size(); ++i)
    CHECK(lift.q[0][i] == 1);
}

TEST_CASE("lift then project returns the core within sampling error") {
  RandomStream gen(8);
  std::vector<std::vector<double>> u(2);
  for (int i = 0; i < 4096; ++i) {
    u[0].push_back(gen.u01("a", i));
    u[1].push_back(gen.u01("b", i));
  }
  CanonicalRep canon = canon_of(u, {0.5, 0.5});
  CoreRep core = project_core(canon, RandomStream(9));
  const int n_lift = 10000;
  CanonicalRep lift = max_entropy_lift(core, n_lift, RandomStream(10), {1.0});
  CoreRep round = project_core(lift, RandomStream(11));
  double tv = 0.0;
  for (const auto& [cell, p] : core.cells) {
    auto it = round.cells.find(cell);
    double q = it == round.cells.end() ? 0.0 : it->second;
    tv += std::abs(p - q);
  }
  tv /= 2.0;
  double cells = static_cast<double>(core.cells.size());
  CHECK(tv <= 3.0 * std::sqrt(cells / static_cast<double>(n_lift)));
}

TEST_CASE("core score depends on the core alone") {
  Battery b = battery_of(1);
  FunctionalConfig cfg = plain_config();
  // Same success pattern, very different inner u values.
  CanonicalRep a = canon_of({{0.7, 0.2, 0.9, 0.1}}, {0.5});
  CanonicalRep c = canon_of({{0.51, 0.49, 0.99, 0.01}}, {0.5});
  CoreRep core_a = project_core(a, RandomStream(12));
  CoreRep core_c = project_core(c, RandomStream(12));
  CHECK(core_a.cells == core_c.cells);
  double s1 = aai_core(core_a, b, cfg, RandomStream(13), {1.0});
  double s2 = aai_core(core_c, b, cfg, RandomStream(13), {1.0});
  CHECK(s1 == s2);  // bitwise: same cells, tau, and keyed draws
}

TEST_CASE("all-success core scores exactly one under the ramp") {
  Battery b = battery_of(2);
  FunctionalConfig cfg = plain_config(4000);
  CoreRep core;
  core.task_ids = {"t1", "t2"};
  core.tau = {0.4, 0.7};
  core.cells[{1, 1}] = 1.0;
  core.n_samples = 50;
  CHECK(aai_core(core, b, cfg, RandomStream(14), {1.0}) ==
        doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("geometric configs are rejected for core scores") {
  Battery b = battery_of(1);
  FunctionalConfig cfg = plain_config();
  cfg.functional = "geometric";
  CoreRep core;
  core.task_ids = {"t1"};
  core.tau = {0.5};
  core.cells[{1}] = 1.0;
  core.n_samples = 5;
  CHECK_THROWS_AS(aai_core(core, b, cfg, RandomStream(15), {1.0}),
                  ValidationError);
}

TEST_CASE("reps pushed upward inside their cells dominate the lift score") {
  Battery b = battery_of(1);
  FunctionalConfig cfg = plain_config(20000);
  cfg.psi.shape = UtilityFamily::Shape::exp_sat;  // strictly increasing
  cfg.psi.c = 4.0;
  RandomStream s(16);
  for (int trial = 0; trial < 20; ++trial) {
    // Random core with both cells present.
    double p_succ = 0.2 + 0.6 * s.u01("p", trial);
    const int n = 400;
    std::vector<double> u;
    double tau = 0.3 + 0.4 * s.u01("tau", trial);
    for (int i = 0; i < n; ++i) {
      bool succ = s.u01("cell", trial, i) < p_succ;
      double xi = s.u01("pos", trial, i);
      // Upper half of the cell: stochastically dominates uniform-on-cell.
      double hi_xi = 0.5 + xi / 2.0;
      u.push_back(succ ? tau + (1.0 - tau) * hi_xi : tau * hi_xi);
    }
    CanonicalRep nu = canon_of({u}, {tau});
    CoreRep core = project_core(nu, RandomStream(17));
    double core_score = aai_core(core, b, cfg, RandomStream(18), {1.0});
    double full = tractable_phi(nu, b, cfg.psi, 0.0, 0.0, CostModel{}).value;
    CHECK(full >= core_score - 0.02);  // MC slack on the lift side
  }
}

namespace {

NonCoreInvariant make_invariant(const std::string& name,
                                const std::string& expr) {
  NonCoreInvariant inv;
  inv.name = name;
  inv.eval = parse_invariant_expression(expr);
  return inv;
}

}  // namespace

TEST_CASE("invariant expression DSL evaluates fields and operators") {
  std::vector<double> u = {0.25, 0.5}, r = {2.0, 3.0};
  auto f1 = parse_invariant_expression("u0 - 0.5");
  CHECK(f1(u, r) == doctest::Approx(-0.25));
  auto f2 = parse_invariant_expression("min(u0, r1) * 2 + abs(u1 - u0)");
  CHECK(f2(u, r) == doctest::Approx(0.25 * 2 + 0.25));
  auto f3 = parse_invariant_expression("max(u0, u1) / r0");
  CHECK(f3(u, r) == doctest::Approx(0.25));
  auto f4 = parse_invariant_expression("(u0 + u1) * (r0 - 1)");
  CHECK(f4(u, r) == doctest::Approx(0.75));
  auto f5 = parse_invariant_expression("-u0 + 1");
  CHECK(f5(u, r) == doctest::Approx(0.75));
}

TEST_CASE("invariant expression DSL rejects malformed input") {
  CHECK_THROWS_AS(parse_invariant_expression("q0 + 1"), ValidationError);
  CHECK_THROWS_AS(parse_invariant_expression("min(u0"), ValidationError);
  CHECK_THROWS_AS(parse_invariant_expression("u0 $ u1"), ValidationError);
  CHECK_THROWS_AS(parse_invariant_expression(""), ValidationError);
  CHECK_THROWS_AS(parse_invariant_expression("abs(u0, u1)"), ValidationError);
  // Out-of-range fields fail at evaluation time.
  auto f = parse_invariant_expression("u5");
  std::vector<double> u = {0.1}, r = {1.0};
  CHECK_THROWS_AS(f(u, r), ValidationError);
}

TEST_CASE("centering forces the invariant to mean zero on every cell") {
  CanonicalRep canon = canon_of({{0.9, 0.1, 0.7, 0.3}}, {0.5});
  CoreRep core = project_core(canon, RandomStream(19));
  NonCoreInvariant inv = make_invariant("z", "u0 * u0");
  center_invariant(inv, core, 20000, RandomStream(20), {1.0});
  CHECK(inv.centered);
  REQUIRE(inv.centers.count({1}));
  REQUIRE(inv.centers.count({0}));
  // E[U^2] on [0.5, 1] = 7/12; on [0, 0.5) = 1/12.
  CHECK(inv.centers.at({1}) == doctest::Approx(7.0 / 12.0).epsilon(0.02));
  CHECK(inv.centers.at({0}) == doctest::Approx(1.0 / 12.0).epsilon(0.05));
  check_centering(inv, core, {1.0});  // replays with zero residual

  SUBCASE("tampered centers are detected") {
    inv.centers[{1}] += 1e-6;
    CHECK_THROWS_AS(check_centering(inv, core, {1.0}), ValidationError);
  }
  SUBCASE("uncentered invariants are rejected") {
    NonCoreInvariant raw = make_invariant("raw", "u0");
    CHECK_THROWS_AS(check_centering(raw, core, {1.0}), ValidationError);
  }
  SUBCASE("missing cells are detected") {
    inv.centers.erase(CoreCell{0});
    CHECK_THROWS_AS(check_centering(inv, core, {1.0}), ValidationError);
  }
}

TEST_CASE("continuation with zero theta is the core score") {
  Battery b = battery_of(1);
  FunctionalConfig cfg = plain_config(5000);
  CanonicalRep canon = canon_of({{0.9, 0.1, 0.7, 0.3}}, {0.5});
  RandomStream s(21);
  CoreRep core = project_core(canon, s.child("core_proj"));
  double base = aai_core(core, b, cfg, s, {1.0});
  CHECK(continuation_value(canon, b, cfg, {}, {}, s) ==
        doctest::Approx(base).epsilon(1e-15));
}

TEST_CASE("continuation adds theta times the centered invariant mean") {
  Battery b = battery_of(1);
  FunctionalConfig cfg = plain_config(5000);
  // All samples succeed at u = 1.0: the centered mean of 8*u0 is close to
  // 8 - 4*(1 + tau) = 2 for tau = 0.5.
  CanonicalRep canon = canon_of({{1.0, 1.0, 1.0, 1.0}}, {0.5});
  RandomStream s(22);
  CoreRep core = project_core(canon, s.child("core_proj"));
  NonCoreInvariant inv = make_invariant("z", "u0 * 8");
  center_invariant(inv, core, 200000, RandomStream(23), {1.0});
  std::vector<NonCoreInvariant> invs = {inv};
  double base = continuation_value(canon, b, cfg, std::vector<double>{0.0},
                                   invs, s);
  double one = continuation_value(canon, b, cfg, std::vector<double>{0.1},
                                  invs, s);
  CHECK(one - base == doctest::Approx(0.2).epsilon(0.01));
  // Exact linearity in theta.
  double two = continuation_value(canon, b, cfg, std::vector<double>{0.2},
                                  invs, s);
  CHECK(two - base == doctest::Approx(2.0 * (one - base)).epsilon(1e-9));
  CHECK_THROWS_AS(continuation_value(canon, b, cfg,
                                     std::vector<double>{0.1, 0.2}, invs, s),
                  ValidationError);
}

namespace {

// Five reps over two tasks with a shared tau so one centering table serves
// them all; u laws differ enough to give a well-conditioned design.
struct CalibrationFixture {
  Battery b = battery_of(2);
  FunctionalConfig cfg = plain_config(4000);
  std::vector<CanonicalRep> reps;
  std::vector<NonCoreInvariant> invariants;
  RandomStream stream{24};

  CalibrationFixture() {
    RandomStream gen(25);
    for (int repi = 0; repi < 5; ++repi) {
      std::vector<std::vector<double>> u(2);
      double pull = 0.15 * static_cast<double>(repi);
      for (int i = 0; i < 64; ++i) {
        double base0 = gen.u01("a", repi, i);
        double base1 = gen.u01("b", repi, i);
        u[0].push_back(clip01(base0 * (1.0 - pull) + pull * base1));
        u[1].push_back(clip01(base1 * (1.0 + 0.3 * pull)));
      }
      reps.push_back(canon_of(u, {0.5, 0.5}));
    }
    // Center on a core visiting all four cells at the shared tau.
    CanonicalRep master =
        canon_of({{0.9, 0.9, 0.1, 0.1}, {0.9, 0.1, 0.9, 0.1}}, {0.5, 0.5});
    CoreRep master_core = project_core(master, RandomStream(26));
    for (const std::string& expr :
         {std::string("u0"), std::string("u1"), std::string("u0 * u1")}) {
      NonCoreInvariant inv = make_invariant("inv_" + expr, expr);
      center_invariant(inv, master_core, 20000, RandomStream(27), {1.0});
      invariants.push_back(inv);
    }
  }
};

}  // namespace

TEST_CASE("calibration recovers a planted theta") {
  CalibrationFixture fx;
  std::vector<double> theta_star = {0.3, -0.2, 0.5};
  std::vector<double> targets;
  for (const auto& rep : fx.reps)
    targets.push_back(continuation_value(rep, fx.b, fx.cfg, theta_star,
                                         fx.invariants, fx.stream));
  CalibrationResult res = calibrate_theta(fx.reps, targets, fx.b, fx.cfg,
                                          fx.invariants, fx.stream);
  REQUIRE(res.theta.size() == 3);
  for (std::size_t j = 0; j < 3; ++j)
    CHECK(res.theta[j] == doctest::Approx(theta_star[j]).epsilon(1e-9));
  CHECK(res.residual < 1e-9);
  CHECK(res.smallest_singular > 1e-8);
}

TEST_CASE("scalar calibration solves the one-parameter case") {
  CalibrationFixture fx;
  std::vector<NonCoreInvariant> one = {fx.invariants[0]};
  std::vector<double> theta_star = {0.1};
  std::vector<double> targets;
  for (const auto& rep : fx.reps)
    targets.push_back(continuation_value(rep, fx.b, fx.cfg, theta_star, one,
                                         fx.stream));
  CalibrationResult res =
      calibrate_theta(fx.reps, targets, fx.b, fx.cfg, one, fx.stream);
  CHECK(res.theta[0] == doctest::Approx(0.1).epsilon(1e-9));
}

TEST_CASE("duplicated invariants make calibration rank-deficient") {
  CalibrationFixture fx;
  std::vector<NonCoreInvariant> dup = {fx.invariants[0], fx.invariants[0]};
  std::vector<double> targets(fx.reps.size(), 0.5);
  CHECK_THROWS_AS(
      calibrate_theta(fx.reps, targets, fx.b, fx.cfg, dup, fx.stream),
      ValidationError);
}

TEST_CASE("calibration validates its shapes") {
  CalibrationFixture fx;
  std::vector<double> too_few = {0.5};
  CHECK_THROWS_AS(calibrate_theta(fx.reps, too_few, fx.b, fx.cfg,
                                  fx.invariants, fx.stream),
                  ValidationError);
  std::vector<CanonicalRep> two(fx.reps.begin(), fx.reps.begin() + 2);
  std::vector<double> targets2 = {0.5, 0.6};
  CHECK_THROWS_AS(calibrate_theta(two, targets2, fx.b, fx.cfg, fx.invariants,
                                  fx.stream),
                  ValidationError);  // 2 reps, 3 parameters
}

TEST_CASE("envelopes bracket every single-invariant continuation") {
  CalibrationFixture fx;
  const CanonicalRep& rep = fx.reps[2];
  auto [lo, hi] = envelopes(rep, fx.b, fx.cfg, fx.invariants, fx.stream);
  CHECK(lo <= hi);
  for (std::size_t j = 0; j < fx.invariants.size(); ++j) {
    std::vector<double> theta(fx.invariants.size(), 0.0);
    theta[j] = 1.0;
    double v = continuation_value(rep, fx.b, fx.cfg, theta, fx.invariants,
                                  fx.stream);
    CHECK(v >= lo - 1e-9);
    CHECK(v <= hi + 1e-9);
  }
}

TEST_CASE("the zero invariant collapses the envelope to the core score") {
  Battery b = battery_of(1);
  FunctionalConfig cfg = plain_config(4000);
  CanonicalRep canon = canon_of({{0.9, 0.1, 0.7, 0.3}}, {0.5});
  NonCoreInvariant zero = make_invariant("zero", "u0 - u0");
  CoreRep core = project_core(canon, RandomStream(28));
  center_invariant(zero, core, 100, RandomStream(29), {1.0});
  RandomStream s(30);
  auto [lo, hi] = envelopes(canon, b, cfg, {zero}, s);
  CHECK(lo == doctest::Approx(hi).epsilon(1e-15));
  CoreRep core2 = project_core(canon, s.child("core_proj"));
  double base = aai_core(core2, b, cfg, s, {1.0});
  CHECK(lo == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("symmetric invariant pairs give a symmetric envelope band") {
  CalibrationFixture fx;
  const CanonicalRep& rep = fx.reps[1];
  NonCoreInvariant plus = make_invariant("plus", "u0 - 0.5");
  NonCoreInvariant minus = make_invariant("minus", "0.5 - u0");
  CanonicalRep master =
      canon_of({{0.9, 0.9, 0.1, 0.1}, {0.9, 0.1, 0.9, 0.1}}, {0.5, 0.5});
  CoreRep master_core = project_core(master, RandomStream(31));
  center_invariant(plus, master_core, 20000, RandomStream(32), {1.0});
  center_invariant(minus, master_core, 20000, RandomStream(32), {1.0});
  auto [lo, hi] = envelopes(rep, fx.b, fx.cfg, {plus, minus}, fx.stream);
  CoreRep core = project_core(rep, fx.stream.child("core_proj"));
  double base = aai_core(core, fx.b, fx.cfg, fx.stream, {1.0});
  // Centers of mirrored invariants replay to mirrored values, so the band
  // sits symmetrically around the core score up to MC noise on centers.
  CHECK(hi - base == doctest::Approx(base - lo).epsilon(0.02));
}
