#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "aai/battery.hpp"
#include "aai/canonical.hpp"
#include "aai/mathutil.hpp"
#include "aai/rng.hpp"

using namespace aai;

namespace {

Battery one_task_battery(double q_star = 0.5) {
  Battery b;
  b.tasks = {{"t1", "fam", q_star, ""}};
  b.family_weights = {{"fam", 1.0}};
  b.resource_names = {"tokens"};
  b.resource_units = {"count"};
  validate_battery(b);
  return b;
}

Battery two_task_battery() {
  Battery b;
  b.tasks = {{"t1", "fam", 0.5, ""}, {"t2", "fam", 0.5, ""}};
  b.family_weights = {{"fam", 1.0}};
  b.resource_names = {"tokens", "wall"};
  b.resource_units = {"count", "s"};
  validate_battery(b);
  return b;
}

RunRecord rec(const std::string& id, std::int64_t seed, double score,
              std::vector<double> res) {
  RunRecord r;
  r.task_id = id;
  r.seed = seed;
  r.score = score;
  r.resources = std::move(res);
  return r;
}

}  // namespace

TEST_CASE("empirical CDF left limits and values at atoms") {
  EmpiricalCDF cdf = EmpiricalCDF::from_samples({0.1, 0.2, 0.3});
  auto [lo, hi] = cdf.eval(0.2);
  CHECK(lo == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(hi == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  auto [l2, h2] = cdf.eval(0.15);
  CHECK(l2 == doctest::Approx(1.0 / 3.0));
  CHECK(h2 == doctest::Approx(1.0 / 3.0));
  auto [l3, h3] = cdf.eval(-5.0);
  CHECK(l3 == 0.0);
  CHECK(h3 == 0.0);
  auto [l4, h4] = cdf.eval(0.3);
  CHECK(l4 == doctest::Approx(2.0 / 3.0));
  CHECK(h4 == 1.0);
}

TEST_CASE("empirical CDF with a single sample and with ties") {
  EmpiricalCDF one = EmpiricalCDF::from_samples({0.7});
  auto [lo, hi] = one.eval(0.7);
  CHECK(lo == 0.0);
  CHECK(hi == 1.0);

  EmpiricalCDF tied = EmpiricalCDF::from_samples({0.4, 0.4, 0.4, 0.9});
  auto [tl, th] = tied.eval(0.4);
  CHECK(tl == 0.0);
  CHECK(th == doctest::Approx(0.75));
}

TEST_CASE("randomized PIT spreads atoms by xi") {
  EmpiricalCDF cdf = EmpiricalCDF::from_samples({0.1, 0.2, 0.3});
  // At the atom 0.2: u = 1/3 + xi * 1/3.
  CHECK(randomized_pit(cdf, 0.2, 0.5) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(randomized_pit(cdf, 0.2, 0.0) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  // Single atom: u = xi exactly.
  EmpiricalCDF one = EmpiricalCDF::from_samples({0.7});
  CHECK(randomized_pit(one, 0.7, 0.25) == doctest::Approx(0.25));
  // Off-atom: the jump is zero, so xi does not matter.
  CHECK(randomized_pit(cdf, 0.15, 0.1) == randomized_pit(cdf, 0.15, 0.9));
}

TEST_CASE("aligned threshold takes the midpoint of a CDF jump") {
  EmpiricalCDF cdf = EmpiricalCDF::from_samples({0.2, 0.2, 0.8, 0.8});
  // F(0.2-) = 0, F(0.2) = 0.5: midpoint 0.25.
  CHECK(aligned_threshold(cdf, 0.2) == doctest::Approx(0.25).epsilon(1e-15));
  // No atom at 0.5: plain CDF value.
  CHECK(aligned_threshold(cdf, 0.5) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(aligned_threshold(cdf, 0.8) == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("canonicalize produces the normalized resource ray") {
  Battery b = two_task_battery();
  std::vector<RunRecord> records = {rec("t1", 0, 0.3, {2.0, 6.0}),
                                    rec("t1", 1, 0.6, {2.0, 6.0}),
                                    rec("t2", 0, 0.2, {2.0, 6.0}),
                                    rec("t2", 1, 0.9, {2.0, 6.0})};
  AgentRep rep = make_agent_rep(b, records);
  CanonicalRep canon = canonicalize(rep, RandomStream(1));
  REQUIRE(canon.ray.size() == 2);
  CHECK(canon.ray[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(canon.ray[1] == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(canon.mean_resources[0] == doctest::Approx(2.0));
  CHECK(canon.mean_resources[1] == doctest::Approx(6.0));
  CHECK_FALSE(canon.ray_is_reference);
}

TEST_CASE("success indicators agree with u >= tau everywhere") {
  Battery b = two_task_battery();
  RandomStream gen(9);
  std::vector<RunRecord> records;
  for (int t = 0; t < 2; ++t)
    for (int i = 0; i < 40; ++i) {
      records.push_back(rec(b.tasks[t].id, i, gen.u01("s", t, i),
                            {1.0 + gen.u01("r", t, i), 2.0}));
    }
  AgentRep rep = make_agent_rep(b, records);
  CanonicalRep canon = canonicalize(rep, RandomStream(2));
  for (std::size_t t = 0; t < canon.n_tasks(); ++t) {
    REQUIRE(canon.u[t].size() == 40);
    for (std::size_t i = 0; i < canon.u[t].size(); ++i) {
      CHECK(canon.q[t][i] == (canon.u[t][i] >= canon.tau[t] ? 1 : 0));
      CHECK(canon.u[t][i] >= 0.0);
      CHECK(canon.u[t][i] <= 1.0);
    }
  }
}

TEST_CASE("canonicalization is deterministic in the master stream") {
  Battery b = two_task_battery();
  RandomStream gen(3);
  std::vector<RunRecord> records;
  for (int t = 0; t < 2; ++t)
    for (int i = 0; i < 10; ++i)
      records.push_back(
          rec(b.tasks[t].id, i, gen.u01("s", t, i), {1.0, 1.0}));
  AgentRep rep = make_agent_rep(b, records);
  CanonicalRep a = canonicalize(rep, RandomStream(77));
  CanonicalRep c = canonicalize(rep, RandomStream(77));
  CHECK(a.u == c.u);
  CHECK(a.tau == c.tau);
  CHECK(a.master_seed == c.master_seed);
  CanonicalRep d = canonicalize(rep, RandomStream(78));
  CHECK(a.u != d.u);
}

TEST_CASE("threshold uses the jump midpoint at score atoms") {
  Battery b = one_task_battery(0.2);
  std::vector<RunRecord> records = {rec("t1", 0, 0.2, {1.0}),
                                    rec("t1", 1, 0.8, {1.0})};
  AgentRep rep = make_agent_rep(b, records);
  CanonicalRep canon = canonicalize(rep, RandomStream(4));
  // F(0.2-) = 0, F(0.2) = 0.5: tau = 0.25.
  CHECK(canon.tau[0] == doctest::Approx(0.25).epsilon(1e-15));
}

namespace {

// Canonicalization must be bit-identical after any strictly increasing
// per-task score relabeling, because ranks and xi draws are unchanged.
void check_rescale_invariance(const Symmetry& g) {
  Battery b = two_task_battery();
  RandomStream gen(5);
  std::vector<RunRecord> records;
  for (int t = 0; t < 2; ++t)
    for (int i = 0; i < 25; ++i)
      records.push_back(rec(b.tasks[t].id, i, gen.u01("s", t, i),
                            {1.0 + i, 2.0}));
  AgentRep rep = make_agent_rep(b, records);
  CanonicalRep base = canonicalize(rep, RandomStream(6));
  SymmetricPair moved = apply_symmetry(rep.battery, rep, g);
  CanonicalRep after = canonicalize(moved.rep, RandomStream(6));
  REQUIRE(base.u.size() == after.u.size());
  for (std::size_t t = 0; t < base.u.size(); ++t) {
    REQUIRE(base.u[t].size() == after.u[t].size());
    for (std::size_t i = 0; i < base.u[t].size(); ++i) {
      CHECK(base.u[t][i] == after.u[t][i]);  // bitwise
    }
    CHECK(base.tau[t] == after.tau[t]);
    CHECK(base.q[t] == after.q[t]);
  }
}

}  // namespace

TEST_CASE("canonical u is invariant under cubing scores") {
  Symmetry g;
  g.kind = Symmetry::Kind::score_rescale;
  // s -> s^3 on [0,1], sampled densely enough to stay strictly increasing.
  std::vector<double> xs, ys;
  for (int k = 0; k <= 64; ++k) {
    double x = static_cast<double>(k) / 64.0;
    xs.push_back(x);
    ys.push_back(x * x * x);
  }
  // Cube roots are still increasing past 1; extend the last segment.
  g.rescale["t1"] = PiecewiseLinearMap{xs, ys};
  g.rescale["t2"] = PiecewiseLinearMap{xs, ys};
  check_rescale_invariance(g);
}

TEST_CASE("canonical u is invariant under affine scores") {
  Symmetry g;
  g.kind = Symmetry::Kind::score_rescale;
  g.rescale["t1"] = PiecewiseLinearMap{{0.0, 1.0}, {1.0, 3.0}};  // 2s + 1
  g.rescale["t2"] = PiecewiseLinearMap{{0.0, 1.0}, {1.0, 3.0}};
  check_rescale_invariance(g);
}

TEST_CASE("canonical u is invariant under seed relabeling and resource units") {
  {
    Symmetry g;
    g.kind = Symmetry::Kind::seed_relabel;
    for (std::int64_t s = 0; s < 25; ++s) g.seed_map[s] = 1000 - s;
    check_rescale_invariance(g);
  }
  {
    Battery b = two_task_battery();
    RandomStream gen(5);
    std::vector<RunRecord> records;
    for (int t = 0; t < 2; ++t)
      for (int i = 0; i < 25; ++i)
        records.push_back(
            rec(b.tasks[t].id, i, gen.u01("s", t, i), {1.0 + i, 2.0}));
    AgentRep rep = make_agent_rep(b, records);
    CanonicalRep base = canonicalize(rep, RandomStream(6));
    Symmetry g;
    g.kind = Symmetry::Kind::resource_rescale;
    g.resource_scales = {10.0, 10.0};
    SymmetricPair moved = apply_symmetry(rep.battery, rep, g);
    CanonicalRep after = canonicalize(moved.rep, RandomStream(6));
    // Scaling both coordinates equally leaves the ray alone; u and tau never
    // depend on resources at all.
    CHECK(base.u == after.u);
    CHECK(base.tau == after.tau);
    for (std::size_t j = 0; j < base.ray.size(); ++j)
      CHECK(base.ray[j] == doctest::Approx(after.ray[j]).epsilon(1e-12));
  }
}

TEST_CASE("PIT uniformity: canonical u passes a KS test") {
  Battery b = one_task_battery();
  RandomStream gen(8);
  std::vector<RunRecord> records;
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    // Lumpy score law: mixture of atoms and a continuum.
    double v = gen.u01("mix", i) < 0.4 ? 0.25
               : gen.u01("mix2", i) < 0.5
                   ? 0.75
                   : gen.u01("cont", i);
    records.push_back(rec("t1", i, v, {1.0}));
  }
  AgentRep rep = make_agent_rep(b, records);
  CanonicalRep canon = canonicalize(rep, RandomStream(10));
  double d = ks_uniform_statistic(canon.u[0]);
  CHECK(d < 1.63 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("per-drift stratification changes u but keeps tau pooled") {
  Battery b = one_task_battery();
  std::vector<RunRecord> records;
  for (int i = 0; i < 30; ++i) {
    // Strata with different score laws: pooled and per-stratum CDFs differ.
    double s = i < 15 ? 0.1 * (i % 3) : 0.5 + 0.15 * (i % 3);
    RunRecord r = rec("t1", i, s, {1.0});
    r.drift = i < 15 ? "none" : "paraphrase";
    records.push_back(r);
  }
  AgentRep rep = make_agent_rep(b, records);
  CanonicalRep pooled = canonicalize(rep, RandomStream(11));
  CanonicalizeOptions opts;
  opts.per_drift = true;
  CanonicalRep strat = canonicalize(rep, RandomStream(11), opts);
  CHECK(pooled.tau == strat.tau);
  CHECK(pooled.u != strat.u);
}

TEST_CASE("empty task yields InsufficientRuns naming the task") {
  Battery b = two_task_battery();
  std::vector<RunRecord> records = {rec("t1", 0, 0.5, {1.0, 1.0})};
  AgentRep rep = make_agent_rep(b, records);
  CHECK_THROWS_WITH_AS(canonicalize(rep, RandomStream(1)),
                       doctest::Contains("t2"), InsufficientRuns);
}

TEST_CASE("zero-mass resources cannot form a ray") {
  Battery b = one_task_battery();
  std::vector<RunRecord> records = {rec("t1", 0, 0.5, {0.0}),
                                    rec("t1", 1, 0.6, {0.0})};
  AgentRep rep = make_agent_rep(b, records);
  CHECK_THROWS_AS(canonicalize(rep, RandomStream(1)), ValidationError);
}

namespace {

CanonicalRep uniform_canon(int n, std::uint64_t seed) {
  Battery b = two_task_battery();
  RandomStream gen(seed);
  std::vector<RunRecord> records;
  for (int t = 0; t < 2; ++t)
    for (int i = 0; i < n; ++i)
      records.push_back(
          rec(b.tasks[t].id, i, gen.u01("s", t, i), {1.0, 2.0}));
  AgentRep rep = make_agent_rep(b, records);
  return canonicalize(rep, RandomStream(seed + 1));
}

}  // namespace

TEST_CASE("dyadic level 0 collapses each coordinate to its grand mean") {
  CanonicalRep canon = uniform_canon(64, 21);
  CanonicalRep c0 = dyadic_coarsen(canon, 0);
  for (std::size_t t = 0; t < c0.n_tasks(); ++t) {
    double m = mean(canon.u[t]);
    for (double v : c0.u[t]) CHECK(v == doctest::Approx(m).epsilon(1e-12));
  }
  CHECK(c0.tau == canon.tau);
  CHECK(c0.ray == canon.ray);
}

TEST_CASE("dyadic level 1 on uniforms gives cell means near 1/4 and 3/4") {
  CanonicalRep canon = uniform_canon(10000, 22);
  CanonicalRep c1 = dyadic_coarsen(canon, 1);
  // Cells are joint over tasks, so each coordinate sees a handful of
  // distinct means, every one close to the half-cell center 1/4 or 3/4.
  for (std::size_t t = 0; t < c1.n_tasks(); ++t) {
    bool saw_low = false, saw_high = false;
    for (double v : c1.u[t]) {
      double d_low = std::abs(v - 0.25), d_high = std::abs(v - 0.75);
      CHECK(std::min(d_low, d_high) < 0.02);
      if (d_low < d_high)
        saw_low = true;
      else
        saw_high = true;
    }
    CHECK(saw_low);
    CHECK(saw_high);
  }
}

TEST_CASE("dyadic refinement moves toward the sample in W1") {
  CanonicalRep canon = uniform_canon(512, 23);
  double prev = std::numeric_limits<double>::infinity();
  for (int level = 0; level <= 6; ++level) {
    CanonicalRep c = dyadic_coarsen(canon, level);
    double d = 0.0;
    for (std::size_t t = 0; t < c.n_tasks(); ++t)
      d += w1_sorted_1d(c.u[t], canon.u[t]);
    CHECK(d <= prev + 1e-12);
    prev = d;
  }
  CHECK(prev < 0.02);
}

TEST_CASE("coarsening shrinks convex test integrals from below") {
  // Cell means are conditional expectations, so for convex g the coarsened
  // mean of g never exceeds the sample mean of g (Jensen, within noise).
  CanonicalRep canon = uniform_canon(4096, 24);
  CanonicalRep c2 = dyadic_coarsen(canon, 2);
  auto eval = [](const std::vector<double>& xs, auto g) {
    double s = 0.0;
    for (double x : xs) s += g(x);
    return s / static_cast<double>(xs.size());
  };
  auto sq = [](double x) { return x * x; };
  auto vee = [](double x) { return std::abs(x - 0.5); };
  auto ex = [](double x) { return std::exp(x); };
  for (std::size_t t = 0; t < canon.n_tasks(); ++t) {
    CHECK(eval(c2.u[t], sq) <= eval(canon.u[t], sq) + 1e-9);
    CHECK(eval(c2.u[t], vee) <= eval(canon.u[t], vee) + 1e-9);
    CHECK(eval(c2.u[t], ex) <= eval(canon.u[t], ex) + 1e-9);
  }
}

TEST_CASE("coarsening recomputes success indicators") {
  CanonicalRep canon = uniform_canon(256, 25);
  CanonicalRep c1 = dyadic_coarsen(canon, 1);
  for (std::size_t t = 0; t < c1.n_tasks(); ++t)
    for (std::size_t i = 0; i < c1.u[t].size(); ++i)
      CHECK(c1.q[t][i] == (c1.u[t][i] >= c1.tau[t] ? 1 : 0));
}

TEST_CASE("coarsening requires aligned run counts") {
  Battery b = two_task_battery();
  std::vector<RunRecord> records = {rec("t1", 0, 0.5, {1.0, 1.0}),
                                    rec("t1", 1, 0.7, {1.0, 1.0}),
                                    rec("t2", 0, 0.4, {1.0, 1.0})};
  AgentRep rep = make_agent_rep(b, records);
  CanonicalRep canon = canonicalize(rep, RandomStream(1));
  CHECK_THROWS_AS(dyadic_coarsen(canon, 1), ValidationError);
}
