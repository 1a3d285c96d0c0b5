#include "aai/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "aai/mathutil.hpp"

namespace aai {

namespace {

// Move a copula measure a prescribed W1 distance toward a perturbed target
// along the displacement geodesic. Linearity of W1 in the interpolation
// parameter makes the resulting distance equal to the request up to the
// solver tolerance.
DiscreteMeasure perturb_copula(const DiscreteMeasure& base, double radius,
                               const RandomStream& stream,
                               std::uint64_t index) {
  if (radius <= 0.0 || base.size() == 0) return base;
  DiscreteMeasure target = base;
  for (std::size_t a = 0; a < target.size(); ++a) {
    for (std::size_t d = 0; d < target.dim(); ++d) {
      double shift = (2.0 * stream.u01("region_cop", index, a, d) - 1.0) *
                     std::min(2.0 * radius, 1.0);
      target.atoms[a][d] = clip01(target.atoms[a][d] + shift);
    }
  }
  target = DiscreteMeasure::normalized(target.atoms, target.weights);
  auto [dist, plan] = w1(base, target);
  if (dist <= 0.0) return base;
  double want = stream.u01("region_rho", index) * radius;
  double t = std::min(1.0, want / dist);
  return displacement_interpolate(plan, t);
}

std::vector<double> perturb_ray(const std::vector<double>& base, double radius,
                                const RandomStream& stream,
                                std::uint64_t index) {
  if (radius <= 0.0 || base.empty()) return base;
  std::vector<double> target(base.size());
  double total = 0.0;
  for (std::size_t j = 0; j < base.size(); ++j) {
    double shift = (2.0 * stream.u01("region_ray", index, j) - 1.0) * radius;
    target[j] = std::max(0.0, base[j] + shift);
    total += target[j];
  }
  if (total <= 0.0) return base;
  for (double& v : target) v /= total;
  double dist = 0.0;
  for (std::size_t j = 0; j < base.size(); ++j)
    dist += std::abs(target[j] - base[j]);
  if (dist <= 0.0) return base;
  // d_ray is linear along the segment between two unit rays, so scaling the
  // step hits the requested distance exactly.
  double want = stream.u01("region_ray_r", index) * radius;
  double t = std::min(1.0, want / dist);
  std::vector<double> out(base.size());
  for (std::size_t j = 0; j < base.size(); ++j)
    out[j] = (1.0 - t) * base[j] + t * target[j];
  return out;
}

double dist_to_panel(const ModuliPoint& p, const std::vector<ModuliPoint>& panel,
                     double alpha, double beta, double gamma_w,
                     const RandomStream& stream) {
  double best = std::numeric_limits<double>::infinity();
  for (const ModuliPoint& q : panel)
    best = std::min(best, d_sharp(p, q, alpha, beta, gamma_w, stream));
  return best;
}

}  // namespace

ModuliPoint sample_region_point(const RegionSpec& region,
                                const RandomStream& stream,
                                std::uint64_t index) {
  ModuliPoint p = region.base;
  for (std::size_t t = 0; t < p.tau.size(); ++t) {
    double shift = (2.0 * stream.u01("region_tau", index, t) - 1.0) *
                   region.delta_tau;
    p.tau[t] = clip01(p.tau[t] + shift);
  }
  p.copula = perturb_copula(region.base.copula, region.rho, stream, index);
  p.ray = perturb_ray(region.base.ray, region.delta_ray, stream, index);
  return p;
}

Panel build_delta_net(const RegionSpec& region, double delta, long long budget,
                      double alpha, double beta, double gamma_w,
                      const RandomStream& stream) {
  if (delta <= 0.0) throw ValidationError("net resolution must be positive");
  if (budget <= 0) throw ValidationError("net budget must be positive");
  Panel panel;
  panel.target_delta = delta;
  panel.grid_denom = static_cast<int>(std::ceil(4.0 / delta));

  // A zero-radius region is its base point; no net is needed and grid
  // snapping would only move the one point that matters.
  if (region.rho == 0.0 && region.delta_tau == 0.0 && region.delta_ray == 0.0) {
    panel.points.push_back(region.base);
    panel.achieved_radius = 0.0;
    panel.candidates_tried = 1;
    return panel;
  }

  RandomStream cand_stream = stream.child("net_candidates");
  std::uint64_t idx = 0;
  int consecutive_covered = 0;
  auto try_candidate = [&](const ModuliPoint& raw, bool force) {
    ModuliPoint snapped =
        snap_to_grid(raw, panel.grid_denom, alpha, beta, gamma_w, stream)
            .first;
    // A zero-radius coordinate is constant over the region; snapping it
    // would move panel points outside the region and force transport
    // solves against every probe. Pin it to the base instead.
    if (region.rho == 0.0) snapped.copula = region.base.copula;
    if (region.delta_tau == 0.0) snapped.tau = region.base.tau;
    if (region.delta_ray == 0.0) snapped.ray = region.base.ray;
    ++panel.candidates_tried;
    if (force || panel.points.empty() ||
        dist_to_panel(snapped, panel.points, alpha, beta, gamma_w, stream) >
            delta / 2.0) {
      panel.points.push_back(std::move(snapped));
      consecutive_covered = 0;
    } else {
      ++consecutive_covered;
    }
  };

  while (idx < static_cast<std::uint64_t>(budget) &&
         consecutive_covered < 1000) {
    try_candidate(sample_region_point(region, cand_stream, idx), false);
    ++idx;
  }

  // Validate against fresh samples; uncovered validation points are added
  // to the panel while the budget lasts.
  const int validation_points = 2000;
  for (int round = 0; round < 4; ++round) {
    RandomStream val_stream = stream.child("net_validation", round);
    double worst = 0.0;
    std::vector<ModuliPoint> uncovered;
    for (int v = 0; v < validation_points; ++v) {
      ModuliPoint probe = sample_region_point(region, val_stream, v);
      double d =
          dist_to_panel(probe, panel.points, alpha, beta, gamma_w, stream);
      worst = std::max(worst, d);
      if (d > delta) uncovered.push_back(std::move(probe));
    }
    panel.achieved_radius = worst;
    if (uncovered.empty()) break;
    if (panel.candidates_tried >= budget) {
      panel.covering_failed = true;
      break;
    }
    // Force-add repairs: an uncovered probe's snapped image can land within
    // delta/2 of the panel yet still pull the probe itself inside delta.
    for (ModuliPoint& probe : uncovered) {
      if (panel.candidates_tried >= budget) break;
      try_candidate(probe, true);
    }
  }
  if (panel.achieved_radius > delta && panel.candidates_tried >= budget)
    panel.covering_failed = true;
  return panel;
}

void score_panel(Panel& panel, const PointFunctional& f, Exec exec) {
  panel.scores.assign(panel.points.size(), 0.0);
  parallel_for(panel.points.size(), exec,
               [&](std::size_t i) { panel.scores[i] = f(panel.points[i]); });
}

CertificationReport certify(const Panel& panel, double threshold,
                            double margin, double lipschitz) {
  if (panel.scores.size() != panel.points.size())
    throw ValidationError("panel must be scored before certification");
  if (panel.points.empty()) throw ValidationError("empty certification panel");
  CertificationReport rep;
  rep.threshold = threshold;
  rep.margin = margin;
  rep.lipschitz = lipschitz;
  rep.delta = panel.achieved_radius;
  rep.covering_failed = panel.covering_failed;
  rep.panel_size = panel.points.size();
  rep.min_panel_score = *std::min_element(panel.scores.begin(),
                                          panel.scores.end());
  rep.max_panel_score = *std::max_element(panel.scores.begin(),
                                          panel.scores.end());
  rep.lower_bound = rep.min_panel_score - 2.0 * lipschitz * rep.delta;
  rep.panel_pass = rep.min_panel_score >= threshold + margin;
  rep.bound_pass = rep.lower_bound >= threshold - 2.0 * lipschitz * rep.delta;
  rep.pass = rep.panel_pass && rep.bound_pass && !rep.covering_failed;
  return rep;
}

DeterminacyReport determinacy_check(const Panel& panel,
                                    const PointFunctional& f,
                                    const PointFunctional& g, double l_f,
                                    double l_g, Exec exec) {
  if (panel.points.empty()) throw ValidationError("empty determinacy panel");
  std::vector<double> gaps(panel.points.size(), 0.0);
  parallel_for(panel.points.size(), exec, [&](std::size_t i) {
    gaps[i] = std::abs(f(panel.points[i]) - g(panel.points[i]));
  });
  DeterminacyReport rep;
  rep.max_panel_disagreement = *std::max_element(gaps.begin(), gaps.end());
  rep.bound = rep.max_panel_disagreement +
              (l_f + l_g) * panel.achieved_radius;
  return rep;
}

}  // namespace aai
