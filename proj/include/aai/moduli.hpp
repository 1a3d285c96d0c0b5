#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "aai/battery.hpp"
#include "aai/canonical.hpp"
#include "aai/rng.hpp"

namespace aai {

struct DiscreteMeasure {
  std::vector<std::vector<double>> atoms;  // equal-length coordinate vectors
  std::vector<double> weights;             // positive, sums to 1

  std::size_t size() const { return atoms.size(); }
  std::size_t dim() const { return atoms.empty() ? 0 : atoms[0].size(); }
  void validate() const;

  // Merges exactly-equal atoms; drops zero weights; renormalizes.
  static DiscreteMeasure normalized(std::vector<std::vector<double>> atoms,
                                    std::vector<double> weights);
};

struct TransportPlan {
  std::vector<int> src, dst;  // sparse coupling entries
  std::vector<double> flow;
  double cost = 0.0;
  std::vector<std::vector<double>> src_atoms, dst_atoms;
};

// Ground metric on joint u-vectors: mean absolute coordinate difference.
double ground_distance(std::span<const double> x, std::span<const double> y);

// Exact W1 between discrete measures by the transportation simplex.
// Errors when size(mu)*size(nu) > 1e6; callers that may exceed the cap use
// w1_capped which subsamples deterministically first.
std::pair<double, TransportPlan> w1(const DiscreteMeasure& mu,
                                    const DiscreteMeasure& nu);

// Deterministic stratified subsample down to max_atoms (sorted order,
// systematic strides, keyed offset); weights renormalized.
DiscreteMeasure stratified_subsample(const DiscreteMeasure& m,
                                     std::size_t max_atoms,
                                     const RandomStream& stream);

// w1 after capping each side at 1000 atoms; *subsampled reports whether
// any side was reduced.
std::pair<double, TransportPlan> w1_capped(const DiscreteMeasure& mu,
                                           const DiscreteMeasure& nu,
                                           const RandomStream& stream,
                                           bool* subsampled = nullptr);

// l1 distance between l1-normalized rays; zero-mass rays are an error.
double d_ray(std::span<const double> r, std::span<const double> rp);

struct ModuliPoint {
  Skeleton skeleton;
  std::vector<double> tau;
  DiscreteMeasure copula;
  std::vector<double> ray;
};

// Joint empirical copula of a canonical rep; unequal run counts are padded
// by keyed resampling and *pad_count reports how many samples were added.
DiscreteMeasure empirical_copula(const CanonicalRep& canon,
                                 const RandomStream& stream,
                                 int* pad_count = nullptr);

ModuliPoint moduli_point_of(const CanonicalRep& canon, const Battery& b,
                            const RandomStream& stream);

// Pair metric alpha*W1 + beta*||tau - tau'||_1 + gamma_w*d_ray. Requires
// equal skeletons and matching dimensions.
double d_sharp(const ModuliPoint& a, const ModuliPoint& b, double alpha,
               double beta, double gamma_w, const RandomStream& stream);

// McCann interpolation of a transport plan: atoms (1-t)x + ty carrying the
// plan's flow; t in [0,1], endpoints reproduce the marginals exactly.
DiscreteMeasure displacement_interpolate(const TransportPlan& plan, double t);

// Rounds tau, atom coordinates, and the ray to the 1/denom grid (ray
// renormalized); returns the snapped point and its distance to the input.
std::pair<ModuliPoint, double> snap_to_grid(const ModuliPoint& p, int denom,
                                            double alpha, double beta,
                                            double gamma_w,
                                            const RandomStream& stream);

}  // namespace aai
