#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace aai {

inline double clip01(double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); }

inline double clamp(double x, double lo, double hi) {
  return x < lo ? lo : (x > hi ? hi : x);
}

double mean(std::span<const double> xs);

// Population variance (divides by N, not N-1).
double variance_pop(std::span<const double> xs);

// Standard normal CDF.
double normal_cdf(double z);

// Inverse standard normal CDF on (0,1); rational approximation plus one
// Halley refinement, accurate to ~1e-15.
double normal_quantile(double p);

// Regularized incomplete beta I_x(a, b).
double incbeta(double a, double b, double x);

// Quantile of Beta(a, b) by bisection on incbeta; exact enough for
// simulation (|F(q) - p| < 1e-14).
double beta_quantile(double a, double b, double p);

// Lower-triangular Cholesky factor; throws std::invalid_argument if the
// matrix is not positive definite.
std::vector<std::vector<double>> cholesky(
    const std::vector<std::vector<double>>& m);

// Least squares min ||A x - y||_2 via Householder QR. A is row-major,
// rows >= cols required.
std::vector<double> qr_least_squares(const std::vector<std::vector<double>>& a,
                                     std::span<const double> y);

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
std::vector<double> symmetric_eigenvalues(std::vector<std::vector<double>> m);

// Smallest singular value of a (rows >= cols) matrix: sqrt of the smallest
// eigenvalue of A^T A.
double smallest_singular_value(const std::vector<std::vector<double>>& a);

// Two-sided Kolmogorov-Smirnov statistic of a sample against Unif[0,1].
double ks_uniform_statistic(std::vector<double> sample);

// Exact W1 between two 1-d empirical measures with equal sample counts:
// mean absolute difference of sorted samples.
double w1_sorted_1d(std::vector<double> a, std::vector<double> b);

// Kendall tau-a between two rankings of the same items: rankings are given
// as permutations (item -> rank). No ties allowed.
double kendall_tau(std::span<const double> rank_a,
                   std::span<const double> rank_b);

}  // namespace aai
