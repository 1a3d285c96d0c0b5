#include "aai/mathutil.hpp"

#include <algorithm>
#include <cmath>

#include "aai/rng.hpp"

namespace aai {

double mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean of empty sample");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double variance_pop(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("variance of empty sample");
  double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size());
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("normal_quantile needs p in (0,1)");
  }
  // Acklam's rational approximation.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    double q = p - 0.5;
    double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // One Halley step against the exact CDF.
  double e = normal_cdf(x) - p;
  double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  x = x - u / (1.0 + x * u / 2.0);
  return x;
}

double RandomStream::normal(std::string_view tag, std::uint64_t a,
                            std::uint64_t b, std::uint64_t c) const {
  double u = u01(tag, a, b, c);
  // Keep strictly inside (0,1).
  u = clamp(u, 0x1.0p-60, 1.0 - 0x1.0p-53);
  return normal_quantile(u);
}

namespace {

// Continued fraction for the incomplete beta (Lentz's method).
double incbeta_cf(double a, double b, double x) {
  const double tiny = 1e-300;
  const double eps = 1e-16;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double cc = 1.0;
  double dd = 1.0 - qab * x / qap;
  if (std::fabs(dd) < tiny) dd = tiny;
  dd = 1.0 / dd;
  double h = dd;
  for (int m = 1; m <= 300; ++m) {
    double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    dd = 1.0 + aa * dd;
    if (std::fabs(dd) < tiny) dd = tiny;
    cc = 1.0 + aa / cc;
    if (std::fabs(cc) < tiny) cc = tiny;
    dd = 1.0 / dd;
    h *= dd * cc;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    dd = 1.0 + aa * dd;
    if (std::fabs(dd) < tiny) dd = tiny;
    cc = 1.0 + aa / cc;
    if (std::fabs(cc) < tiny) cc = tiny;
    dd = 1.0 / dd;
    double del = dd * cc;
    h *= del;
    if (std::fabs(del - 1.0) < eps) break;
  }
  return h;
}

}  // namespace

double incbeta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) throw std::invalid_argument("incbeta shape <= 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double lbeta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  double front =
      std::exp(a * std::log(x) + b * std::log(1.0 - x) - lbeta);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * incbeta_cf(a, b, x) / a;
  }
  return 1.0 - std::exp(b * std::log(1.0 - x) + a * std::log(x) - lbeta) *
                   incbeta_cf(b, a, 1.0 - x) / b;
}

double beta_quantile(double a, double b, double p) {
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (incbeta(a, b, mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-16) break;
  }
  return 0.5 * (lo + hi);
}

std::vector<std::vector<double>> cholesky(
    const std::vector<std::vector<double>>& m) {
  std::size_t n = m.size();
  std::vector<std::vector<double>> l(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = m[i][j];
      for (std::size_t k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
      if (i == j) {
        if (s <= 0.0) {
          throw std::invalid_argument("matrix not positive definite");
        }
        l[i][j] = std::sqrt(s);
      } else {
        l[i][j] = s / l[j][j];
      }
    }
  }
  return l;
}

std::vector<double> qr_least_squares(const std::vector<std::vector<double>>& a,
                                     std::span<const double> y) {
  std::size_t rows = a.size();
  if (rows == 0) throw std::invalid_argument("empty design matrix");
  std::size_t cols = a[0].size();
  if (rows < cols) throw std::invalid_argument("underdetermined system");
  if (y.size() != rows) throw std::invalid_argument("rhs size mismatch");

  std::vector<std::vector<double>> r = a;
  std::vector<double> rhs(y.begin(), y.end());

  for (std::size_t k = 0; k < cols; ++k) {
    double norm = 0.0;
    for (std::size_t i = k; i < rows; ++i) norm += r[i][k] * r[i][k];
    norm = std::sqrt(norm);
    if (norm == 0.0) throw std::invalid_argument("rank-deficient design");
    double alpha = r[k][k] > 0 ? -norm : norm;
    std::vector<double> v(rows, 0.0);
    v[k] = r[k][k] - alpha;
    for (std::size_t i = k + 1; i < rows; ++i) v[i] = r[i][k];
    double vtv = 0.0;
    for (std::size_t i = k; i < rows; ++i) vtv += v[i] * v[i];
    if (vtv == 0.0) continue;
    for (std::size_t j = k; j < cols; ++j) {
      double dot = 0.0;
      for (std::size_t i = k; i < rows; ++i) dot += v[i] * r[i][j];
      double f = 2.0 * dot / vtv;
      for (std::size_t i = k; i < rows; ++i) r[i][j] -= f * v[i];
    }
    double dot = 0.0;
    for (std::size_t i = k; i < rows; ++i) dot += v[i] * rhs[i];
    double f = 2.0 * dot / vtv;
    for (std::size_t i = k; i < rows; ++i) rhs[i] -= f * v[i];
  }

  std::vector<double> x(cols, 0.0);
  for (std::size_t k = cols; k-- > 0;) {
    double s = rhs[k];
    for (std::size_t j = k + 1; j < cols; ++j) s -= r[k][j] * x[j];
    x[k] = s / r[k][k];
  }
  return x;
}

std::vector<double> symmetric_eigenvalues(std::vector<std::vector<double>> m) {
  std::size_t n = m.size();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += m[i][j] * m[i][j];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::fabs(m[p][q]) < 1e-300) continue;
        double theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          double mkp = m[k][p], mkq = m[k][q];
          m[k][p] = c * mkp - s * mkq;
          m[k][q] = s * mkp + c * mkq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double mpk = m[p][k], mqk = m[q][k];
          m[p][k] = c * mpk - s * mqk;
          m[q][k] = s * mpk + c * mqk;
        }
      }
    }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = m[i][i];
  std::sort(ev.begin(), ev.end());
  return ev;
}

double smallest_singular_value(const std::vector<std::vector<double>>& a) {
  std::size_t rows = a.size();
  if (rows == 0) return 0.0;
  std::size_t cols = a[0].size();
  std::vector<std::vector<double>> ata(cols, std::vector<double>(cols, 0.0));
  for (std::size_t i = 0; i < cols; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < rows; ++k) s += a[k][i] * a[k][j];
      ata[i][j] = s;
    }
  }
  double lam = symmetric_eigenvalues(std::move(ata)).front();
  return lam > 0.0 ? std::sqrt(lam) : 0.0;
}

double ks_uniform_statistic(std::vector<double> sample) {
  if (sample.empty()) throw std::invalid_argument("empty sample");
  std::sort(sample.begin(), sample.end());
  double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    double hi = (static_cast<double>(i) + 1.0) / n - sample[i];
    double lo = sample[i] - static_cast<double>(i) / n;
    d = std::max(d, std::max(hi, lo));
  }
  return d;
}

double w1_sorted_1d(std::vector<double> a, std::vector<double> b) {
  if (a.size() != b.size() || a.empty()) {
    throw std::invalid_argument("w1_sorted_1d needs equal nonempty samples");
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

double kendall_tau(std::span<const double> rank_a,
                   std::span<const double> rank_b) {
  std::size_t n = rank_a.size();
  if (n != rank_b.size() || n < 2) {
    throw std::invalid_argument("kendall_tau needs two rankings, n >= 2");
  }
  long long concordant = 0, discordant = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double da = rank_a[i] - rank_a[j];
      double db = rank_b[i] - rank_b[j];
      if (da == 0.0 || db == 0.0) {
        throw std::invalid_argument("tied ranks not supported");
      }
      if ((da > 0) == (db > 0)) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  return static_cast<double>(concordant - discordant) / pairs;
}

}  // namespace aai
