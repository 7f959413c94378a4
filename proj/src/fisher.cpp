#include "relmap/fisher.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace relmap {
namespace {

// Continued fraction for the incomplete beta function (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw std::runtime_error("incomplete beta continued fraction did not converge");
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw std::invalid_argument("incomplete beta requires a, b > 0");
  }
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  // Use the continued fraction in its fast-converging region.
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return std::exp(log_front) * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - std::exp(log_front) * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double fisher_cdf(double x, int d1, int d2) {
  if (d1 <= 0 || d2 <= 0) {
    throw std::invalid_argument("fisher_cdf requires positive degrees of freedom");
  }
  if (x <= 0.0) return 0.0;
  const double a = 0.5 * d1;
  const double b = 0.5 * d2;
  const double z = d1 * x / (d1 * x + d2);
  return regularized_incomplete_beta(a, b, z);
}

double fisher_quantile(double q, int d1, int d2) {
  if (!(q > 0.0 && q < 1.0)) {
    throw std::invalid_argument("fisher_quantile requires q in (0,1)");
  }
  if (d1 <= 0 || d2 <= 0) {
    throw std::invalid_argument("fisher_quantile requires positive degrees of freedom");
  }

  // Bracket the root, then bisect. The CDF is monotone so this is robust;
  // the interval is shrunk well below the 1e-10 target.
  double lo = 0.0;
  double hi = 1.0;
  int expansions = 0;
  while (fisher_cdf(hi, d1, d2) < q) {
    lo = hi;
    hi *= 2.0;
    if (++expansions > 2100) {
      throw std::runtime_error("fisher_quantile failed to bracket the root");
    }
  }
  constexpr double kAbsTol = 1e-10;
  for (int it = 0; it < 500; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (fisher_cdf(mid, d1, d2) < q) {
      lo = mid;
    } else {
      hi = mid;
    }
    // Absolute target, relaxed to ulp resolution for very large quantiles.
    if (hi - lo < 0.5 * kAbsTol || hi - lo < 4.0 * mid * std::numeric_limits<double>::epsilon()) {
      return 0.5 * (lo + hi);
    }
  }
  throw std::runtime_error("fisher_quantile bisection did not converge");
}

}  // namespace relmap
