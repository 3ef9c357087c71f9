#pragma once

#include <cmath>
#include <cstdint>

namespace efflln::detail {

// Saddle-point binomial density (C. Loader, "Fast and accurate computation of
// binomial probabilities", 2000). Relative error is a few ulps across the
// whole range, including far tails where lgamma differences lose digits.

inline double stirlerr(double n) {
  constexpr double kS0 = 1.0 / 12, kS1 = 1.0 / 360, kS2 = 1.0 / 1260, kS3 = 1.0 / 1680,
                   kS4 = 1.0 / 1188;
  constexpr double kLnSqrt2Pi = 0.918938533204672741780329736406;
  if (n <= 15) return std::lgamma(n + 1) - (n + 0.5) * std::log(n) + n - kLnSqrt2Pi;
  const double nn = n * n;
  if (n > 500) return (kS0 - kS1 / nn) / n;
  if (n > 80) return (kS0 - (kS1 - kS2 / nn) / nn) / n;
  if (n > 35) return (kS0 - (kS1 - (kS2 - kS3 / nn) / nn) / nn) / n;
  return (kS0 - (kS1 - (kS2 - (kS3 - kS4 / nn) / nn) / nn) / nn) / n;
}

// x log(x / np) + np - x, computed without cancellation near x = np.
inline double bd0(double x, double np) {
  if (std::fabs(x - np) < 0.1 * (x + np)) {
    double v = (x - np) / (x + np);
    double s = (x - np) * v;
    double ej = 2 * x * v;
    v *= v;
    for (int j = 1; j < 1000; ++j) {
      ej *= v;
      double s1 = s + ej / (2 * j + 1);
      if (s1 == s) return s1;
      s = s1;
    }
  }
  return x * std::log(x / np) + np - x;
}

/// P(Bin(n, p) = x), with q = 1 - p passed separately to keep precision.
inline double dbinom(std::uint64_t x, std::uint64_t n, double p, double q) {
  if (x > n) return 0.0;
  if (p == 0) return x == 0 ? 1.0 : 0.0;
  if (q == 0) return x == n ? 1.0 : 0.0;
  const double dn = static_cast<double>(n), dx = static_cast<double>(x);
  if (x == 0) return std::exp(dn * (p < 0.1 ? std::log1p(-p) : std::log(q)));
  if (x == n) return std::exp(dn * (q < 0.1 ? std::log1p(-q) : std::log(p)));
  constexpr double k2Pi = 6.283185307179586476925286766559;
  const double lc = stirlerr(dn) - stirlerr(dx) - stirlerr(dn - dx) - bd0(dx, dn * p) -
                    bd0(dn - dx, dn * q);
  const double lf = k2Pi * dx * (dn - dx) / dn;
  return std::exp(lc) / std::sqrt(lf);
}

/// Relative error claimed for dbinom in error budgets.
inline constexpr double kDbinomRelErr = 1e-13;

}  // namespace efflln::detail
