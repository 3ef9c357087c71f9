#include "efflln/stats.hpp"

#include <algorithm>
#include <cmath>

#include "efflln/error.hpp"

namespace efflln {

WilsonInterval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z) {
  require(successes <= trials, "wilson_interval: successes exceed trials");
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1 + z2 / n;
  const double center = (p + z2 / (2 * n)) / denom;
  const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

}  // namespace efflln
