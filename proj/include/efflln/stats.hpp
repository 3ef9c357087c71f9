#pragma once

#include <cstdint>

namespace efflln {

inline constexpr double kZ95 = 1.959963984540054;
inline constexpr double kZ3Sigma = 3.0;

struct WilsonInterval {
  double lo;
  double hi;
};

/// Wilson score interval for `successes` out of `trials` at quantile z.
WilsonInterval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z);

}  // namespace efflln
