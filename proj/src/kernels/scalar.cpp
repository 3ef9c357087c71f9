#include "efflln/kernels.hpp"

namespace efflln::kernels::scalar {

std::uint64_t count_equal(std::span<const std::uint16_t> data, std::uint16_t value) {
  std::uint64_t n = 0;
  for (auto x : data) n += (x == value);
  return n;
}

// Multiply and add are kept separate (no fused multiply-add) so the vector
// version produces bit-identical results.
void axpy(std::span<double> out, double w, std::span<const double> kernel) {
  for (std::size_t j = 0; j < kernel.size(); ++j) {
    double t = w * kernel[j];
    out[j] = out[j] + t;
  }
}

// Four interleaved accumulators, reduced as (a0 + a2) + (a1 + a3), then the
// remainder; this is the lane order of the vector version.
double sum(std::span<const double> data) {
  double acc[4] = {0, 0, 0, 0};
  std::size_t i = 0;
  for (; i + 4 <= data.size(); i += 4)
    for (int l = 0; l < 4; ++l) acc[l] += data[i + l];
  double total = (acc[0] + acc[2]) + (acc[1] + acc[3]);
  for (; i < data.size(); ++i) total += data[i];
  return total;
}

}  // namespace efflln::kernels::scalar
