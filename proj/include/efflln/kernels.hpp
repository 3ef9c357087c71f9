#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace efflln::kernels {

enum class Isa { Scalar, Avx2 };

/// The ISA chosen at startup: AVX2 when the CPU has it, unless the
/// EFFLLN_SIMD environment variable is set to "scalar".
Isa active_isa();
std::string_view isa_name(Isa isa);
bool isa_available(Isa isa);

/// Number of positions in `data` equal to `value`.
std::uint64_t count_equal(std::span<const std::uint16_t> data, std::uint16_t value);

/// out[i + j] += w * kernel[j] for every j, i.e. one row of a discrete
/// convolution. `out` must hold at least i + kernel.size() entries; the
/// caller passes the already-offset span.
void axpy(std::span<double> out, double w, std::span<const double> kernel);

/// Sum of data, accumulated in four lanes then reduced.
double sum(std::span<const double> data);

namespace scalar {
std::uint64_t count_equal(std::span<const std::uint16_t> data, std::uint16_t value);
void axpy(std::span<double> out, double w, std::span<const double> kernel);
double sum(std::span<const double> data);
}  // namespace scalar

namespace avx2 {
std::uint64_t count_equal(std::span<const std::uint16_t> data, std::uint16_t value);
void axpy(std::span<double> out, double w, std::span<const double> kernel);
double sum(std::span<const double> data);
}  // namespace avx2

}  // namespace efflln::kernels
