#include <cstdlib>
#include <cstring>

#include "efflln/kernels.hpp"

namespace efflln::kernels {

bool isa_available(Isa isa) {
  if (isa == Isa::Scalar) return true;
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Isa active_isa() {
  static const Isa isa = [] {
    const char* env = std::getenv("EFFLLN_SIMD");
    if (env && std::strcmp(env, "scalar") == 0) return Isa::Scalar;
    return isa_available(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar;
  }();
  return isa;
}

std::string_view isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

std::uint64_t count_equal(std::span<const std::uint16_t> data, std::uint16_t value) {
  return active_isa() == Isa::Avx2 ? avx2::count_equal(data, value)
                                   : scalar::count_equal(data, value);
}

void axpy(std::span<double> out, double w, std::span<const double> kernel) {
  if (active_isa() == Isa::Avx2) {
    avx2::axpy(out, w, kernel);
  } else {
    scalar::axpy(out, w, kernel);
  }
}

double sum(std::span<const double> data) {
  return active_isa() == Isa::Avx2 ? avx2::sum(data) : scalar::sum(data);
}

}  // namespace efflln::kernels
