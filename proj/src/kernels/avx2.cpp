#include <immintrin.h>

#include "efflln/kernels.hpp"

namespace efflln::kernels::avx2 {

__attribute__((target("avx2"))) std::uint64_t count_equal(std::span<const std::uint16_t> data,
                                                           std::uint16_t value) {
  const __m256i needle = _mm256_set1_epi16(static_cast<short>(value));
  std::uint64_t n = 0;
  std::size_t i = 0;
  const auto* p = data.data();
  for (; i + 16 <= data.size(); i += 16) {
    __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(p + i));
    auto mask = static_cast<unsigned>(_mm256_movemask_epi8(_mm256_cmpeq_epi16(v, needle)));
    n += static_cast<std::uint64_t>(__builtin_popcount(mask)) / 2;
  }
  for (; i < data.size(); ++i) n += (p[i] == value);
  return n;
}

__attribute__((target("avx2"))) void axpy(std::span<double> out, double w,
                                          std::span<const double> kernel) {
  const __m256d vw = _mm256_set1_pd(w);
  std::size_t j = 0;
  double* o = out.data();
  const double* k = kernel.data();
  for (; j + 4 <= kernel.size(); j += 4) {
    __m256d t = _mm256_mul_pd(vw, _mm256_loadu_pd(k + j));
    _mm256_storeu_pd(o + j, _mm256_add_pd(_mm256_loadu_pd(o + j), t));
  }
  for (; j < kernel.size(); ++j) {
    double t = w * k[j];
    o[j] = o[j] + t;
  }
}

__attribute__((target("avx2"))) double sum(std::span<const double> data) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= data.size(); i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(data.data() + i));
  __m128d lo = _mm256_castpd256_pd128(acc), hi = _mm256_extractf128_pd(acc, 1);
  __m128d pair = _mm_add_pd(lo, hi);  // (a0 + a2, a1 + a3)
  double total = _mm_cvtsd_f64(pair) + _mm_cvtsd_f64(_mm_unpackhi_pd(pair, pair));
  for (; i < data.size(); ++i) total += data[i];
  return total;
}

}  // namespace efflln::kernels::avx2
