// AVX2+FMA backend. Compiled with -mavx2 -mfma in its own TU; only ever
// called after the runtime CPU check in kernels_dispatch.cpp.

#include <cmath>
#include <cstddef>

#include "bbm/kernels.hpp"

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>

namespace bbm {

namespace {

inline double combine_lanes(__m256d acc) {
  // (a0+a2) + (a1+a3), matching the scalar reference association.
  const __m128d lo = _mm256_castpd256_pd128(acc);
  const __m128d hi = _mm256_extractf128_pd(acc, 1);
  const __m128d pair = _mm_add_pd(lo, hi);  // (a0+a2, a1+a3)
  return _mm_cvtsd_f64(pair) + _mm_cvtsd_f64(_mm_unpackhi_pd(pair, pair));
}

double mean_avx2(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  const std::size_t n4 = n & ~std::size_t{3};
  for (; i < n4; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double s = combine_lanes(acc);
  for (; i < n; ++i) s += x[i];
  return s / static_cast<double>(n);
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  const std::size_t n4 = n & ~std::size_t{3};
  for (; i < n4; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
  double s = combine_lanes(acc);
  for (; i < n; ++i) s = std::fma(x[i], y[i], s);
  return s;
}

void affine_noise_avx2(double* out, const double* x, const double* g,
                       std::size_t n, double k0, double k1, double s) {
  const __m256d vk0 = _mm256_set1_pd(k0);
  const __m256d vk1 = _mm256_set1_pd(k1);
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  const std::size_t n4 = n & ~std::size_t{3};
  for (; i < n4; i += 4) {
    const __m256d vx = _mm256_loadu_pd(x + i);
    const __m256d vg = _mm256_loadu_pd(g + i);
    _mm256_storeu_pd(out + i,
                     _mm256_fmadd_pd(vs, vg, _mm256_fmadd_pd(vk1, vx, vk0)));
  }
  for (; i < n; ++i) out[i] = std::fma(s, g[i], std::fma(k1, x[i], k0));
}

void scale_diff_avx2(double* out, const double* x, std::size_t n, double m,
                     double gamma) {
  const __m256d vm = _mm256_set1_pd(m);
  const __m256d vg = _mm256_set1_pd(gamma);
  std::size_t i = 0;
  const std::size_t n4 = n & ~std::size_t{3};
  for (; i < n4; i += 4)
    _mm256_storeu_pd(
        out + i, _mm256_mul_pd(vg, _mm256_sub_pd(vm, _mm256_loadu_pd(x + i))));
  for (; i < n; ++i) out[i] = gamma * (m - x[i]);
}

void subtract_scalar_avx2(double* out, const double* x, std::size_t n,
                          double m) {
  const __m256d vm = _mm256_set1_pd(m);
  std::size_t i = 0;
  const std::size_t n4 = n & ~std::size_t{3};
  for (; i < n4; i += 4)
    _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(x + i), vm));
  for (; i < n; ++i) out[i] = x[i] - m;
}

constexpr KernelTable kAvx2Table = {
    "avx2",        mean_avx2,       dot_avx2,
    affine_noise_avx2, scale_diff_avx2, subtract_scalar_avx2,
};

}  // namespace

namespace detail {
const KernelTable* avx2_table() { return &kAvx2Table; }
}  // namespace detail

}  // namespace bbm

#else

namespace bbm {
namespace detail {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace detail
}  // namespace bbm

#endif
