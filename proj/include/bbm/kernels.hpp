#pragma once

#include <cstddef>

namespace bbm {

/// Inner-loop kernels over contiguous coordinate arrays. Two backends:
/// a scalar reference and an AVX2+FMA variant, selected once at startup.
///
/// The reductions (mean, dot) are specified with a fixed 4-lane
/// accumulation pattern, identical in both backends, so the equivalence
/// tests can assert bitwise-equal results rather than ULP bands. The
/// elementwise kernels use the same fma contraction in both backends.
struct KernelTable {
  const char* name;

  // 4-lane strided sum / count.
  double (*mean)(const double* x, std::size_t n);
  // 4-lane strided fma dot product.
  double (*dot)(const double* x, const double* y, std::size_t n);
  // out[i] = k0 + k1*x[i] + s*g[i]   (Euler and exact-transition update)
  void (*affine_noise)(double* out, const double* x, const double* g,
                       std::size_t n, double k0, double k1, double s);
  // out[i] = gamma * (m - x[i])      (mean-field drift rows)
  void (*scale_diff)(double* out, const double* x, std::size_t n, double m,
                     double gamma);
  // out[i] = x[i] - m                (centering)
  void (*subtract_scalar)(double* out, const double* x, std::size_t n,
                          double m);
};

/// Backend selected at startup: AVX2 if the CPU supports AVX2+FMA and the
/// environment variable BBM_KERNELS is not "scalar"; scalar otherwise.
const KernelTable& kernels();

const KernelTable& kernels_scalar();
/// nullptr when the CPU lacks AVX2/FMA.
const KernelTable* kernels_avx2();

}  // namespace bbm
