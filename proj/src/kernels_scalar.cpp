#include <cmath>
#include <cstddef>

#include "bbm/kernels.hpp"

namespace bbm {

namespace {

// Reference backend. The reductions step in strides of 4 with independent
// accumulators combined as (a0+a2)+(a1+a3); the AVX2 backend reproduces
// exactly this association, which is what makes the two bitwise-equal.

double mean_scalar(const double* x, std::size_t n) {
  double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
  std::size_t i = 0;
  const std::size_t n4 = n & ~std::size_t{3};
  for (; i < n4; i += 4) {
    a0 += x[i];
    a1 += x[i + 1];
    a2 += x[i + 2];
    a3 += x[i + 3];
  }
  double s = (a0 + a2) + (a1 + a3);
  for (; i < n; ++i) s += x[i];
  return s / static_cast<double>(n);
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
  std::size_t i = 0;
  const std::size_t n4 = n & ~std::size_t{3};
  for (; i < n4; i += 4) {
    a0 = std::fma(x[i], y[i], a0);
    a1 = std::fma(x[i + 1], y[i + 1], a1);
    a2 = std::fma(x[i + 2], y[i + 2], a2);
    a3 = std::fma(x[i + 3], y[i + 3], a3);
  }
  double s = (a0 + a2) + (a1 + a3);
  for (; i < n; ++i) s = std::fma(x[i], y[i], s);
  return s;
}

void affine_noise_scalar(double* out, const double* x, const double* g,
                         std::size_t n, double k0, double k1, double s) {
  for (std::size_t i = 0; i < n; ++i)
    out[i] = std::fma(s, g[i], std::fma(k1, x[i], k0));
}

void scale_diff_scalar(double* out, const double* x, std::size_t n, double m,
                       double gamma) {
  for (std::size_t i = 0; i < n; ++i) out[i] = gamma * (m - x[i]);
}

void subtract_scalar_scalar(double* out, const double* x, std::size_t n,
                            double m) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] - m;
}

constexpr KernelTable kScalarTable = {
    "scalar",      mean_scalar,       dot_scalar,
    affine_noise_scalar, scale_diff_scalar, subtract_scalar_scalar,
};

}  // namespace

const KernelTable& kernels_scalar() { return kScalarTable; }

}  // namespace bbm
