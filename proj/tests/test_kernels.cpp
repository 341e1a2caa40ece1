#include <doctest.h>

#include <cstring>
#include <vector>

#include "bbm/kernels.hpp"
#include "bbm/rng.hpp"

using namespace bbm;

namespace {

std::vector<double> random_vec(std::size_t n, RngStream& rng, double scale) {
  std::vector<double> v(n);
  rng.fill_normals(v);
  for (double& x : v) x *= scale;
  return v;
}

}  // namespace

// The scalar and AVX2 backends promise bitwise-identical results: the
// reductions share one 4-lane accumulation pattern and the elementwise
// kernels share the fma contraction order.
TEST_CASE("scalar and avx2 backends agree bitwise") {
  const KernelTable* avx2 = kernels_avx2();
  if (!avx2) {
    MESSAGE("AVX2 not available on this CPU; dispatch covered by scalar");
    return;
  }
  const KernelTable& ref = kernels_scalar();
  RngStream rng(77, 0, 0);
  for (std::size_t n :
       {std::size_t{1}, std::size_t{2}, std::size_t{3}, std::size_t{4},
        std::size_t{5}, std::size_t{7}, std::size_t{8}, std::size_t{15},
        std::size_t{16}, std::size_t{63}, std::size_t{100}, std::size_t{1024},
        std::size_t{4097}}) {
    const std::vector<double> x = random_vec(n, rng, 3.0);
    const std::vector<double> y = random_vec(n, rng, 0.5);

    CHECK(ref.mean(x.data(), n) == avx2->mean(x.data(), n));
    CHECK(ref.dot(x.data(), y.data(), n) == avx2->dot(x.data(), y.data(), n));

    std::vector<double> a(n), b(n);
    ref.affine_noise(a.data(), x.data(), y.data(), n, 0.25, 0.75, 1.5);
    avx2->affine_noise(b.data(), x.data(), y.data(), n, 0.25, 0.75, 1.5);
    CHECK(std::memcmp(a.data(), b.data(), n * sizeof(double)) == 0);

    ref.scale_diff(a.data(), x.data(), n, 0.125, -2.0);
    avx2->scale_diff(b.data(), x.data(), n, 0.125, -2.0);
    CHECK(std::memcmp(a.data(), b.data(), n * sizeof(double)) == 0);

    ref.subtract_scalar(a.data(), x.data(), n, 0.7);
    avx2->subtract_scalar(b.data(), x.data(), n, 0.7);
    CHECK(std::memcmp(a.data(), b.data(), n * sizeof(double)) == 0);
  }
}

TEST_CASE("kernel arithmetic basics") {
  const KernelTable& k = kernels();
  const std::vector<double> x{1.0, 2.0, 3.0, 4.0, 5.0};
  CHECK(k.mean(x.data(), x.size()) == doctest::Approx(3.0));
  const std::vector<double> y{1.0, 1.0, 1.0, 1.0, 1.0};
  CHECK(k.dot(x.data(), y.data(), x.size()) == doctest::Approx(15.0));

  std::vector<double> out(5);
  k.affine_noise(out.data(), x.data(), y.data(), 5, 10.0, 2.0, 3.0);
  for (std::size_t i = 0; i < 5; ++i)
    CHECK(out[i] == doctest::Approx(10.0 + 2.0 * x[i] + 3.0));

  k.scale_diff(out.data(), x.data(), 5, 3.0, -1.0);
  for (std::size_t i = 0; i < 5; ++i)
    CHECK(out[i] == doctest::Approx(-(3.0 - x[i])));

  k.subtract_scalar(out.data(), x.data(), 5, 3.0);
  for (std::size_t i = 0; i < 5; ++i)
    CHECK(out[i] == doctest::Approx(x[i] - 3.0));
}

TEST_CASE("dispatch honors the BBM_KERNELS override") {
  // The dispatched table is one of the two backends.
  const KernelTable& k = kernels();
  const bool is_scalar = std::strcmp(k.name, "scalar") == 0;
  const bool is_avx2 = std::strcmp(k.name, "avx2") == 0;
  CHECK((is_scalar || is_avx2));
  if (is_avx2) CHECK(kernels_avx2() != nullptr);
}
