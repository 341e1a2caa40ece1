#include "bbm/decomposition.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>

#include "bbm/kernels.hpp"

namespace bbm {

std::vector<double> apply_centering(std::span<const double> x) {
  std::vector<double> out(x.size());
  const double m = kernels().mean(x.data(), x.size());
  kernels().subtract_scalar(out.data(), x.data(), x.size(), m);
  return out;
}

void apply_centering_in_place(std::span<double> x) {
  const double m = kernels().mean(x.data(), x.size());
  kernels().subtract_scalar(x.data(), x.data(), x.size(), m);
}

std::vector<double> centering_matrix(int m) {
  if (m < 0 || m > 6)
    throw std::invalid_argument(
        "centering_matrix: materialization only for 0 <= m <= 6");
  const std::size_t n = std::size_t{1} << m;
  const double off = -1.0 / static_cast<double>(n);
  std::vector<double> a(n * n, off);
  for (std::size_t i = 0; i < n; ++i) a[i * n + i] = 1.0 + off;
  return a;
}

int centering_rank(int m) {
  const std::vector<double> a = centering_matrix(m);
  const Eigen::Index n = Eigen::Index{1} << m;
  Eigen::MatrixXd mat = Eigen::Map<const Eigen::MatrixXd>(a.data(), n, n);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(mat);
  const auto& sv = svd.singularValues();
  const double thresh = 1e-9 * sv(0);
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > thresh) ++rank;
  return rank;
}

void SubsystemWeights::validate() const {
  double s = 0.0, s2 = 0.0;
  for (double v : c) {
    s += v;
    s2 += v * v;
  }
  if (std::abs(s) > 1e-12)
    throw std::invalid_argument("SubsystemWeights: sum(c) = 0 violated");
  if (std::abs(s2 - 1.0) > 1e-12)
    throw std::invalid_argument("SubsystemWeights: sum(c^2) = 1 violated");
}

Lineage::Lineage(std::vector<std::size_t> initial, LineagePolicy policy,
                 RngStream* rng)
    : indices_(std::move(initial)), policy_(policy), rng_(rng) {
  if (policy_ == LineagePolicy::SeededRandom && rng_ == nullptr)
    throw std::invalid_argument("Lineage: SeededRandom requires a stream");
}

void Lineage::on_branch() {
  for (std::size_t& idx : indices_) {
    idx *= 2;
    if (policy_ == LineagePolicy::SeededRandom && rng_->uniform01() < 0.5)
      idx += 1;
  }
}

std::vector<double> psi_functional(const ParticleCloud& cloud,
                                   const SubsystemWeights& w,
                                   std::span<const std::size_t> lineage) {
  if (w.c.size() != lineage.size())
    throw std::invalid_argument("psi_functional: weights/lineage mismatch");
  const std::size_t n = cloud.count();
  if (w.c.size() > n)
    throw std::invalid_argument("psi_functional: k <= n violated");
  std::vector<double> psi(static_cast<std::size_t>(cloud.dim), 0.0);
  for (std::size_t i = 0; i < lineage.size(); ++i) {
    if (lineage[i] >= n)
      throw std::out_of_range("psi_functional: lineage index out of range");
    for (int k = 0; k < cloud.dim; ++k)
      psi[static_cast<std::size_t>(k)] += w.c[i] * cloud.pos(lineage[i], k);
  }
  return psi;
}

}  // namespace bbm
