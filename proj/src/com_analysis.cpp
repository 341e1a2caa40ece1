#include "bbm/com_analysis.hpp"

#include <cmath>
#include <stdexcept>

#include "bbm/kernels.hpp"

namespace bbm {

std::vector<double> com(const ParticleCloud& cloud) {
  std::vector<double> out(static_cast<std::size_t>(cloud.dim));
  const std::size_t n = cloud.count();
  for (int k = 0; k < cloud.dim; ++k)
    out[static_cast<std::size_t>(k)] = kernels().mean(cloud.coord(k).data(), n);
  return out;
}

double theoretical_com_variance(double t) {
  if (!(t >= 0.0))
    throw std::domain_error("theoretical_com_variance requires t >= 0");
  const double m = std::floor(t);
  const double tau = t - m;
  // sum_{k=0}^{m-1} 2^{-k} = 2 - 2^{1-m}
  const double geom = 2.0 * (1.0 - std::pow(0.5, m));
  return geom + tau * std::pow(0.5, m);
}

std::vector<TestReport> com_limit_test(const Ensemble& coms, double final_time,
                                       double level) {
  coms.validate();
  if (coms.rows < 1000)
    throw std::invalid_argument("com_limit_test: needs >= 1000 replicates");
  const double sigma = std::sqrt(theoretical_com_variance(final_time));
  std::vector<TestReport> reports;
  reports.reserve(coms.cols);
  for (std::size_t c = 0; c < coms.cols; ++c) {
    const std::vector<double> col = coms.column(c);
    TestReport r = ks_one_sample(
        col, [sigma](double x) { return normal_cdf(x, 0.0, sigma); }, level,
        "com_limit_coord" + std::to_string(c));
    r.extra = {{"t", final_time}, {"variance", sigma * sigma}};
    reports.push_back(std::move(r));
  }
  return reports;
}

QuadraticVariationSeries estimate_qv(
    std::span<const double> grid,
    const std::vector<std::vector<double>>& path_by_coord) {
  if (grid.size() < 2)
    throw std::invalid_argument("estimate_qv: needs at least 2 grid points");
  for (std::size_t j = 1; j < grid.size(); ++j) {
    const double step = grid[j] - grid[j - 1];
    if (!(step > 0.0)) throw std::invalid_argument("estimate_qv: unsorted mesh");
    if (step > 0.015625 + 1e-12)
      throw std::invalid_argument("estimate_qv: mesh spacing <= 2^-6 violated");
  }
  QuadraticVariationSeries s;
  s.dim = static_cast<int>(path_by_coord.size());
  s.grid.assign(grid.begin(), grid.end());
  s.qv.assign(path_by_coord.size() * grid.size(), 0.0);
  for (std::size_t k = 0; k < path_by_coord.size(); ++k) {
    const std::vector<double>& p = path_by_coord[k];
    if (p.size() != grid.size())
      throw std::invalid_argument("estimate_qv: path/grid length mismatch");
    double acc = 0.0;
    s.qv[k * grid.size()] = 0.0;
    for (std::size_t j = 1; j < grid.size(); ++j) {
      const double d = p[j] - p[j - 1];
      acc += d * d;
      s.qv[k * grid.size() + j] = acc;
    }
  }
  return s;
}

}  // namespace bbm
