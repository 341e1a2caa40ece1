#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bbm/model.hpp"
#include "bbm/stats.hpp"

namespace bbm {

/// Coordinate-wise mean of the cloud.
std::vector<double> com(const ParticleCloud& cloud);

struct ComRecord {
  double t = 0.0;
  std::uint32_t replicate = 0;
  std::vector<double> com;
};

/// Per-coordinate variance of the center of mass at time t:
/// sum_{k<floor(t)} 2^{-k} + (t - floor(t)) 2^{-floor(t)}. Tends to 2.
double theoretical_com_variance(double t);

/// KS test of each coordinate of the t = M ensemble against
/// Normal(0, theoretical_com_variance(M)). Requires >= 1000 replicates.
std::vector<TestReport> com_limit_test(const Ensemble& coms_at_final_time,
                                       double final_time, double level);

struct QuadraticVariationSeries {
  int dim = 1;
  std::vector<double> grid;
  std::vector<double> qv;  // coordinate-major cumulative sums on grid
  double total(int k) const {
    return qv[static_cast<std::size_t>(k + 1) * grid.size() - 1];
  }
};

/// Cumulative squared-increment sums per coordinate over a recorded path.
/// path_by_coord[k][j] is coordinate k at grid[j]. The grid must be
/// strictly increasing with spacing <= 2^-6.
QuadraticVariationSeries estimate_qv(
    std::span<const double> grid,
    const std::vector<std::vector<double>>& path_by_coord);

}  // namespace bbm
