#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "bbm/model.hpp"

namespace bbm {

/// Compactly supported nonnegative test function g. The gaussian bump is
/// truncated at 8 scales, making it effectively compact.
struct TestFunction {
  enum class Kind { Box, Ball, GaussianBump };
  Kind kind = Kind::Box;
  std::vector<double> center;
  std::vector<double> half_width;  // Box only
  double radius = 1.0;             // Ball only
  double scale = 1.0;              // GaussianBump only
  double amplitude = 1.0;

  int dim() const { return static_cast<int>(center.size()); }
  double eval(std::span<const double> x) const;
  /// Support slice in dimension k given the fixed coordinates x_0..x_{k-1}.
  /// Returns false when the slice is empty.
  bool slice_bounds(int k, std::span<const double> outer, double& lo,
                    double& hi) const;
  TestFunction shifted_to(std::span<const double> new_center) const;
  void validate() const;
};

/// Deterministic adaptive quadrature of density * g over g's support,
/// dimension by dimension; relative tolerance ~1e-6.
double integrate_against(const TestFunction& g,
                         const std::function<double(std::span<const double>)>&
                             density,
                         double rel_tol = 1e-6);

/// Conjectured limit of the normalized local mass conditional on the
/// center-of-mass limit x0: the gaussian attractor integral for gamma > 0,
/// the plain Lebesgue integral of g for gamma < 0. gamma = 0 is an error.
double predicted_limit(const TestFunction& g, double gamma,
                       std::span<const double> x0);

/// <Z_t, g> = sum_i g(Z^i).
double local_mass(const ParticleCloud& cloud, const TestFunction& g);

struct ConjectureConfig {
  double gamma = 1.0;
  int dim = 1;
  int target_time = 14;  // integer time M at which the mass is read
  std::size_t replicates = 100;
  std::uint64_t seed = 1;
  int threads = 0;
};

/// Exploratory probe of the local-mass conjecture. Never asserts the
/// conjecture itself: the report is descriptive, and the only hard checks
/// are the deterministic quadrature self-tests run elsewhere.
struct ConjectureReport {
  ConjectureConfig config;
  std::vector<double> x0_first_coord;
  std::vector<double> observed;
  std::vector<double> predicted;
  std::vector<double> ratio;
  double ratio_mean = 0.0, ratio_sd = 0.0, ratio_median = 0.0;
  double ratio_q10 = 0.0, ratio_q90 = 0.0;
  double uniform_particle_variance = 0.0;
  double candidate_ou = 0.0;        // 2 + 1/(2 gamma)
  double candidate_conjecture = 0.0;  // 2 + 1/(4 gamma^2)
  nlohmann::json to_json() const;
};

ConjectureReport conjecture_experiment(const ConjectureConfig& cfg,
                                       const TestFunction& g);

}  // namespace bbm
