#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "bbm/rng.hpp"

namespace bbm {

enum class Sampler { Exact, Euler };

/// Model parameters for the self-interacting branching Brownian motion.
/// gamma > 0 attracts every particle toward the center of mass, gamma < 0
/// repels, gamma = 0 is plain dyadic BBM.
struct ModelParams {
  double gamma = 0.0;
  int dim = 1;
  int max_epoch = 0;  // unit epochs 0..max_epoch are simulated
  Sampler sampler = Sampler::Exact;
  double dt = 1e-3;                 // Euler step, used only by Sampler::Euler
  std::vector<double> record_mesh;  // intra-epoch record times in [0,1)
  int max_epoch_cap = 16;           // 2^16 = 65536 particles
  std::size_t memory_budget_doubles = std::size_t{1} << 23;

  /// Throws std::invalid_argument naming the violated invariant.
  void validate() const;
};

/// Particle state at one instant: n = 2^epoch positions in `dim`
/// dimensions, stored coordinate-major (coords[k*n + i] is coordinate k of
/// particle i). tau lies in [0,1]; tau == 1 only as the pre-branch
/// boundary state.
struct ParticleCloud {
  int epoch = 0;
  double tau = 0.0;
  int dim = 1;
  std::vector<double> coords;

  static ParticleCloud single_at_origin(int dim);

  std::size_t count() const {
    return dim > 0 ? coords.size() / static_cast<std::size_t>(dim) : 0;
  }
  double time() const { return epoch + tau; }
  std::span<const double> coord(int k) const {
    const std::size_t n = count();
    return {coords.data() + static_cast<std::size_t>(k) * n, n};
  }
  std::span<double> coord(int k) {
    const std::size_t n = count();
    return {coords.data() + static_cast<std::size_t>(k) * n, n};
  }
  double pos(std::size_t particle, int k) const {
    return coords[static_cast<std::size_t>(k) * count() + particle];
  }
  bool all_finite() const;
};

/// Driving noise block matching a cloud's layout: n x dim i.i.d. standard
/// normals, coordinate-major.
struct GaussianIncrement {
  int dim = 1;
  std::vector<double> block;

  static GaussianIncrement standard(std::size_t n, int dim, RngStream& rng);
  std::span<const double> coord(int k, std::size_t n) const {
    return {block.data() + static_cast<std::size_t>(k) * n, n};
  }
};

/// Number of particles alive at time t: 2^floor(t).
std::uint64_t n_of_t(double t);

/// Mean-field drift rows gamma*(mean - Z^i), coordinate-major n x dim.
/// One mean pass and one subtraction pass per coordinate.
std::vector<double> net_drift(const ParticleCloud& cloud, double gamma);

/// The same drift assembled from a flat particle-major vector
/// (x_1..x_d, x_{1+d}..x_{2d}, ...), component by component. Kept naive
/// on purpose: it is the independent cross-check for net_drift.
std::vector<double> assemble_drift_flat(std::span<const double> flat, int dim,
                                        double gamma);

/// Explicit Euler-Maruyama update Z^i += gamma*(mean - Z^i)*dt + sqrt(dt)*xi.
/// Throws if the step would cross the epoch boundary.
void euler_step(ParticleCloud& cloud, const ModelParams& params,
                const GaussianIncrement& noise, double dt);

/// Exact Gaussian transition of the interacting system over
/// h = tau_target - tau, sampled in O(n*dim) without forming any n x n
/// matrix: the center of mass gains an independent N(0, h/n) kick and the
/// residuals decay by e^{-gamma h} plus centered OU noise.
void exact_epoch_step(ParticleCloud& cloud, const ModelParams& params,
                      double tau_target, RngStream& rng);

/// Integrated OU noise variance v(gamma,h) = (1 - e^{-2 gamma h})/(2 gamma),
/// with a series fallback near gamma*h = 0.
double exact_transition_variance(double gamma, double h);

/// Dyadic branching at the epoch boundary: every particle is replaced by
/// two children at its position; children 2i, 2i+1 descend from parent i.
void branch(ParticleCloud& cloud);

enum class SnapshotPhase { Initial, MeshPoint, PreBranch, PostBranch };

using SnapshotSink = std::function<void(
    std::uint32_t replicate, double t, SnapshotPhase, const ParticleCloud&)>;

/// Runs epochs 0..max_epoch from a single particle at the origin, ending
/// at the pre-branch boundary t = max_epoch + 1. Emits the initial state,
/// every mesh time, and the pre-/post-branch states at integer times.
/// Deterministic given (params, seed, replicate): the noise stream for
/// epoch m is keyed by (seed, replicate, m).
void simulate(const ModelParams& params, std::uint64_t seed,
              std::uint32_t replicate, const SnapshotSink& sink);

}  // namespace bbm
