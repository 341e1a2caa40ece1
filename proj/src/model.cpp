#include "bbm/model.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>
#include <string>

#include "bbm/kernels.hpp"

namespace bbm {

namespace {
constexpr double kBoundaryTol = 1e-9;
}

void ModelParams::validate() const {
  if (dim < 1) throw std::invalid_argument("dim >= 1 violated");
  if (max_epoch < 0) throw std::invalid_argument("max_epoch >= 0 violated");
  if (max_epoch > max_epoch_cap)
    throw std::invalid_argument("max_epoch <= " +
                                std::to_string(max_epoch_cap) +
                                " (particle cap) violated");
  if (!(dt > 0.0) || dt > 1.0)
    throw std::invalid_argument("dt in (0, 1] violated");
  double prev = -1.0;
  for (double tau : record_mesh) {
    if (!(tau >= 0.0) || tau >= 1.0)
      throw std::invalid_argument("record_mesh within [0,1) violated");
    if (tau <= prev)
      throw std::invalid_argument("record_mesh strictly increasing violated");
    prev = tau;
  }
  const std::size_t n_final = std::size_t{1} << max_epoch;
  if (n_final * static_cast<std::size_t>(dim) > memory_budget_doubles)
    throw std::invalid_argument("memory budget exceeded: 2^max_epoch * dim");
}

ParticleCloud ParticleCloud::single_at_origin(int dim) {
  ParticleCloud c;
  c.epoch = 0;
  c.tau = 0.0;
  c.dim = dim;
  c.coords.assign(static_cast<std::size_t>(dim), 0.0);
  return c;
}

bool ParticleCloud::all_finite() const {
  return std::all_of(coords.begin(), coords.end(),
                     [](double v) { return std::isfinite(v); });
}

GaussianIncrement GaussianIncrement::standard(std::size_t n, int dim,
                                              RngStream& rng) {
  GaussianIncrement g;
  g.dim = dim;
  g.block.resize(n * static_cast<std::size_t>(dim));
  rng.fill_normals(g.block);
  return g;
}

std::uint64_t n_of_t(double t) {
  if (!(t >= 0.0)) throw std::domain_error("n_of_t requires t >= 0");
  const double fl = std::floor(t);
  if (fl > 62.0) throw std::domain_error("n_of_t overflows past t = 62");
  return std::uint64_t{1} << static_cast<unsigned>(fl);
}

std::vector<double> net_drift(const ParticleCloud& cloud, double gamma) {
  const std::size_t n = cloud.count();
  std::vector<double> drift(cloud.coords.size());
  const KernelTable& k = kernels();
  for (int c = 0; c < cloud.dim; ++c) {
    const std::span<const double> x = cloud.coord(c);
    const double m = k.mean(x.data(), n);
    k.scale_diff(drift.data() + static_cast<std::size_t>(c) * n, x.data(), n,
                 m, gamma);
  }
  return drift;
}

std::vector<double> assemble_drift_flat(std::span<const double> flat, int dim,
                                        double gamma) {
  if (dim < 1 || flat.size() % static_cast<std::size_t>(dim) != 0)
    throw std::invalid_argument(
        "assemble_drift_flat: vector length must be a multiple of dim");
  const std::size_t n = flat.size() / static_cast<std::size_t>(dim);
  std::vector<double> out(flat.size());
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < dim; ++c) {
      // beta_{c + i*d} = 2^{-m} (x_c + x_{c+d} + ... ) - x_{c + i*d}
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        s += flat[j * static_cast<std::size_t>(dim) +
                  static_cast<std::size_t>(c)];
      const std::size_t idx =
          i * static_cast<std::size_t>(dim) + static_cast<std::size_t>(c);
      out[idx] = gamma * (s * inv_n - flat[idx]);
    }
  }
  return out;
}

void euler_step(ParticleCloud& cloud, const ModelParams& params,
                const GaussianIncrement& noise, double dt) {
  const std::size_t n = cloud.count();
  if (noise.block.size() != cloud.coords.size() || noise.dim != cloud.dim)
    throw std::invalid_argument("euler_step: noise block shape mismatch");
  if (cloud.tau + dt > 1.0 + kBoundaryTol)
    throw std::invalid_argument(
        "euler_step: step would cross the branching time");
  const double root_dt = std::sqrt(dt);
  const KernelTable& k = kernels();
  for (int c = 0; c < cloud.dim; ++c) {
    std::span<double> x = cloud.coord(c);
    const double m = k.mean(x.data(), n);
    // z + gamma*(m - z)*dt + sqrt(dt)*xi, as one fused affine pass
    k.affine_noise(x.data(), x.data(), noise.coord(c, n).data(), n,
                   params.gamma * dt * m, 1.0 - params.gamma * dt, root_dt);
  }
#ifndef NDEBUG
  {
    const std::vector<double> d = net_drift(cloud, params.gamma);
    for (int c = 0; c < cloud.dim; ++c) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        s += d[static_cast<std::size_t>(c) * n + i];
      assert(std::abs(s) <= 1e-9 * (1.0 + std::abs(params.gamma)) *
                                static_cast<double>(n));
    }
  }
#endif
  cloud.tau = std::min(cloud.tau + dt, 1.0);
}

double exact_transition_variance(double gamma, double h) {
  const double u = gamma * h;
  if (std::abs(u) < 1e-6)
    return h * (1.0 - u + (2.0 / 3.0) * u * u - (1.0 / 3.0) * u * u * u);
  return -std::expm1(-2.0 * u) / (2.0 * gamma);
}

void exact_epoch_step(ParticleCloud& cloud, const ModelParams& params,
                      double tau_target, RngStream& rng) {
  if (!(tau_target > cloud.tau) || tau_target > 1.0 + kBoundaryTol)
    throw std::invalid_argument("exact_epoch_step: tau_target out of range");
  const double h = tau_target - cloud.tau;
  const std::size_t n = cloud.count();
  const double decay = std::exp(-params.gamma * h);
  const double noise_sd = std::sqrt(exact_transition_variance(params.gamma, h));
  const double com_sd = std::sqrt(h / static_cast<double>(n));
  const KernelTable& k = kernels();

  std::vector<double> g(n);
  for (int c = 0; c < cloud.dim; ++c) {
    std::span<double> x = cloud.coord(c);
    // Draw order is fixed (n residual-driving normals, then the com kick)
    // so that runs with different gamma consume identical counters.
    rng.fill_normals(g);
    const double com_kick = rng.normal() * com_sd;
    const double m = k.mean(x.data(), n);
    const double g_mean = k.mean(g.data(), n);
    // z_i <- mean + c + decay*(z_i - mean) + noise_sd*(g_i - g_mean)
    const double k0 = m * (1.0 - decay) + com_kick - noise_sd * g_mean;
    k.affine_noise(x.data(), x.data(), g.data(), n, k0, decay, noise_sd);
  }
  cloud.tau = std::min(tau_target, 1.0);
}

void branch(ParticleCloud& cloud) {
  if (std::abs(cloud.tau - 1.0) > kBoundaryTol)
    throw std::logic_error("branch called mid-epoch");
  const std::size_t n = cloud.count();
  std::vector<double> next(2 * cloud.coords.size());
  for (int c = 0; c < cloud.dim; ++c) {
    const double* src = cloud.coords.data() + static_cast<std::size_t>(c) * n;
    double* dst = next.data() + static_cast<std::size_t>(c) * 2 * n;
    for (std::size_t i = 0; i < n; ++i) {
      dst[2 * i] = src[i];
      dst[2 * i + 1] = src[i];
    }
  }
  cloud.coords = std::move(next);
  cloud.epoch += 1;
  cloud.tau = 0.0;
}

namespace {

void run_epoch_exact(ParticleCloud& cloud, const ModelParams& params,
                     RngStream& rng, std::uint32_t replicate,
                     const SnapshotSink& sink) {
  for (double tau_rec : params.record_mesh) {
    if (tau_rec <= cloud.tau + kBoundaryTol) {
      if (sink) sink(replicate, cloud.time(), SnapshotPhase::MeshPoint, cloud);
      continue;
    }
    exact_epoch_step(cloud, params, tau_rec, rng);
    if (sink) sink(replicate, cloud.time(), SnapshotPhase::MeshPoint, cloud);
  }
  exact_epoch_step(cloud, params, 1.0, rng);
}

void run_epoch_euler(ParticleCloud& cloud, const ModelParams& params,
                     RngStream& rng, std::uint32_t replicate,
                     const SnapshotSink& sink) {
  const std::size_t n = cloud.count();
  const long long total = std::llround(1.0 / params.dt);
  if (std::abs(total * params.dt - 1.0) > 1e-9)
    throw std::invalid_argument(
        "euler sampler requires dt to divide the unit epoch");
  std::vector<long long> mesh_steps;
  mesh_steps.reserve(params.record_mesh.size());
  for (double tau_rec : params.record_mesh) {
    const long long j = std::llround(tau_rec / params.dt);
    if (std::abs(j * params.dt - tau_rec) > 1e-9)
      throw std::invalid_argument(
          "record_mesh must align with the dt grid for the euler sampler");
    mesh_steps.push_back(j);
  }
  std::size_t next_mesh = 0;
  for (long long j = 0; j < total; ++j) {
    while (next_mesh < mesh_steps.size() && mesh_steps[next_mesh] == j) {
      if (sink) sink(replicate, cloud.time(), SnapshotPhase::MeshPoint, cloud);
      ++next_mesh;
    }
    const GaussianIncrement noise =
        GaussianIncrement::standard(n, cloud.dim, rng);
    const double dt = (j == total - 1) ? 1.0 - cloud.tau : params.dt;
    euler_step(cloud, params, noise, dt);
  }
  cloud.tau = 1.0;
}

}  // namespace

void simulate(const ModelParams& params, std::uint64_t seed,
              std::uint32_t replicate, const SnapshotSink& sink) {
  params.validate();
  ParticleCloud cloud = ParticleCloud::single_at_origin(params.dim);
  if (sink) sink(replicate, 0.0, SnapshotPhase::Initial, cloud);
  for (int m = 0; m <= params.max_epoch; ++m) {
    RngStream rng(seed, replicate, static_cast<std::uint32_t>(m));
    if (params.sampler == Sampler::Exact)
      run_epoch_exact(cloud, params, rng, replicate, sink);
    else
      run_epoch_euler(cloud, params, rng, replicate, sink);
    if (sink) sink(replicate, cloud.time(), SnapshotPhase::PreBranch, cloud);
    if (m < params.max_epoch) {
      branch(cloud);
      if (sink)
        sink(replicate, cloud.time(), SnapshotPhase::PostBranch, cloud);
    }
  }
}

}  // namespace bbm
