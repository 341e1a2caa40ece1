#include "bbm/conjecture.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "bbm/com_analysis.hpp"
#include "bbm/runner.hpp"
#include "bbm/stats.hpp"

namespace bbm {

void TestFunction::validate() const {
  if (center.empty()) throw std::invalid_argument("TestFunction: empty center");
  if (amplitude < 0.0)
    throw std::invalid_argument("TestFunction: nonnegativity violated");
  switch (kind) {
    case Kind::Box:
      if (half_width.size() != center.size())
        throw std::invalid_argument("TestFunction: half_width shape");
      for (double h : half_width)
        if (!(h > 0.0))
          throw std::invalid_argument("TestFunction: half_width > 0");
      break;
    case Kind::Ball:
      if (!(radius > 0.0))
        throw std::invalid_argument("TestFunction: radius > 0");
      break;
    case Kind::GaussianBump:
      if (!(scale > 0.0))
        throw std::invalid_argument("TestFunction: scale > 0");
      break;
  }
}

double TestFunction::eval(std::span<const double> x) const {
  switch (kind) {
    case Kind::Box:
      for (std::size_t k = 0; k < center.size(); ++k)
        if (std::abs(x[k] - center[k]) > half_width[k]) return 0.0;
      return amplitude;
    case Kind::Ball: {
      double r2 = 0.0;
      for (std::size_t k = 0; k < center.size(); ++k)
        r2 += (x[k] - center[k]) * (x[k] - center[k]);
      return r2 <= radius * radius ? amplitude : 0.0;
    }
    case Kind::GaussianBump: {
      double r2 = 0.0;
      for (std::size_t k = 0; k < center.size(); ++k)
        r2 += (x[k] - center[k]) * (x[k] - center[k]);
      const double cut = 8.0 * scale;
      if (r2 > cut * cut) return 0.0;
      return amplitude * std::exp(-r2 / (2.0 * scale * scale));
    }
  }
  return 0.0;
}

bool TestFunction::slice_bounds(int k, std::span<const double> outer,
                                double& lo, double& hi) const {
  const double c = center[static_cast<std::size_t>(k)];
  switch (kind) {
    case Kind::Box:
      lo = c - half_width[static_cast<std::size_t>(k)];
      hi = c + half_width[static_cast<std::size_t>(k)];
      return true;
    case Kind::Ball:
    case Kind::GaussianBump: {
      const double r = kind == Kind::Ball ? radius : 8.0 * scale;
      double used = 0.0;
      for (int j = 0; j < k; ++j)
        used += (outer[static_cast<std::size_t>(j)] -
                 center[static_cast<std::size_t>(j)]) *
                (outer[static_cast<std::size_t>(j)] -
                 center[static_cast<std::size_t>(j)]);
      const double rem = r * r - used;
      if (rem <= 0.0) return false;
      const double half = std::sqrt(rem);
      lo = c - half;
      hi = c + half;
      return true;
    }
  }
  return false;
}

TestFunction TestFunction::shifted_to(std::span<const double> new_center) const {
  TestFunction g = *this;
  g.center.assign(new_center.begin(), new_center.end());
  return g;
}

namespace {

// Standard adaptive Simpson with the 15-epsilon acceptance rule.
double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double fa, double b, double fb, double m, double fm,
                        double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptive_simpson(f, a, fa, m, fm, lm, flm, left, 0.5 * tol,
                          depth - 1) +
         adaptive_simpson(f, m, fm, b, fb, rm, frm, right, 0.5 * tol,
                          depth - 1);
}

double integrate_1d(const std::function<double(double)>& f, double a, double b,
                    double tol) {
  if (!(b > a)) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a), fb = f(b), fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, fa, b, fb, m, fm, whole, tol, 40);
}

double integrate_dim(const TestFunction& g,
                     const std::function<double(std::span<const double>)>& fn,
                     int k, std::vector<double>& point, double tol) {
  double lo = 0.0, hi = 0.0;
  if (!g.slice_bounds(k, {point.data(), static_cast<std::size_t>(k)}, lo, hi))
    return 0.0;
  const auto line = [&](double x) {
    point[static_cast<std::size_t>(k)] = x;
    if (k + 1 == g.dim()) return fn(point) * g.eval(point);
    return integrate_dim(g, fn, k + 1, point, tol / (hi - lo + 1.0));
  };
  return integrate_1d(line, lo, hi, tol);
}

}  // namespace

double integrate_against(
    const TestFunction& g,
    const std::function<double(std::span<const double>)>& density,
    double rel_tol) {
  g.validate();
  std::vector<double> point(static_cast<std::size_t>(g.dim()), 0.0);
  // Coarse pass to set the absolute tolerance scale, then the real pass.
  const double coarse =
      integrate_dim(g, density, 0, point, 1e-4);
  const double tol = rel_tol * std::max(std::abs(coarse), 1e-8);
  return integrate_dim(g, density, 0, point, tol);
}

double predicted_limit(const TestFunction& g, double gamma,
                       std::span<const double> x0) {
  if (gamma == 0.0)
    throw std::invalid_argument("predicted_limit: gamma = 0 has no attractor");
  if (static_cast<int>(x0.size()) != g.dim())
    throw std::invalid_argument("predicted_limit: x0 dimension mismatch");
  if (gamma < 0.0) {
    // Repulsion: Lebesgue attractor, plain integral of g.
    return integrate_against(
        g, [](std::span<const double>) { return 1.0; });
  }
  const int d = g.dim();
  const double norm =
      std::pow(gamma / std::numbers::pi, 0.5 * static_cast<double>(d));
  std::vector<double> c(x0.begin(), x0.end());
  return integrate_against(g, [norm, gamma, c](std::span<const double> x) {
    double r2 = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k)
      r2 += (x[k] - c[k]) * (x[k] - c[k]);
    return norm * std::exp(-gamma * r2);
  });
}

double local_mass(const ParticleCloud& cloud, const TestFunction& g) {
  if (g.dim() != cloud.dim)
    throw std::invalid_argument("local_mass: dimension mismatch");
  const std::size_t n = cloud.count();
  std::vector<double> x(static_cast<std::size_t>(cloud.dim));
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < cloud.dim; ++k)
      x[static_cast<std::size_t>(k)] = cloud.pos(i, k);
    sum += g.eval(x);
  }
  return sum;
}

nlohmann::json ConjectureReport::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < observed.size(); ++i)
    rows.push_back({{"x0", x0_first_coord[i]},
                    {"observed", observed[i]},
                    {"predicted", predicted[i]},
                    {"ratio", ratio[i]}});
  return {{"exploratory", true},
          {"note", "conjecture probe: descriptive only, no pass/fail"},
          {"conditioning",
           "predictions condition on the center of mass at the finite "
           "target time (error O(2^{-M/2})), not on its limit"},
          {"gamma", config.gamma},
          {"dim", config.dim},
          {"target_time", config.target_time},
          {"replicates", config.replicates},
          {"seed", config.seed},
          {"ratio_summary",
           {{"mean", ratio_mean},
            {"sd", ratio_sd},
            {"median", ratio_median},
            {"q10", ratio_q10},
            {"q90", ratio_q90}}},
          {"uniform_particle_variance",
           {{"empirical", uniform_particle_variance},
            {"candidate_2_plus_1_over_2gamma", candidate_ou},
            {"candidate_2_plus_1_over_4gamma2", candidate_conjecture}}},
          {"rows", rows}};
}

ConjectureReport conjecture_experiment(const ConjectureConfig& cfg,
                                       const TestFunction& g) {
  if (cfg.target_time < 1)
    throw std::invalid_argument("conjecture_experiment: target_time >= 1");
  if (cfg.replicates < 2)
    throw std::invalid_argument("conjecture_experiment: replicates >= 2");
  g.validate();

  ModelParams params;
  params.gamma = cfg.gamma;
  params.dim = cfg.dim;
  params.max_epoch = cfg.target_time - 1;  // read the pre-branch state at t=M
  params.sampler = Sampler::Exact;
  params.validate();

  ConjectureReport rep;
  rep.config = cfg;
  const std::size_t R = cfg.replicates;
  rep.x0_first_coord.resize(R);
  rep.observed.resize(R);
  rep.predicted.resize(R);
  rep.ratio.resize(R);
  std::vector<double> uniform_particle_coord(R);

  // 2^{-M} <Z_M, g> equals 2^{-(M-1)} <Z_{M-}, g>: children coincide with
  // their parents at the branch instant.
  const double norm = std::pow(0.5, cfg.target_time - 1);

  parallel_replicates(R, cfg.threads, [&](std::size_t r) {
    ParticleCloud final_cloud;
    simulate(params, cfg.seed, static_cast<std::uint32_t>(r),
             [&](std::uint32_t, double, SnapshotPhase phase,
                 const ParticleCloud& c) {
               if (phase == SnapshotPhase::PreBranch &&
                   c.epoch == params.max_epoch)
                 final_cloud = c;
             });
    const std::vector<double> x0 = com(final_cloud);
    const TestFunction gx = g.shifted_to(x0);
    const double obs = norm * local_mass(final_cloud, gx);
    const double pred = predicted_limit(gx, cfg.gamma, x0);
    rep.x0_first_coord[r] = x0[0];
    rep.observed[r] = obs;
    rep.predicted[r] = pred;
    rep.ratio[r] = pred != 0.0 ? obs / pred : 0.0;
    RngStream pick(cfg.seed, static_cast<std::uint32_t>(r), 0xffffu);
    const std::size_t idx = std::min(
        final_cloud.count() - 1,
        static_cast<std::size_t>(pick.uniform01() *
                                 static_cast<double>(final_cloud.count())));
    uniform_particle_coord[r] = final_cloud.pos(idx, 0);
  });

  std::vector<double> sorted = rep.ratio;
  std::sort(sorted.begin(), sorted.end());
  rep.ratio_mean = sample_mean(rep.ratio);
  rep.ratio_sd = std::sqrt(sample_variance(rep.ratio));
  rep.ratio_median = sorted[sorted.size() / 2];
  rep.ratio_q10 = sorted[static_cast<std::size_t>(0.10 * sorted.size())];
  rep.ratio_q90 = sorted[static_cast<std::size_t>(0.90 * sorted.size())];
  rep.uniform_particle_variance = sample_variance(uniform_particle_coord);
  rep.candidate_ou = 2.0 + 1.0 / (2.0 * cfg.gamma);
  rep.candidate_conjecture = 2.0 + 1.0 / (4.0 * cfg.gamma * cfg.gamma);
  return rep;
}

}  // namespace bbm
