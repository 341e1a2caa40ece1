#include <doctest.h>

#include <cmath>
#include <vector>

#include "bbm/rng.hpp"
#include "bbm/sbm.hpp"
#include "bbm/stats.hpp"

using namespace bbm;

namespace {

SBMParams make_params(double alpha, double beta, long long n, int dim,
                      double horizon) {
  SBMParams p;
  p.alpha = alpha;
  p.beta = beta;
  p.level_n = n;
  p.dim = dim;
  p.horizon = horizon;
  return p;
}

}  // namespace

TEST_CASE("sbm parameter validation") {
  CHECK_THROWS_AS(make_params(1.0, 4.0, 2, 1, 1.0).validate(),
                  std::invalid_argument);  // n <= beta/(2 alpha)
  CHECK_THROWS_AS(make_params(0.0, 1.0, 10, 1, 1.0).validate(),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_params(1.0, -1.0, 10, 1, 1.0).validate(),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_params(1.0, 1.0, 10, 1, -2.0).validate(),
                  std::invalid_argument);
  CHECK_NOTHROW(make_params(1.0, 1.0, 10, 2, 5.0).validate());
}

TEST_CASE("offspring mean approaches critical as beta -> 0") {
  // mean offspring = 2p = 1 + beta/(2 alpha n)
  for (double beta : {1.0, 0.1, 0.001}) {
    const SBMParams p = make_params(1.0, beta, 100, 1, 1.0);
    const double mean_offspring = 2.0 * p.split_prob();
    CHECK(mean_offspring ==
          doctest::Approx(1.0 + beta / (2.0 * 100.0)).epsilon(1e-12));
  }
}

TEST_CASE("bd transition identities") {
  const SBMParams p = make_params(1.0, 1.0, 100, 1, 1.0);
  for (double u : {0.25, 1.0, 5.0}) {
    const BdTransition tr = BdTransition::over(p, u);
    CHECK(tr.extinct_prob > 0.0);
    CHECK(tr.extinct_prob < 1.0);
    CHECK(tr.geom_param > tr.extinct_prob);  // lambda > mu (supercritical)
    CHECK(tr.geom_param < 1.0);
    // single-lineage mean: (1-a)/(1-b) = e^{beta u}
    CHECK((1.0 - tr.extinct_prob) / (1.0 - tr.geom_param) ==
          doctest::Approx(std::exp(p.beta * u)).epsilon(1e-12));
  }
}

TEST_CASE("bd sampler matches the closed-form moments") {
  const SBMParams p = make_params(1.0, 1.0, 100, 1, 1.0);
  const double u = 1.0;
  const BdTransition tr = BdTransition::over(p, u);
  const long long k0 = 1000;
  const std::size_t reps = 20000;
  RngStream rng(41, 0, 0);
  std::vector<double> counts(reps);
  for (std::size_t r = 0; r < reps; ++r)
    counts[r] = static_cast<double>(bd_sample_count(k0, tr, rng));
  const double growth = std::exp(p.beta * u);
  CHECK(mean_check(counts, static_cast<double>(k0) * growth, 4.0).pass);
  // per-ancestor variance (lambda+mu)/(lambda-mu) E(E-1)
  const double var1 = (p.birth_rate() + p.death_rate()) / p.beta * growth *
                      (growth - 1.0);
  CHECK(variance_check(counts, static_cast<double>(k0) * var1, 4.0).pass);
}

TEST_CASE("total mass follows the Feller moments: exact law and event sim") {
  // BD route at the n and replicate count of the stated oracle
  {
    const SBMParams p = make_params(1.0, 1.0, 100, 1, 1.0);
    const BdTransition tr = BdTransition::over(p, 1.0);
    const std::size_t reps = 10000;
    RngStream rng(42, 0, 0);
    std::vector<double> mass(reps);
    for (std::size_t r = 0; r < reps; ++r)
      mass[r] = static_cast<double>(bd_sample_count(p.level_n, tr, rng)) /
                static_cast<double>(p.level_n);
    CHECK(mean_check(mass, std::exp(1.0), 4.0).pass);
    const auto [m_ode, v_ode] = feller_moments_ode(p.alpha, p.beta, 1.0);
    CHECK(m_ode == doctest::Approx(std::exp(1.0)).epsilon(1e-8));
    CHECK(variance_check(mass, v_ode, 4.0).pass);
  }
  // event-driven route at smaller n
  {
    const SBMParams p = make_params(1.0, 1.0, 10, 1, 2.0);
    const std::size_t reps = 5000;
    std::vector<double> mass(reps);
    for (std::size_t r = 0; r < reps; ++r) {
      SBMCloud c = SBMCloud::delta_at_origin(p);
      RngStream rng(43, static_cast<std::uint32_t>(r), 0);
      sbm_advance(c, p, 1.0, rng);
      mass[r] = c.mass(p);
    }
    CHECK(mean_check(mass, std::exp(1.0), 4.0).pass);
    const auto [m_ode, v_ode] = feller_moments_ode(p.alpha, p.beta, 1.0);
    (void)m_ode;
    CHECK(variance_check(mass, v_ode, 4.0).pass);
  }
}

TEST_CASE("mass quadratic-variation flux is 2 alpha * mass") {
  // over a short interval from k0 particles the jump-moment rate gives
  // Var(d mass) ~ 2 alpha * mass * dt
  const SBMParams p = make_params(1.0, 1.0, 100, 1, 1.0);
  const double dt = 0.01;
  const long long k0 = 1000;  // mass 10
  const BdTransition tr = BdTransition::over(p, dt);
  const std::size_t reps = 40000;
  RngStream rng(51, 0, 0);
  std::vector<double> dmass(reps);
  for (std::size_t r = 0; r < reps; ++r)
    dmass[r] = static_cast<double>(bd_sample_count(k0, tr, rng) - k0) /
               static_cast<double>(p.level_n);
  const double mass0 = static_cast<double>(k0) / p.level_n;
  const double flux = 2.0 * p.alpha * mass0 * dt;
  // the O(dt^2) drift-squared correction is far below the band
  CHECK(variance_check(dmass, flux, 4.0).pass);
}

TEST_CASE("feller ODE oracle matches the closed form") {
  for (double alpha : {0.5, 1.0, 2.0})
    for (double beta : {0.25, 1.0}) {
      const auto [m, v] = feller_moments_ode(alpha, beta, 1.7);
      const double growth = std::exp(beta * 1.7);
      CHECK(m == doctest::Approx(growth).epsilon(1e-8));
      CHECK(v == doctest::Approx(2.0 * alpha / beta * growth *
                                 (growth - 1.0))
                     .epsilon(1e-7));
    }
}

TEST_CASE("extinction: bd route, event route and closed form agree") {
  const SBMParams p = make_params(1.0, 1.0, 10, 1, 4.0);
  const double exact = scheme_extinction_probability(p, 4.0);

  const ExtinctionEstimate bd =
      extinction_probability(p, 4.0, 20000, 44, 1);
  CHECK(std::abs(bd.fraction - exact) <= 4.0 * bd.se);

  std::size_t died = 0;
  const std::size_t reps = 2000;
  for (std::size_t r = 0; r < reps; ++r) {
    SBMCloud c = SBMCloud::delta_at_origin(p);
    RngStream rng(45, static_cast<std::uint32_t>(r), 0);
    sbm_advance(c, p, 4.0, rng);
    if (c.count() == 0) ++died;
  }
  const double ev_frac = static_cast<double>(died) / reps;
  const double ev_se = std::sqrt(exact * (1.0 - exact) / reps);
  CHECK(std::abs(ev_frac - exact) <= 4.0 * ev_se);
}

TEST_CASE("scheme extinction probability tends to e^{-beta/alpha}") {
  {
    const SBMParams p = make_params(1.0, 1.0, 200, 1, 20.0);
    CHECK(std::abs(scheme_extinction_probability(p, 20.0) - std::exp(-1.0)) <
          2e-4);
  }
  {
    const SBMParams p = make_params(1.0, 4.0, 200, 1, 20.0);
    CHECK(std::abs(scheme_extinction_probability(p, 20.0) - std::exp(-4.0)) <
          1e-4);
  }
  {
    // near the always-split boundary: extinction almost impossible
    const SBMParams p = make_params(1.0, 1.99, 1, 1, 10.0);
    CHECK(scheme_extinction_probability(p, 10.0) < 0.02);
  }
}

TEST_CASE("martingale series and checks") {
  SBMParams p = make_params(1.0, 1.0, 10, 1, 2.0);
  p.record_mesh = {1.0, 2.0};
  const std::size_t reps = 1200;
  std::vector<MartingaleSeries> ensemble(reps);
  for (std::size_t r = 0; r < reps; ++r)
    ensemble[r] = run_sbm_series(p, 46, static_cast<std::uint32_t>(r));

  // s = 0: increments identically zero
  for (const auto& res : martingale_check(ensemble, 1.0, 0.0, 4.0)) {
    CHECK(res.pass);
    CHECK(res.mean_increment.estimate == 0.0);
  }
  // genuine martingale property at (1, 1)
  for (const auto& res : martingale_check(ensemble, 1.0, 1.0, 4.0))
    CHECK(res.pass);

  // deliberately broken discount: N' = e^{(beta-beta') t} N drifts
  std::vector<MartingaleSeries> broken = ensemble;
  for (auto& e : broken)
    for (std::size_t j = 0; j < e.grid.size(); ++j)
      e.discounted_mass[j] *= std::exp(0.5 * e.grid[j]);
  bool any_fail = false;
  for (const auto& res : martingale_check(broken, 1.0, 1.0, 4.0))
    if (res.series == "N") any_fail = any_fail || !res.pass;
  CHECK(any_fail);

  CHECK_THROWS_AS(
      (void)martingale_check(ensemble, 0.5, 1.0, 4.0),  // not on the mesh
      std::invalid_argument);
  std::vector<MartingaleSeries> few(ensemble.begin(), ensemble.begin() + 10);
  CHECK_THROWS_AS((void)martingale_check(few, 1.0, 1.0, 4.0),
                  std::invalid_argument);
}

TEST_CASE("second moment profile shape") {
  SBMParams p = make_params(1.0, 1.0, 20, 1, 3.0);
  p.record_mesh = {1.0, 2.0, 3.0};
  const std::size_t reps = 800;
  std::vector<MartingaleSeries> ensemble(reps);
  for (std::size_t r = 0; r < reps; ++r)
    ensemble[r] = run_sbm_series(p, 47, static_cast<std::uint32_t>(r));
  const SecondMomentProfile prof = second_moment_profile(ensemble, p);
  // reference curve against an independent numeric integral
  for (std::size_t j = 0; j < prof.grid.size(); ++j) {
    const double t = prof.grid[j];
    double integral = 0.0;
    const int steps = 20000;
    for (int i = 0; i < steps; ++i) {
      const double s0 = t * i / steps, s1 = t * (i + 1) / steps;
      const double mid = 0.5 * (s0 + s1);
      integral += (s1 - s0) * mid * std::exp(-p.beta * mid);
    }
    CHECK(prof.reference[j] ==
          doctest::Approx(2.0 * p.alpha * integral).epsilon(1e-6));
    // empirical curve tracks the scheme-corrected reference
    CHECK(std::abs(prof.empirical[j] - prof.reference_scheme[j]) <=
          5.0 * prof.se[j] + 1e-9);
  }
  CHECK(prof.plateau == doctest::Approx(2.0));
  CHECK(prof.flagged_alternative == doctest::Approx(2.0));
}

TEST_CASE("population cap freezes and flags the replicate") {
  SBMParams p = make_params(1.0, 1.0, 50, 1, 4.0);
  p.particle_cap = 60;
  p.record_mesh = {1.0, 2.0, 3.0, 4.0};
  MartingaleSeries s = run_sbm_series(p, 48, 0);
  CHECK(s.capped);

  std::vector<MartingaleSeries> all(1200, s);
  CHECK_THROWS_AS((void)martingale_check(all, 1.0, 1.0, 4.0),
                  std::invalid_argument);  // everything excluded
}

TEST_CASE("com stabilization requires survivors and orders windows") {
  SBMParams p = make_params(0.5, 0.5, 10, 1, 8.0);
  const int per_unit = 64;
  for (int j = 1; j <= 8 * per_unit; ++j)
    p.record_mesh.push_back(static_cast<double>(j) / per_unit);
  const std::size_t reps = 400;
  std::vector<MartingaleSeries> ensemble(reps);
  for (std::size_t r = 0; r < reps; ++r)
    ensemble[r] = run_sbm_series(p, 49, static_cast<std::uint32_t>(r));
  const ComStabilizationReport rep =
      com_stabilization(ensemble, p, 1.0, 3.0, 6.0, 8.0);
  CHECK(rep.survivors > 100);
  CHECK(rep.median_osc_late < rep.median_osc_early);
  CHECK(rep.median_clock_total > 0.0);

  // extinct-only ensemble: error
  std::vector<MartingaleSeries> dead;
  for (const auto& e : ensemble)
    if (!e.survived) dead.push_back(e);
  if (!dead.empty())
    CHECK_THROWS_AS(
        (void)com_stabilization(dead, p, 1.0, 3.0, 6.0, 8.0),
        std::invalid_argument);
}
