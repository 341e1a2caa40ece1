#include "bbm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bbm/kernels.hpp"

namespace bbm {

std::vector<double> Ensemble::column(std::size_t c) const {
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) out[r] = at(r, c);
  return out;
}

void Ensemble::validate() const {
  if (rows < 2) throw std::invalid_argument("Ensemble: k >= 2 violated");
  if (data.size() != rows * cols)
    throw std::invalid_argument("Ensemble: shape/data mismatch");
  for (double v : data)
    if (!std::isfinite(v))
      throw std::invalid_argument("Ensemble: finite entries violated");
}

nlohmann::json TestReport::to_json() const {
  nlohmann::json j{{"test", name},         {"n_samples", n},
                   {"statistic", statistic}, {"p_value", p_value},
                   {"pass", pass},          {"level", level}};
  if (!extra.is_null()) j["params"] = extra;
  return j;
}

double normal_cdf(double x, double mu, double sigma) {
  return 0.5 * std::erfc(-(x - mu) / (sigma * std::sqrt(2.0)));
}

double kolmogorov_survival(double lambda) {
  if (lambda < 0.18) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    if (term < 1e-14) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {

double stephens_lambda(double d, double n_eff) {
  const double rn = std::sqrt(n_eff);
  return (rn + 0.12 + 0.11 / rn) * d;
}

double sorted_ks_statistic(std::vector<double>& s,
                           const std::function<double(double)>& cdf) {
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double f = cdf(s[i]);
    d = std::max(d, std::max(f - static_cast<double>(i) / n,
                             static_cast<double>(i + 1) / n - f));
  }
  return d;
}

}  // namespace

TestReport ks_one_sample(std::span<const double> samples,
                         const std::function<double(double)>& cdf,
                         double level, std::string name) {
  if (samples.size() < 30)
    throw std::invalid_argument("ks_one_sample: needs k >= 30 samples");
  std::vector<double> s(samples.begin(), samples.end());
  const double d = sorted_ks_statistic(s, cdf);
  TestReport r;
  r.name = std::move(name);
  r.statistic = d;
  r.n = samples.size();
  r.p_value =
      kolmogorov_survival(stephens_lambda(d, static_cast<double>(r.n)));
  r.level = level;
  r.pass = r.p_value > level;
  return r;
}

TestReport ks_two_sample(std::span<const double> a, std::span<const double> b,
                         double level, std::string name) {
  if (a.size() < 30 || b.size() < 30)
    throw std::invalid_argument("ks_two_sample: needs k >= 30 samples");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t ia = 0, ib = 0;
  double d = 0.0;
  while (ia < sa.size() && ib < sb.size()) {
    const double xa = sa[ia], xb = sb[ib];
    if (xa <= xb) ++ia;
    if (xb <= xa) ++ib;
    d = std::max(d, std::abs(static_cast<double>(ia) / na -
                             static_cast<double>(ib) / nb));
  }
  TestReport r;
  r.name = std::move(name);
  r.statistic = d;
  r.n = sa.size() + sb.size();
  const double n_eff = na * nb / (na + nb);
  r.p_value = kolmogorov_survival(stephens_lambda(d, n_eff));
  r.level = level;
  r.pass = r.p_value > level;
  return r;
}

namespace {

// Marsaglia & Marsaglia, "Evaluating the Anderson-Darling Distribution":
// asymptotic cdf of A^2 (case 0, fully specified null).
double anderson_darling_cdf(double z) {
  if (z <= 0.0) return 0.0;
  if (z < 2.0)
    return std::exp(-1.2337141 / z) / std::sqrt(z) *
           (2.00012 +
            (0.247105 -
             (0.0649821 - (0.0347962 - (0.011672 - 0.00168691 * z) * z) * z) *
                 z) *
                z);
  return std::exp(
      -std::exp(1.0776 - (2.30695 - (0.43424 - (0.082433 -
                                                (0.008056 - 0.0003146 * z) *
                                                    z) *
                                                   z) *
                                        z) *
                             z));
}

}  // namespace

TestReport anderson_darling_normal(std::span<const double> samples, double mu,
                                   double sigma, double level,
                                   std::string name) {
  if (samples.size() < 30)
    throw std::invalid_argument("anderson_darling: needs k >= 30 samples");
  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  const std::size_t n = s.size();
  const double dn = static_cast<double>(n);
  double a2 = -dn;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = std::clamp(normal_cdf(s[i], mu, sigma), 1e-300, 1.0);
    const double v =
        std::clamp(1.0 - normal_cdf(s[n - 1 - i], mu, sigma), 1e-300, 1.0);
    a2 -= (2.0 * static_cast<double>(i) + 1.0) / dn *
          (std::log(u) + std::log(v));
  }
  TestReport r;
  r.name = std::move(name);
  r.statistic = a2;
  r.n = n;
  r.p_value = std::clamp(1.0 - anderson_darling_cdf(a2), 0.0, 1.0);
  r.level = level;
  r.pass = r.p_value > level;
  return r;
}

CovarianceResult empirical_cov(const Ensemble& e) {
  e.validate();
  const std::size_t k = e.rows, p = e.cols;
  CovarianceResult res;
  res.p = p;
  res.cov.assign(p * p, 0.0);
  res.se.assign(p * p, 0.0);
  std::vector<double> mean(p, 0.0);
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t c = 0; c < p; ++c) mean[c] += e.at(r, c);
  for (std::size_t c = 0; c < p; ++c) mean[c] /= static_cast<double>(k);
  // unbiased covariance and the moment-based SE of each entry:
  // Var(c_ij) ~ (E[(xi-mi)^2 (xj-mj)^2] - c_ij^2) / k
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i; j < p; ++j) {
      double s = 0.0, s4 = 0.0;
      for (std::size_t r = 0; r < k; ++r) {
        const double di = e.at(r, i) - mean[i];
        const double dj = e.at(r, j) - mean[j];
        s += di * dj;
        s4 += di * di * dj * dj;
      }
      const double cij = s / static_cast<double>(k - 1);
      const double m4 = s4 / static_cast<double>(k);
      const double var = std::max(0.0, m4 - cij * cij) / static_cast<double>(k);
      res.cov[i * p + j] = res.cov[j * p + i] = cij;
      res.se[i * p + j] = res.se[j * p + i] = std::sqrt(var);
    }
  }
  return res;
}

nlohmann::json MomentCheck::to_json() const {
  return {{"check", name}, {"estimate", estimate}, {"target", target},
          {"se", se},      {"z", z},              {"pass", pass}};
}

double sample_mean(std::span<const double> x) {
  return kernels().mean(x.data(), x.size());
}

double sample_variance(std::span<const double> x) {
  const double m = sample_mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

MomentCheck mean_check(std::span<const double> x, double target, double z_max,
                       std::string name) {
  MomentCheck c;
  c.name = std::move(name);
  c.estimate = sample_mean(x);
  c.target = target;
  c.se = std::sqrt(sample_variance(x) / static_cast<double>(x.size()));
  c.z = c.se > 0.0 ? std::abs(c.estimate - target) / c.se
                   : (c.estimate == target ? 0.0 : HUGE_VAL);
  c.pass = c.z <= z_max;
  return c;
}

MomentCheck variance_check(std::span<const double> x, double target,
                           double z_max, std::string name) {
  const double m = sample_mean(x);
  const double k = static_cast<double>(x.size());
  double s2 = 0.0, s4 = 0.0;
  for (double v : x) {
    const double d2 = (v - m) * (v - m);
    s2 += d2;
    s4 += d2 * d2;
  }
  const double var = s2 / (k - 1.0);
  const double m4 = s4 / k;
  MomentCheck c;
  c.name = std::move(name);
  c.estimate = var;
  c.target = target;
  c.se = std::sqrt(std::max(0.0, m4 - var * var) / k);
  c.z = c.se > 0.0 ? std::abs(var - target) / c.se
                   : (var == target ? 0.0 : HUGE_VAL);
  c.pass = c.z <= z_max;
  return c;
}

MomentCheck correlation_check(std::span<const double> x,
                              std::span<const double> y, double target,
                              double z_max, std::string name) {
  if (x.size() != y.size() || x.size() < 8)
    throw std::invalid_argument("correlation_check: size mismatch or too few");
  const double mx = sample_mean(x), my = sample_mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  MomentCheck c;
  c.name = std::move(name);
  c.estimate = sxy / std::sqrt(sxx * syy);
  c.target = target;
  // Delta-method SE; reduces to the null SE 1/sqrt(n-3) at r = 0.
  c.se = (1.0 - c.estimate * c.estimate) /
         std::sqrt(static_cast<double>(x.size()) - 3.0);
  c.se = std::max(c.se, 1e-12);
  c.z = std::abs(c.estimate - target) / c.se;
  c.pass = c.z <= z_max;
  return c;
}

}  // namespace bbm
