#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace bbm {

/// k replicates by p summary coordinates, row-major.
struct Ensemble {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;
  std::vector<std::string> labels;

  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  std::vector<double> column(std::size_t c) const;
  void validate() const;  // k >= 2, finite entries
};

struct TestReport {
  std::string name;
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
  bool pass = false;
  double level = 0.01;
  nlohmann::json extra;

  nlohmann::json to_json() const;
};

double normal_cdf(double x, double mu = 0.0, double sigma = 1.0);

/// Asymptotic Kolmogorov survival function Q(lambda) = 2 sum (-1)^{k-1}
/// exp(-2 k^2 lambda^2).
double kolmogorov_survival(double lambda);

/// One-sample KS against a fully specified cdf; asymptotic p-value with
/// Stephens' finite-n factor. Requires n >= 30.
TestReport ks_one_sample(std::span<const double> samples,
                         const std::function<double(double)>& cdf,
                         double level = 0.01, std::string name = "ks1");

TestReport ks_two_sample(std::span<const double> a, std::span<const double> b,
                         double level = 0.01, std::string name = "ks2");

/// Anderson-Darling against a fully specified normal (case 0); asymptotic
/// p-value via the Marsaglia-Marsaglia approximation.
TestReport anderson_darling_normal(std::span<const double> samples, double mu,
                                   double sigma, double level = 0.01,
                                   std::string name = "ad");

struct CovarianceResult {
  std::size_t p = 0;
  std::vector<double> cov;  // p x p, unbiased
  std::vector<double> se;   // p x p, moment-based asymptotic SEs
  double cov_at(std::size_t i, std::size_t j) const { return cov[i * p + j]; }
  double se_at(std::size_t i, std::size_t j) const { return se[i * p + j]; }
};

CovarianceResult empirical_cov(const Ensemble& e);

/// z-band checks used throughout the acceptance suite: an estimate passes
/// when it sits within z_max standard errors of the target.
struct MomentCheck {
  std::string name;
  double estimate = 0.0;
  double target = 0.0;
  double se = 0.0;
  double z = 0.0;
  bool pass = false;
  nlohmann::json to_json() const;
};

MomentCheck mean_check(std::span<const double> x, double target, double z_max,
                       std::string name = "mean");
MomentCheck variance_check(std::span<const double> x, double target,
                           double z_max, std::string name = "variance");
/// Pearson correlation with null SE 1/sqrt(n-3); target 0 unless given.
MomentCheck correlation_check(std::span<const double> x,
                              std::span<const double> y, double target,
                              double z_max, std::string name = "corr");

double sample_mean(std::span<const double> x);
double sample_variance(std::span<const double> x);  // unbiased

}  // namespace bbm
