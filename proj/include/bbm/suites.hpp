#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace bbm {

struct CriterionResult {
  std::string id;
  std::string name;
  bool pass = false;
  bool hard = true;  // exploratory entries never fail the run
  nlohmann::json data;
};

struct SuiteConfig {
  std::uint64_t seed = 1;
  int threads = 0;  // 0: resolve via BBM_THREADS / hardware
};

/// Criteria 1-7: interacting-BBM validation at the pinned sizes.
std::vector<CriterionResult> run_bbm_suite(const SuiteConfig& cfg);

/// Criteria 8-11: super-Brownian particle approximation validation.
std::vector<CriterionResult> run_sbm_suite(const SuiteConfig& cfg);

/// Criterion 12: exploratory conjecture probe; hard assertions are the
/// deterministic quadrature self-checks only.
CriterionResult run_conjecture_criterion(const SuiteConfig& cfg);

/// Criterion 13: level-0.01 calibration of every statistical test.
CriterionResult run_calibration_criterion(const SuiteConfig& cfg);

/// All thirteen, in order.
std::vector<CriterionResult> run_all_criteria(const SuiteConfig& cfg);

}  // namespace bbm
