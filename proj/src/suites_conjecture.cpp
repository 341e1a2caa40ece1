#include <cmath>

#include "bbm/conjecture.hpp"
#include "bbm/suites.hpp"

namespace bbm {

CriterionResult run_conjecture_criterion(const SuiteConfig& cfg) {
  // hard assertions: deterministic quadrature self-checks
  TestFunction box;
  box.kind = TestFunction::Kind::Box;
  box.center = {0.0};
  box.half_width = {1.0};

  const double erf1 = std::erf(1.0);
  const double quad_attract = predicted_limit(box, 1.0, std::vector<double>{0.0});
  const bool erf_ok = std::abs(quad_attract - erf1) <= 1e-6 * erf1;

  const double quad_repulse =
      predicted_limit(box, -1.0, std::vector<double>{0.0});
  const bool lebesgue_ok = std::abs(quad_repulse - 2.0) <= 1e-6 * 2.0;

  TestFunction far = box;
  far.center = {50.0};
  const double quad_far = predicted_limit(far, 1.0, std::vector<double>{0.0});
  const bool far_ok = quad_far <= 1e-9;

  // exploratory run: never adjudicated
  ConjectureConfig cc;
  cc.gamma = 1.0;
  cc.dim = 1;
  cc.target_time = 14;
  cc.replicates = 100;
  cc.seed = cfg.seed + 1212;
  cc.threads = cfg.threads;
  const ConjectureReport rep = conjecture_experiment(cc, box);

  CriterionResult res;
  res.id = "C12";
  res.name = "conjecture lab (exploratory) + quadrature self-checks";
  res.pass = erf_ok && lebesgue_ok && far_ok;
  res.data = {{"quadrature_selfchecks",
               {{"erf1_value", quad_attract},
                {"erf1_target", erf1},
                {"erf1_ok", erf_ok},
                {"lebesgue_unit_box", quad_repulse},
                {"lebesgue_ok", lebesgue_ok},
                {"far_support", quad_far},
                {"far_ok", far_ok}}},
              {"report", rep.to_json()}};
  return res;
}

std::vector<CriterionResult> run_all_criteria(const SuiteConfig& cfg) {
  std::vector<CriterionResult> all = run_bbm_suite(cfg);
  std::vector<CriterionResult> sbm = run_sbm_suite(cfg);
  all.insert(all.end(), sbm.begin(), sbm.end());
  all.push_back(run_conjecture_criterion(cfg));
  all.push_back(run_calibration_criterion(cfg));
  return all;
}

}  // namespace bbm
