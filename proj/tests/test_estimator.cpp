#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "roast/error.hpp"
#include "roast/estimator.hpp"

#include <cmath>

using namespace roast;

namespace {

EstimatorScenario scalar(double mu, double sigma, std::size_t batch, double p, std::size_t draws = 100000) {
  EstimatorScenario s;
  s.mu = Eigen::VectorXd::Constant(1, mu);
  s.sigma = sigma;
  s.batch = batch;
  s.p = Eigen::VectorXd::Constant(1, p);
  s.draws = draws;
  return s;
}

}  // namespace

TEST_CASE("theoretical_moments") {
  const auto full = theoretical_moments(scalar(2.0, 3.0, 9, 1.0));
  CHECK(full.mean[0] == 2.0);
  CHECK(full.variance[0] == doctest::Approx(1.0).epsilon(1e-15));

  // g_tilde is 0 or 2 with equal odds: mean 1, variance 1
  const auto coin = theoretical_moments(scalar(1.0, 0.0, 1, 0.5));
  CHECK(coin.mean[0] == 1.0);
  CHECK(coin.variance[0] == 1.0);

  const auto worked = theoretical_moments(scalar(3.0, 2.0, 4, 0.8));
  CHECK(worked.variance[0] == doctest::Approx(3.5).epsilon(1e-14));

  auto unscaled = scalar(3.0, 2.0, 4, 0.8);
  unscaled.scaling = false;
  const auto u = theoretical_moments(unscaled);
  CHECK(u.mean[0] == doctest::Approx(2.4).epsilon(1e-15));
  CHECK(u.variance[0] == doctest::Approx(0.8 * 1.0 + 0.8 * 0.2 * 9.0).epsilon(1e-14));

  CHECK_THROWS_AS(theoretical_moments(scalar(1.0, 1.0, 1, 0.0)), ValidationError);
  CHECK_THROWS_AS(theoretical_moments(scalar(1.0, 1.0, 0, 0.5)), ValidationError);
  CHECK_THROWS_AS(theoretical_moments(scalar(1.0, -1.0, 1, 0.5)), ValidationError);
}

TEST_CASE("simulate_masked_estimator") {
  const auto s = scalar(-1.0, 2.0, 4, 0.5);
  const auto a = simulate_masked_estimator(s, 5);
  const auto b = simulate_masked_estimator(s, 5);
  CHECK(a.mean == b.mean);
  CHECK(a.variance == b.variance);
  CHECK_FALSE(a.mean == simulate_masked_estimator(s, 6).mean);
  CHECK(std::abs(a.mean[0] - s.mu[0]) <= 3 * a.std_error[0]);
  const double theory = theoretical_moments(s).variance[0];
  CHECK(std::abs(a.variance[0] - theory) / theory < 0.05);

  // exact enumeration case: values are only 0 and 2
  const auto coin = simulate_masked_estimator(scalar(1.0, 0.0, 1, 0.5), 1);
  CHECK(std::abs(coin.mean[0] - 1.0) <= 3 * coin.std_error[0]);

  auto control = scalar(3.0, 1.0, 4, 0.5);
  control.scaling = false;
  const auto c = simulate_masked_estimator(control, 2);
  CHECK(std::abs(c.mean[0] - 3.0) > 3 * c.std_error[0]);
  CHECK(std::abs(c.mean[0] - 1.5) <= 3 * c.std_error[0]);
}

TEST_CASE("covariance_bound_check") {
  EstimatorScenario uniform;
  uniform.mu = Eigen::Vector3d(1.0, -2.0, 0.5);
  uniform.sigma = 1.0;
  uniform.batch = 4;
  uniform.p = Eigen::Vector3d::Constant(0.5);
  uniform.draws = 50000;
  const auto u = covariance_bound_check(uniform, 1);
  CHECK(u.holds);
  CHECK(u.margin > 0.0);

  EstimatorScenario mixed = uniform;
  mixed.mu = Eigen::Vector2d(1.0, 2.0);
  mixed.p = Eigen::Vector2d(0.2, 0.9);
  const auto m = covariance_bound_check(mixed, 2);
  CHECK(m.holds);
  CHECK(m.margin > 0.0);
  // oracle for the right-hand side
  const double d0 = 0.25 / 0.2 + 0.8 * 1.0 / 0.2, d1 = 0.25 / 0.2 + 0.8 * 4.0 / 0.2;
  CHECK(m.rhs == doctest::Approx(1.05 * 2.0 * std::sqrt(d0 * d0 + d1 * d1)).epsilon(1e-14));

  EstimatorScenario zero = uniform;
  zero.mu = Eigen::Vector2d::Zero();
  zero.sigma = 0.0;
  zero.p = Eigen::Vector2d::Ones();
  const auto z = covariance_bound_check(zero, 3);
  CHECK(z.lhs == 0.0);
  CHECK(z.rhs == 0.0);
  CHECK(z.holds);
}

TEST_CASE("estimator grid") {
  const auto grid = estimator_grid();
  CHECK(grid.size() == 45);
  CHECK(kGridBatchSizes.size() == 3);
}

TEST_CASE("variance error shrinks with more draws") {
  EstimatorSuiteOptions small;
  small.seed = 10;
  small.variance_draws = 10000;
  EstimatorSuiteOptions large = small;
  large.variance_draws = 1000000;
  const auto a = run_estimator_suite(small);
  const auto b = run_estimator_suite(large);
  std::size_t checked = 0, improved = 0;
  for (std::size_t i = 0; i < a.variance_runs.size(); ++i) {
    if (a.variance_runs[i].theory_variance == 0.0) continue;
    ++checked;
    improved += b.variance_runs[i].variance_error < a.variance_runs[i].variance_error ? 1 : 0;
  }
  CHECK(checked == 126);
  CHECK(static_cast<double>(improved) >= 0.9 * static_cast<double>(checked));
  CHECK(b.unbiased_points() >= 44);
  CHECK(b.variance_passed() == b.variance_checked());
  CHECK(b.control_biased() == b.control_expected_biased());
  for (const auto& bound : b.bounds) CHECK(bound.holds);

  const auto j = b.to_json();
  CHECK(j["summary"]["variance_checked"] == 126);
  CHECK(j["unbiasedness"].size() == 135);
}
