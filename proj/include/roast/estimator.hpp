#pragma once

#include <Eigen/Dense>

#include "json.hpp"

#include <cstdint>
#include <vector>

namespace roast {

/// Masked gradient estimator under Gaussian per-sample gradients.
///
/// Each draw averages `batch` samples g ~ N(mu, sigma^2) per coordinate,
/// draws m ~ Bernoulli(p) and returns (m / p) * g_bar, or m * g_bar when
/// `scaling` is off.
struct EstimatorScenario {
  Eigen::VectorXd mu;
  double sigma = 0.0;
  std::size_t batch = 1;
  Eigen::VectorXd p;
  std::size_t draws = 100000;
  bool scaling = true;

  void validate() const;
};

struct Moments {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

// Scaled:   mean mu,     Var = (sigma^2/|B|)/p + (1-p) mu^2/p
// Unscaled: mean p * mu, Var = p sigma^2/|B| + p (1-p) mu^2
Moments theoretical_moments(const EstimatorScenario& s);

struct EmpiricalMoments {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;   // unbiased sample variance
  Eigen::VectorXd std_error;  // sqrt(variance / draws)
  Eigen::MatrixXd covariance;
};

EmpiricalMoments simulate_masked_estimator(const EstimatorScenario& s, std::uint64_t seed);

struct BoundCheck {
  bool holds = false;
  double lhs = 0.0;  // ||empirical covariance||_F
  double rhs = 0.0;  // slack * d * ||diag bound||_F
  double margin = 0.0;
};

inline constexpr double kBoundSlack = 1.05;

// Frobenius-norm bound using the smallest keep probability.
BoundCheck covariance_bound_check(const EstimatorScenario& s, const EmpiricalMoments& empirical);
BoundCheck covariance_bound_check(const EstimatorScenario& s, std::uint64_t seed);

struct GridPoint {
  double mu = 0.0;
  double sigma = 0.0;
  double p = 1.0;
};

// mu in {0, +-1, +-3} x sigma in {0, 1, 2} x p in {0.1, 0.5, 0.9}
std::vector<GridPoint> estimator_grid();
inline const std::vector<std::size_t> kGridBatchSizes{1, 4, 16};

struct GridRun {
  GridPoint point;
  std::size_t batch = 1;
  std::size_t draws = 0;
  double theory_mean = 0.0;
  double theory_variance = 0.0;
  double empirical_mean = 0.0;
  double empirical_variance = 0.0;
  double std_error = 0.0;
  bool unbiased = false;          // |mean - mu| <= 3 std_error
  double variance_error = 0.0;    // relative; 0 when both variances are 0
  bool variance_ok = false;       // variance_error <= 0.05
};

struct EstimatorSuiteOptions {
  std::uint64_t seed = 0;
  std::size_t mean_draws = 100000;
  std::size_t variance_draws = 1000000;
  std::size_t workers = 0;
  bool run_variance = true;
};

struct EstimatorSuite {
  EstimatorSuiteOptions options;
  std::vector<GridRun> mean_runs;      // grid point x batch size
  std::vector<GridRun> variance_runs;  // empty when run_variance is false
  std::vector<GridRun> control_runs;   // unscaled estimator, mean draws
  std::vector<BoundCheck> bounds;      // one per grid point, mixed p

  // grid points whose runs pass at every batch size
  std::size_t unbiased_points() const;
  std::size_t variance_checked() const;
  std::size_t variance_passed() const;
  // unscaled runs with mu != 0 whose mean is off by more than 3 std errors
  std::size_t control_biased() const;
  std::size_t control_expected_biased() const;

  nlohmann::ordered_json to_json() const;
};

inline constexpr double kVarianceTolerance = 0.05;

EstimatorSuite run_estimator_suite(const EstimatorSuiteOptions& options);

}  // namespace roast
