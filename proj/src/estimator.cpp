#include "roast/estimator.hpp"

#include "roast/error.hpp"
#include "roast/parallel.hpp"
#include "roast/random.hpp"

#include <cmath>

namespace roast {

void EstimatorScenario::validate() const {
  if (mu.size() == 0 || mu.size() != p.size()) throw ValidationError("estimator: mu and p must be non-empty and equal length");
  if (!(sigma >= 0.0)) throw ValidationError("estimator: sigma must be >= 0");
  if (batch == 0) throw ValidationError("estimator: batch size must be >= 1");
  if ((p.array() <= 0.0).any() || (p.array() > 1.0).any()) throw ValidationError("estimator: p must lie in (0, 1]");
  if (draws < 2) throw ValidationError("estimator: need at least 2 draws");
}

Moments theoretical_moments(const EstimatorScenario& s) {
  s.validate();
  const double noise = s.sigma * s.sigma / static_cast<double>(s.batch);
  const auto p = s.p.array();
  const auto mu2 = s.mu.array().square();
  Moments m;
  if (s.scaling) {
    m.mean = s.mu;
    m.variance = (noise / p + (1.0 - p) * mu2 / p).matrix();
  } else {
    m.mean = (p * s.mu.array()).matrix();
    m.variance = (p * noise + p * (1.0 - p) * mu2).matrix();
  }
  return m;
}

EmpiricalMoments simulate_masked_estimator(const EstimatorScenario& s, std::uint64_t seed) {
  s.validate();
  RandomSource rng(seed);
  const Eigen::Index d = s.mu.size();
  const double inv_batch = 1.0 / static_cast<double>(s.batch);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd m2 = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd x(d), delta(d);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t k = 1; k <= s.draws; ++k) {
    for (Eigen::Index i = 0; i < d; ++i) {
      double g = s.mu[i];
      if (s.sigma > 0.0) {
        double noise = 0.0;
        for (std::size_t b = 0; b < s.batch; ++b) noise += normal(rng);
        g += s.sigma * noise * inv_batch;
      }
      const bool keep = rng.bernoulli(s.p[i]);
      x[i] = keep ? (s.scaling ? g / s.p[i] : g) : 0.0;
    }
    // Welford update
    delta = x - mean;
    mean += delta / static_cast<double>(k);
    m2.noalias() += delta * (x - mean).transpose();
  }
  EmpiricalMoments out;
  out.mean = mean;
  out.covariance = m2 / static_cast<double>(s.draws - 1);
  out.variance = out.covariance.diagonal();
  out.std_error = (out.variance / static_cast<double>(s.draws)).cwiseSqrt();
  return out;
}

BoundCheck covariance_bound_check(const EstimatorScenario& s, const EmpiricalMoments& empirical) {
  s.validate();
  const double p_hat = s.p.minCoeff();
  const double noise = s.sigma * s.sigma / static_cast<double>(s.batch);
  const Eigen::VectorXd diag = (noise / p_hat + (1.0 - p_hat) * s.mu.array().square() / p_hat).matrix();
  BoundCheck c;
  c.lhs = empirical.covariance.norm();
  c.rhs = kBoundSlack * static_cast<double>(s.mu.size()) * diag.norm();
  c.margin = c.rhs - c.lhs;
  c.holds = c.lhs <= c.rhs;
  return c;
}

BoundCheck covariance_bound_check(const EstimatorScenario& s, std::uint64_t seed) {
  return covariance_bound_check(s, simulate_masked_estimator(s, seed));
}

std::vector<GridPoint> estimator_grid() {
  std::vector<GridPoint> grid;
  for (double mu : {0.0, 1.0, -1.0, 3.0, -3.0}) {
    for (double sigma : {0.0, 1.0, 2.0}) {
      for (double p : {0.1, 0.5, 0.9}) grid.push_back({mu, sigma, p});
    }
  }
  return grid;
}

namespace {

GridRun run_point(const GridPoint& pt, std::size_t batch, std::size_t draws, bool scaling, std::uint64_t seed) {
  EstimatorScenario s;
  s.mu = Eigen::VectorXd::Constant(1, pt.mu);
  s.sigma = pt.sigma;
  s.batch = batch;
  s.p = Eigen::VectorXd::Constant(1, pt.p);
  s.draws = draws;
  s.scaling = scaling;
  const Moments theory = theoretical_moments(s);
  const EmpiricalMoments emp = simulate_masked_estimator(s, seed);
  GridRun r;
  r.point = pt;
  r.batch = batch;
  r.draws = draws;
  r.theory_mean = theory.mean[0];
  r.theory_variance = theory.variance[0];
  r.empirical_mean = emp.mean[0];
  r.empirical_variance = emp.variance[0];
  r.std_error = emp.std_error[0];
  r.unbiased = std::abs(r.empirical_mean - pt.mu) <= 3.0 * r.std_error;
  if (r.theory_variance > 0.0) {
    r.variance_error = std::abs(r.empirical_variance - r.theory_variance) / r.theory_variance;
  } else {
    r.variance_error = r.empirical_variance == 0.0 ? 0.0 : INFINITY;
  }
  r.variance_ok = r.variance_error <= kVarianceTolerance;
  return r;
}

nlohmann::ordered_json run_json(const GridRun& r) {
  nlohmann::ordered_json j;
  j["mu"] = r.point.mu;
  j["sigma"] = r.point.sigma;
  j["p"] = r.point.p;
  j["batch"] = r.batch;
  j["draws"] = r.draws;
  j["theory_mean"] = r.theory_mean;
  j["empirical_mean"] = r.empirical_mean;
  j["std_error"] = r.std_error;
  j["unbiased"] = r.unbiased;
  j["theory_variance"] = r.theory_variance;
  j["empirical_variance"] = r.empirical_variance;
  j["variance_error"] = std::isfinite(r.variance_error) ? nlohmann::ordered_json(r.variance_error) : nullptr;
  j["variance_ok"] = r.variance_ok;
  return j;
}

}  // namespace

std::size_t EstimatorSuite::unbiased_points() const {
  const std::size_t per = kGridBatchSizes.size();
  std::size_t ok = 0;
  for (std::size_t i = 0; i + per <= mean_runs.size(); i += per) {
    bool all = true;
    for (std::size_t k = 0; k < per; ++k) all = all && mean_runs[i + k].unbiased;
    ok += all ? 1 : 0;
  }
  return ok;
}

std::size_t EstimatorSuite::variance_checked() const {
  std::size_t n = 0;
  for (const auto& r : variance_runs) n += r.theory_variance > 0.0 ? 1 : 0;
  return n;
}

std::size_t EstimatorSuite::variance_passed() const {
  std::size_t n = 0;
  for (const auto& r : variance_runs) n += (r.theory_variance > 0.0 && r.variance_ok) ? 1 : 0;
  return n;
}

std::size_t EstimatorSuite::control_expected_biased() const {
  std::size_t n = 0;
  for (const auto& r : control_runs) n += r.point.mu != 0.0 ? 1 : 0;
  return n;
}

std::size_t EstimatorSuite::control_biased() const {
  std::size_t n = 0;
  for (const auto& r : control_runs) n += (r.point.mu != 0.0 && !r.unbiased) ? 1 : 0;
  return n;
}

nlohmann::ordered_json EstimatorSuite::to_json() const {
  nlohmann::ordered_json j;
  j["seed"] = options.seed;
  j["mean_draws"] = options.mean_draws;
  j["variance_draws"] = options.variance_draws;
  j["grid_points"] = estimator_grid().size();
  j["batch_sizes"] = kGridBatchSizes;
  nlohmann::ordered_json summary;
  summary["unbiased_points"] = unbiased_points();
  summary["variance_checked"] = variance_checked();
  summary["variance_passed"] = variance_passed();
  summary["variance_tolerance"] = kVarianceTolerance;
  summary["control_biased"] = control_biased();
  summary["control_expected_biased"] = control_expected_biased();
  std::size_t bound_ok = 0;
  for (const auto& b : bounds) bound_ok += b.holds ? 1 : 0;
  summary["bounds_hold"] = bound_ok;
  summary["bounds_checked"] = bounds.size();
  j["summary"] = summary;
  auto runs = [](const std::vector<GridRun>& v) {
    nlohmann::ordered_json a = nlohmann::ordered_json::array();
    for (const auto& r : v) a.push_back(run_json(r));
    return a;
  };
  j["unbiasedness"] = runs(mean_runs);
  j["variance"] = runs(variance_runs);
  j["unscaled_control"] = runs(control_runs);
  nlohmann::ordered_json b = nlohmann::ordered_json::array();
  for (const auto& c : bounds) b.push_back({{"holds", c.holds}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"margin", c.margin}});
  j["covariance_bounds"] = b;
  return j;
}

EstimatorSuite run_estimator_suite(const EstimatorSuiteOptions& options) {
  EstimatorSuite suite;
  suite.options = options;
  const auto grid = estimator_grid();
  const std::size_t per = kGridBatchSizes.size();
  const std::size_t runs = grid.size() * per;
  const RandomSource root(options.seed);

  suite.mean_runs.resize(runs);
  suite.control_runs.resize(runs);
  if (options.run_variance) suite.variance_runs.resize(runs);
  suite.bounds.resize(grid.size());

  // job layout: [mean | control | variance | bounds]
  const std::size_t jobs = 3 * runs + grid.size();
  parallel_for(jobs, options.workers, [&](std::size_t job) {
    const std::uint64_t seed = root.split(job).seed();
    if (job < 2 * runs) {
      const std::size_t i = job % runs;
      const bool control = job >= runs;
      auto r = run_point(grid[i / per], kGridBatchSizes[i % per], options.mean_draws, !control, seed);
      (control ? suite.control_runs : suite.mean_runs)[i] = r;
    } else if (job < 3 * runs) {
      if (!options.run_variance) return;
      const std::size_t i = job - 2 * runs;
      suite.variance_runs[i] = run_point(grid[i / per], kGridBatchSizes[i % per], options.variance_draws, true, seed);
    } else {
      const std::size_t i = job - 3 * runs;
      const auto& pt = grid[i];
      EstimatorScenario s;
      s.mu = Eigen::Vector2d(pt.mu, 0.5 * pt.mu + 1.0);
      s.sigma = pt.sigma;
      s.batch = 4;
      s.p = Eigen::Vector2d(pt.p, std::min(1.0, pt.p + 0.3));
      s.draws = options.mean_draws;
      suite.bounds[i] = covariance_bound_check(s, seed);
    }
  });
  return suite;
}

}  // namespace roast
