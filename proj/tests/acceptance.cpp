// One line per acceptance criterion; exit status is the number of failures.
#include "roast/error.hpp"
#include "roast/estimator.hpp"
#include "roast/experiment.hpp"
#include "roast/gradcheck.hpp"
#include "roast/masking.hpp"
#include "roast/metrics.hpp"
#include "roast/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

using namespace roast;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets.
constexpr double kDeltaTolerance = 0.25;
constexpr double kRowADelta = 18.39;
constexpr double kRowBDelta = 7.63;
constexpr std::size_t kUnbiasedRequired = 44;
constexpr double kUnbiasedBudget = 60.0;
constexpr double kVarianceBudget = 120.0;
constexpr double kReductionTolerance = 1e-12;
constexpr std::size_t kReductionSteps = 100;
constexpr double kLargeBeta = 1e4;
constexpr double kAlphaMargin = 1e-3;
constexpr double kGradTolerance = 1e-4;
constexpr std::size_t kGradInstances = 50;
constexpr double kGradBudget = 60.0;
constexpr std::size_t kMetricsRequired = 3;
constexpr double kBenchmarkBudget = 300.0;
constexpr std::size_t kMinEpochs = 8;

int failures = 0;

void report(int id, bool pass, const std::string& what, const std::string& detail) {
  std::printf("[%s] %2d %-34s %s\n", pass ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

template <typename F>
double timed(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// fractional ranks, 1-based
std::vector<double> ranks_of(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double x : v) {
      less += x < v[i] ? 1 : 0;
      equal += x == v[i] ? 1 : 0;
    }
    r[i] = less + (equal + 1) / 2;
  }
  return r;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ra = ranks_of(a), rb = ranks_of(b);
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) ma += ra[i] / n, mb += rb[i] / n;
  double cov = 0, va = 0, vb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  return va == 0 || vb == 0 ? 0.0 : cov / std::sqrt(va * vb);
}

void criterion_1() {
  const MetricVector v1{96.29, 91.79, 66.30, 7.11, 0.8672}, r1{96.87, 92.38, 72.57, 5.45, 0.9037};
  const MetricVector v2{89.97, 64.31, 48.60, 12.64, 0.9209}, r2{90.64, 63.95, 51.33, 11.02, 0.9325};
  const double d1 = relative_improvement(r1, v1).delta_avg;
  const double d2 = relative_improvement(r2, v2).delta_avg;
  const bool ok = std::abs(d1 - kRowADelta) <= kDeltaTolerance && std::abs(d2 - kRowBDelta) <= kDeltaTolerance;
  report(1, ok, "relative improvement fixtures", fmt("row A %.3f (18.39), row B %.3f (7.63), tol %.2f", d1, d2, kDeltaTolerance));
}

void criteria_2_3() {
  EstimatorSuiteOptions mean_opt;
  mean_opt.seed = 2024;
  mean_opt.run_variance = false;
  EstimatorSuite means;
  const double t_mean = timed([&] { means = run_estimator_suite(mean_opt); });
  const std::size_t unbiased = means.unbiased_points();
  report(2, unbiased >= kUnbiasedRequired && t_mean < kUnbiasedBudget, "masked estimator unbiasedness",
         fmt("%zu/45 grid points within 3 s.e. at |B| in {1,4,16}, %zu draws, %.1fs", unbiased, mean_opt.mean_draws, t_mean));

  EstimatorSuiteOptions var_opt = mean_opt;
  var_opt.run_variance = true;
  EstimatorSuite vars;
  const double t_var = timed([&] { vars = run_estimator_suite(var_opt); });
  double worst = 0.0;
  for (const auto& r : vars.variance_runs) {
    if (r.theory_variance > 0.0) worst = std::max(worst, r.variance_error);
  }
  report(3, vars.variance_passed() == vars.variance_checked() && vars.variance_checked() > 0 && t_var < kVarianceBudget,
         "variance formula",
         fmt("%zu/%zu runs within 5%%, worst %.3f%%, %zu draws, %.1fs", vars.variance_passed(), vars.variance_checked(),
             100.0 * worst, var_opt.variance_draws, t_var));
}

void criterion_4() {
  SyntheticSpec spec;
  spec.train_size = 160;
  const auto bundle = generate_synthetic_suite(31, spec);
  double worst = 0.0;
  std::size_t steps = kReductionSteps * 10;
  for (auto kind : {ModelKind::Linear, ModelKind::Mlp, ModelKind::TinyTransformer}) {
    ModelSpec ms;
    ms.kind = kind;
    ms.embed_dim = 8;
    ms.hidden_dims = {12};
    ms.ffn_dim = 12;
    const Model init = Model::initialize(ms, 5);
    RoastConfig c;
    c.perturb = {0.0, 0.0, NormScope::PerExample};
    c.mask_mode = MaskMode::Off;
    c.batch_size = 16;
    c.epochs = kReductionSteps / steps_per_epoch(bundle.train.size(), c.batch_size);
    c.learning_rate = 0.3;
    c.seed = 77;

    std::vector<Eigen::VectorXd> reference;
    Model sgd = init;
    RandomSource data_rng = RandomSource(c.seed).split(kDataStream);
    for (std::size_t e = 0; e < c.epochs; ++e) {
      for (const auto& rows : epoch_batches(bundle.train.size(), c.batch_size, data_rng)) {
        auto ev = task_loss(sgd, bundle.train.batch(rows));
        const Eigen::VectorXd g = ev.parameter_gradient(sgd);
        sgd.parameters().assign(sgd.parameters().flatten() - c.learning_rate * (2.0 * g));
        reference.push_back(sgd.parameters().flatten());
      }
    }
    std::size_t seen = 0;
    train(init, bundle.train, c, [&](std::size_t step, const Model& m) {
      worst = std::max(worst, (m.parameters().flatten() - reference.at(step)).cwiseAbs().maxCoeff());
      ++seen;
    });
    steps = std::min(steps, seen == reference.size() ? seen : std::size_t{0});
  }
  report(4, worst <= kReductionTolerance && steps >= kReductionSteps, "reduction to plain SGD",
         fmt("max |theta - theta_sgd| = %.3g over %zu steps x 3 models", worst, steps));
}

void criterion_5() {
  RandomSource rng(555);
  const double alpha = 0.7;
  std::size_t compared = 0, mismatched = 0;
  for (int v = 0; v < 10; ++v) {
    Eigen::VectorXd scores(1000);
    for (auto& s : scores) s = rng.normal();
    RandomSource mask_rng = rng.split(static_cast<std::uint64_t>(v));
    RandomSource thre_rng = mask_rng;
    MaskSettings sampled{alpha, kLargeBeta, Strategy::Max, MaskMode::Sample, SigmoidSign::Rising};
    MaskSettings thre = sampled;
    thre.mode = MaskMode::HardThreshold;
    const auto a = refresh_mask(scores, sampled, mask_rng);
    const auto b = refresh_mask(scores, thre, thre_rng);
    for (Eigen::Index i = 0; i < scores.size(); ++i) {
      if (std::abs(a.normalized[i] - alpha) < kAlphaMargin) continue;
      ++compared;
      mismatched += a.mask[i] != b.mask[i] ? 1 : 0;
    }
  }
  report(5, mismatched == 0 && compared > 0, "large-beta equals hard threshold",
         fmt("%zu mismatches over %zu scalars (10 vectors, beta=1e4)", mismatched, compared));
}

void criterion_6() {
  std::vector<GradCheckResult> results;
  const double t = timed([&] { results = gradcheck_suite(606, kGradInstances); });
  double worst = 0.0;
  bool all = true;
  std::size_t kinds[3] = {0, 0, 0};
  for (const auto& r : results) {
    worst = std::max({worst, r.max_parameter_error, r.max_input_error});
    all = all && r.passed;
    ++kinds[static_cast<int>(r.kind)];
  }
  report(6, all && worst < kGradTolerance && results.size() == kGradInstances && t < kGradBudget,
         "finite-difference gradients",
         fmt("%zu instances (linear %zu, mlp %zu, transformer %zu), max rel err %.2e, %.1fs", results.size(), kinds[0],
             kinds[1], kinds[2], worst, t));
}

// --- metric oracles -------------------------------------------------------

double ece_oracle(const std::vector<double>& conf, const std::vector<int>& right) {
  double ece = 0.0;
  const double n = static_cast<double>(conf.size());
  for (int b = 0; b < 10; ++b) {
    const double lo = b / 10.0, hi = (b + 1) / 10.0;
    double cnt = 0, hit = 0, sum = 0;
    for (std::size_t i = 0; i < conf.size(); ++i) {
      if (conf[i] > lo && conf[i] <= hi) cnt += 1, hit += right[i], sum += conf[i];
    }
    if (cnt > 0) ece += (cnt / n) * std::abs(hit / cnt - sum / cnt);
  }
  return 100.0 * ece;
}

void criterion_7() {
  bool ok = true;
  std::vector<std::pair<std::vector<double>, std::vector<int>>> ece_cases{
      {{1.0, 1.0, 1.0}, {1, 1, 1}}, {{0.95, 0.95, 0.65, 0.65}, {1, 1, 1, 0}}, {{0.7}, {0}}};
  std::size_t ece_ok = 0;
  for (const auto& [conf, right] : ece_cases) {
    std::vector<EvalRecord> recs;
    for (std::size_t i = 0; i < conf.size(); ++i) recs.push_back({{conf[i], 1.0 - conf[i]}, right[i] ? 0u : 1u, SplitTag::In});
    ece_ok += expected_calibration_error(recs) == ece_oracle(conf, right) ? 1 : 0;
  }
  ok = ok && ece_ok == 3;

  RandomSource rng(77);
  std::size_t auc_ok = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n_in = 1 + rng.below(100), n_an = 1 + rng.below(100);
    std::vector<double> in, an;
    for (std::size_t i = 0; i < n_in; ++i) in.push_back(0.4 + std::round(rng.uniform() * 24) / 40.0);
    for (std::size_t i = 0; i < n_an; ++i) an.push_back(0.4 + std::round(rng.uniform(0, 0.7) * 24) / 40.0);
    long twice = 0;
    for (double a : an) {
      for (double i : in) twice += a < i ? 2 : (a == i ? 1 : 0);
    }
    const double oracle = static_cast<double>(twice) / 2.0 / static_cast<double>(n_in * n_an);
    auto recs = [](const std::vector<double>& msp, SplitTag tag) {
      std::vector<EvalRecord> out;
      for (double m : msp) {
        EvalRecord r{std::vector<double>(10, (1.0 - m) / 9.0), std::nullopt, tag};
        r.distribution[0] = m;
        out.push_back(r);
      }
      return out;
    };
    auc_ok += auroc_msp(recs(in, SplitTag::In), recs(an, SplitTag::Anomaly)) == oracle ? 1 : 0;
  }
  ok = ok && auc_ok == 20;

  std::size_t rank_ok = 0;
  {
    std::vector<MetricVector> m{{90, 80, 70, 5, 0.9}, {85, 75, 60, 8, 0.8}, {80, 70, 50, 9, 0.7}};
    rank_ok += average_rank(m) == std::vector<double>{1.0, 2.0, 3.0} ? 1 : 0;
  }
  {
    std::vector<MetricVector> m{{90, 80, 70, 5, 0.9}, {90, 80, 70, 5, 0.9}};
    rank_ok += average_rank(m) == std::vector<double>{1.5, 1.5} ? 1 : 0;
  }
  {
    std::vector<MetricVector> m{{90, 70, 60, 5, 0.8}, {85, 60, 65, 3, 0.8}, {80, 75, 60, 7, 0.9}};
    const std::vector<double> manual{(1 + 2 + 2.5 + 2 + 2.5) / 5.0, (2 + 3 + 1 + 1 + 2.5) / 5.0, (3 + 1 + 2.5 + 3 + 1) / 5.0};
    const auto r = average_rank(m);
    bool same = true;
    for (std::size_t i = 0; i < 3; ++i) same = same && std::abs(r[i] - manual[i]) <= 1e-15;
    rank_ok += same ? 1 : 0;
  }
  ok = ok && rank_ok == 3;
  report(7, ok, "metric oracles", fmt("ECE %zu/3 exact, AUROC %zu/20 exact, rank fixtures %zu/3", ece_ok, auc_ok, rank_ok));
}

void criteria_8_9() {
  ExperimentConfig c;  // defaults are the synthetic suite and roast settings of the criterion
  std::vector<RunResult> results;
  const double t = timed([&] { results = run_experiment(c); });
  const auto summaries = summarize(results);
  const MethodSummary *vanilla = nullptr, *roast = nullptr;
  for (const auto& s : summaries) {
    if (s.method == "vanilla") vanilla = &s;
    if (s.method == "roast") roast = &s;
  }
  if (!vanilla || !roast || roast->runs != c.seeds.size()) {
    report(8, false, "desk-scale benchmark direction", "missing or diverged runs");
    report(9, false, "mask IoU drift", "missing runs");
    return;
  }
  const auto v = vanilla->mean.values(), r = roast->mean.values();
  std::size_t better = 0;
  for (std::size_t k = 0; k < MetricVector::kCount; ++k) {
    better += (MetricVector::kHigherIsBetter[k] ? r[k] > v[k] : r[k] < v[k]) ? 1 : 0;
  }
  report(8, better >= kMetricsRequired && roast->delta_avg > 0.0 && t < kBenchmarkBudget,
         "desk-scale benchmark direction",
         fmt("better on %zu/5 (in %.2f/%.2f shift %.2f/%.2f adv %.2f/%.2f ece %.2f/%.2f auroc %.4f/%.4f), "
             "delta_avg %.2f, %zu methods x %zu seeds in %.1fs",
             better, r[0], v[0], r[1], v[1], r[2], v[2], r[3], v[3], r[4], v[4], roast->delta_avg, c.methods.size(),
             c.seeds.size(), t));

  bool all_negative = true;
  std::string rhos;
  std::size_t epochs = 0;
  for (const auto& run : results) {
    if (run.method != "roast") continue;
    std::vector<double> k, iou;
    for (const auto& e : run.log.epochs) {
      k.push_back(static_cast<double>(e.epoch));
      iou.push_back(e.iou_vs_first);
    }
    epochs = k.size();
    const double rho = spearman(k, iou);
    all_negative = all_negative && rho < 0.0 && k.size() >= kMinEpochs;
    rhos += fmt("%s%.3f", rhos.empty() ? "" : ", ", rho);
  }
  report(9, all_negative, "mask IoU drift", fmt("Spearman rho(epoch, IoU vs epoch 1) per seed: %s over %zu epochs", rhos.c_str(), epochs));
}

void criterion_10() {
  const fs::path root = fs::temp_directory_path() / "roast-acceptance-determinism";
  fs::remove_all(root);
  bool ok = true;
  std::string detail;
  for (const char* run : {"a", "b"}) {
    const std::string cmd = std::string("\"") + ROAST_CLI + "\" benchmark --out \"" + (root / run).string() + "\" > \"" +
                            (root.string() + "-" + run + ".log") + "\" 2>&1";
    fs::create_directories(root);
    const int status = std::system(cmd.c_str());
    if (status != 0) {
      ok = false;
      detail = "benchmark invocation failed with status " + std::to_string(status);
    }
  }
  if (ok) {
    std::size_t bytes = 0;
    for (const char* file : {"report.csv", "report.json"}) {
      const std::string a = slurp(root / "a" / file), b = slurp(root / "b" / file);
      ok = ok && !a.empty() && a == b;
      bytes += a.size();
    }
    detail = fmt("report.csv and report.json %s across two CLI runs (%zu bytes)", ok ? "identical" : "DIFFER", bytes);
  }
  report(10, ok, "benchmark determinism", detail);
}

}  // namespace

int main() {
  std::printf("acceptance suite\n");
  const std::vector<std::function<void()>> checks{criterion_1, criteria_2_3, criterion_4, criterion_5,
                                                  criterion_6, criterion_7,  criteria_8_9, criterion_10};
  for (const auto& check : checks) {
    try {
      check();
    } catch (const std::exception& e) {
      std::printf("[FAIL] criterion threw: %s\n", e.what());
      ++failures;
    }
  }
  std::printf("%d failure(s)\n", failures);
  return failures == 0 ? 0 : 1;
}
