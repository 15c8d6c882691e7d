#include "roast/error.hpp"
#include "roast/estimator.hpp"
#include "roast/experiment.hpp"
#include "roast/gradcheck.hpp"
#include "roast/io.hpp"
#include "roast/report.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <iostream>
#include <optional>
#include <sstream>

using namespace roast;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kValidation = 1, kDivergence = 2, kIo = 3 };

struct Common {
  std::string config;
  std::string out;
};

ExperimentConfig load_config(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_experiment_config(c.config);
  if (!c.out.empty()) cfg.output_dir = c.out;
  return cfg;
}

void write_logs(const std::vector<RunResult>& results, const fs::path& dir) {
  for (const auto& r : results) {
    if (r.diverged) continue;
    std::ostringstream log;
    r.log.write_jsonl(log);
    write_text_file(dir / r.log_path, log.str());
  }
}

int cmd_train(const Common& common, const std::string& method, std::optional<std::uint64_t> seed) {
  ExperimentConfig cfg = load_config(common);
  if (seed) cfg.roast.seed = *seed;
  const PreparedData data = prepare_data(cfg);
  const RoastConfig rc = method == "config" ? cfg.roast : [&] {
    RoastConfig c = configure_method(method, cfg.roast);
    c.seed = cfg.roast.seed;
    return c;
  }();
  const TrainResult result = train(data.init, data.bundle.train, rc);
  const fs::path dir = cfg.output_dir;
  save_checkpoint(result.model, rc.seed, dir / "checkpoint.json");
  std::ostringstream log;
  result.log.write_jsonl(log);
  write_text_file(dir / "train_log.jsonl", log.str());

  RunResult run;
  run.method = method;
  run.seed = rc.seed;
  run.splits = evaluate_model(result.model, data.bundle);
  run.metrics = combine_scores(run.splits);
  run.log_path = "train_log.jsonl";
  Json metrics = report_json({run})["runs"][0];
  write_text_file(dir / "metrics.json", metrics.dump(2) + "\n");
  const auto& m = run.metrics;
  std::cout << "acc_in " << m.acc_in << " acc_shift " << m.acc_shift << " acc_adv " << m.acc_adv << " ece " << m.ece
            << " auroc " << m.auroc << "\n";
  return kOk;
}

int cmd_benchmark(const Common& common, const std::vector<std::uint64_t>& seeds) {
  ExperimentConfig cfg = load_config(common);
  if (!seeds.empty()) cfg.seeds = seeds;
  const auto start = std::chrono::steady_clock::now();
  const auto results = run_experiment(cfg);
  const fs::path dir = cfg.output_dir;
  write_text_file(dir / "config.json", to_json(cfg).dump(2) + "\n");
  write_logs(results, dir);
  write_report(results, dir);
  std::cout << render_csv(summarize(results));
  std::size_t diverged = 0;
  for (const auto& r : results) diverged += r.diverged ? 1 : 0;
  if (diverged > 0) std::cerr << diverged << " run(s) diverged and were left out of the aggregates\n";
  std::cerr << "wall time " << std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()
            << " s\n";
  return kOk;
}

int cmd_verify_estimator(const Common& common, std::uint64_t seed, std::size_t mean_draws, std::size_t var_draws,
                         std::size_t workers) {
  EstimatorSuiteOptions opt;
  opt.seed = seed;
  opt.mean_draws = mean_draws;
  opt.variance_draws = var_draws;
  opt.workers = workers;
  const auto suite = run_estimator_suite(opt);
  const Json j = suite.to_json();
  if (!common.out.empty()) write_text_file(fs::path(common.out) / "estimator_report.json", j.dump(2) + "\n");
  std::cout << j["summary"].dump(2) << "\n";
  const bool ok = suite.unbiased_points() + 1 >= estimator_grid().size() &&
                  suite.variance_passed() == suite.variance_checked() &&
                  suite.control_biased() == suite.control_expected_biased();
  return ok ? kOk : kValidation;
}

int cmd_gradcheck(const Common& common, std::uint64_t seed, std::size_t instances) {
  const auto results = gradcheck_suite(seed, instances);
  Json j = Json::array();
  bool ok = true;
  double worst = 0.0;
  for (const auto& r : results) {
    j.push_back({{"kind", std::string(to_string(r.kind))},
                 {"parameters", r.parameters},
                 {"max_parameter_error", r.max_parameter_error},
                 {"max_input_error", r.max_input_error},
                 {"passed", r.passed}});
    ok = ok && r.passed;
    worst = std::max({worst, r.max_parameter_error, r.max_input_error});
  }
  if (!common.out.empty()) write_text_file(fs::path(common.out) / "gradcheck.json", j.dump(2) + "\n");
  std::cout << results.size() << " instances, max relative error " << worst << ", " << (ok ? "passed" : "FAILED")
            << "\n";
  return ok ? kOk : kValidation;
}

int cmd_report(const Common& common, const std::string& input) {
  const std::string csv = rerender_csv(input);
  if (common.out.empty()) {
    std::cout << csv;
  } else {
    write_text_file(fs::path(common.out) / "report.csv", csv);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial training with selective gradient masking"};
  app.require_subcommand(1);

  Common common;
  std::string method = "roast";
  std::optional<std::uint64_t> train_seed;
  std::vector<std::uint64_t> bench_seeds;
  std::uint64_t seed = 0;
  std::size_t mean_draws = 100000, var_draws = 1000000, workers = 0, instances = 50;
  std::string input;

  auto* train_cmd = app.add_subcommand("train", "Train one method and write checkpoint, log and metrics");
  train_cmd->add_option("--config", common.config, "JSON config file");
  train_cmd->add_option("--method", method, "Registry method, or 'config' to use the roast block as is");
  train_cmd->add_option("--seed", train_seed, "Training seed");
  train_cmd->add_option("--out", common.out, "Output directory");

  auto* bench_cmd = app.add_subcommand("benchmark", "Run the method grid and write reports");
  bench_cmd->add_option("--config", common.config, "JSON config file");
  bench_cmd->add_option("--seed", bench_seeds, "Seed list (repeatable)");
  bench_cmd->add_option("--out", common.out, "Output directory");

  auto* est_cmd = app.add_subcommand("verify-estimator", "Monte-Carlo check of the masked gradient estimator");
  est_cmd->add_option("--seed", seed, "Seed");
  est_cmd->add_option("--mean-draws", mean_draws, "Draws per unbiasedness run");
  est_cmd->add_option("--variance-draws", var_draws, "Draws per variance run");
  est_cmd->add_option("--workers", workers, "Worker threads (0 = all cores)");
  est_cmd->add_option("--out", common.out, "Output directory for estimator_report.json");

  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient suite");
  grad_cmd->add_option("--seed", seed, "Seed");
  grad_cmd->add_option("--instances", instances, "Number of random instances");
  grad_cmd->add_option("--out", common.out, "Output directory for gradcheck.json");

  auto* report_cmd = app.add_subcommand("report", "Re-render report.csv from a stored report.json");
  report_cmd->add_option("--in", input, "report.json")->required();
  report_cmd->add_option("--out", common.out, "Output directory (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*train_cmd) return cmd_train(common, method, train_seed);
    if (*bench_cmd) return cmd_benchmark(common, bench_seeds);
    if (*est_cmd) return cmd_verify_estimator(common, seed, mean_draws, var_draws, workers);
    if (*grad_cmd) return cmd_gradcheck(common, seed, instances);
    if (*report_cmd) return cmd_report(common, input);
  } catch (const DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << "\n";
    return kDivergence;
  } catch (const NonFiniteError& e) {
    std::cerr << "diverged: " << e.what() << "\n";
    return kDivergence;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  }
  return kValidation;
}
