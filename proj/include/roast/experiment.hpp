#pragma once

#include "roast/metrics.hpp"
#include "roast/model.hpp"
#include "roast/synthetic.hpp"
#include "roast/trainer.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace roast {

// Registry: vanilla, adv-only, thre-only, adv-thre, adv-scal, roast,
// roast-min, roast-rand.
const std::vector<std::string>& method_names();
bool is_method(std::string_view name);
// Base config with the method's switches applied.
RoastConfig configure_method(std::string_view name, const RoastConfig& base);

struct DatasetSource {
  std::string path;
  std::string name;
  SplitTag tag = SplitTag::In;
  friend bool operator==(const DatasetSource&, const DatasetSource&) = default;
};

struct ExperimentConfig {
  ModelSpec model;
  RoastConfig roast;
  SyntheticSpec data;
  std::vector<DatasetSource> extra_splits;  // JSONL files appended to the suite
  std::vector<std::string> methods = method_names();
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::string output_dir = "roast-out";
  std::uint64_t data_seed = 7;
  // seed of the shared initial weights every method starts from
  std::uint64_t init_seed = 11;
  // training seed of the frozen reference model behind the adv split
  std::uint64_t reference_seed = 1000;
  double attack_step = 0.1;
  NormScope attack_scope = NormScope::PerExample;
  std::size_t workers = 0;

  void validate() const;
  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

struct RunResult {
  std::string method;
  std::uint64_t seed = 0;
  MetricVector metrics;
  std::vector<SplitScore> splits;
  TrainLog log;
  std::string log_path;  // relative to the output directory
  bool diverged = false;
  std::string error;
  double wall_seconds = 0.0;
};

// Scores every evaluation split; AUROC pits all in-distribution examples
// against each anomaly split.
std::vector<SplitScore> evaluate_model(const Model& model, const DatasetBundle& bundle);

// Synthetic suite, extra splits, reference model and adv split.
struct PreparedData {
  DatasetBundle bundle;
  Model init;
  MetricVector reference_metrics;
};
PreparedData prepare_data(const ExperimentConfig& config);

std::vector<RunResult> run_experiment(const ExperimentConfig& config, const PreparedData& data);
std::vector<RunResult> run_experiment(const ExperimentConfig& config);

struct MethodSummary {
  std::string method;
  std::size_t runs = 0;  // non-diverged runs
  std::size_t diverged = 0;
  MetricVector mean;
  MetricVector stddev;  // sample standard deviation over seeds, 0 for one run
  double delta_avg = 0.0;
  double delta_avg_std = 0.0;
  double rank_avg = 1.0;
  // degenerate terms excluded for any seed
  std::array<bool, MetricVector::kCount> excluded{};
};

// Per-seed deltas against that seed's vanilla run; ranks over method means.
std::vector<MethodSummary> summarize(const std::vector<RunResult>& results);

}  // namespace roast
