#pragma once

#include "roast/adversarial.hpp"
#include "roast/dataset.hpp"
#include "roast/masking.hpp"
#include "roast/model.hpp"

#include <Eigen/Dense>

#include <functional>
#include <iosfwd>
#include <vector>

namespace roast {

struct RoastConfig {
  // false: the loss is the task cross-entropy alone.
  bool adversarial = true;
  PerturbConfig perturb;
  double alpha = 0.7;
  double beta = 5.0;
  double learning_rate = 0.5;
  // Mask refresh period in iterations; 0 means one epoch.
  std::size_t refresh_period = 0;
  bool scaling = true;
  Strategy strategy = Strategy::Max;
  MaskMode mask_mode = MaskMode::Sample;
  SigmoidSign sigmoid_sign = SigmoidSign::Rising;
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;

  void validate() const;
  MaskSettings mask_settings() const;
  friend bool operator==(const RoastConfig&, const RoastConfig&) = default;
};

// RandomSource(seed).split(k) sub-streams used by train().
inline constexpr std::uint64_t kDataStream = 1;
inline constexpr std::uint64_t kMaskStream = 2;

// Shuffled row indices chunked into batches; the last batch may be short.
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t rows, std::size_t batch_size, RandomSource& rng);

std::size_t steps_per_epoch(std::size_t rows, std::size_t batch_size);

// One in-order pass accumulating squared task-loss gradients. The model is
// not modified.
ImportanceAccumulator init_grad(const Model& model, const Split& data, std::size_t batch_size);

void accumulate_importance(ImportanceAccumulator& acc, const Eigen::VectorXd& gradient);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double mean_loss = 0.0;
  double mask_density = 0.0;
  double iou_vs_first = 1.0;
  double iou_vs_last = 1.0;
  std::size_t mask_id = 0;  // snapshot in effect at the epoch's first step
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  std::vector<double> step_losses;
  std::vector<std::size_t> step_mask_ids;
  std::vector<std::size_t> refresh_steps;
  std::vector<Eigen::VectorXd> masks;

  void write_jsonl(std::ostream& out) const;
};

struct TrainResult {
  Model model;
  TrainLog log;
};

// Called after every parameter update with the 0-based step index.
using StepObserver = std::function<void(std::size_t step, const Model& model)>;

// Throws DivergenceError when the loss or parameters become non-finite.
TrainResult train(const Model& initial, const Split& data, const RoastConfig& config,
                  const StepObserver& observer = {});

}  // namespace roast
