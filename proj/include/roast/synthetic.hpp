#pragma once

#include "roast/dataset.hpp"
#include "roast/trainer.hpp"

#include <cstdint>
#include <vector>

namespace roast {

struct DatasetBundle {
  Split train;
  std::vector<Split> evals;
  std::size_t vocab_size = 0;
  std::size_t seq_len = 0;
  std::size_t num_classes = 0;

  const Split& find(std::string_view name) const;
  void validate() const;
  friend bool operator==(const DatasetBundle&, const DatasetBundle&) = default;
};

/// Generator settings for the token-classification suite.
///
/// Ids [0, anomaly_start) form the training vocabulary: the first
/// num_classes * signal_tokens ids are class markers, the rest are neutral
/// filler drawn from a Zipf profile. Ids [anomaly_start, vocab_size) appear
/// only in the anomaly split.
struct SyntheticSpec {
  std::size_t vocab_size = 200;
  std::size_t seq_len = 16;
  std::size_t num_classes = 3;
  std::size_t train_size = 2000;
  std::size_t eval_size = 600;
  std::size_t anomaly_start = 150;
  std::size_t signal_tokens = 8;
  double signal_rate = 0.15;
  double confuser_rate = 0.06;
  double label_noise = 0.1;
  double zipf_exponent = 1.0;
  // shift split
  std::size_t shift_seq_len = 24;
  double shift_signal_rate = 0.12;
  double shift_zipf_exponent = 0.3;

  void validate() const;
  friend bool operator==(const SyntheticSpec&, const SyntheticSpec&) = default;
};

// Splits: train, "in", "shift", "anomaly". The adv split is added by
// build_transfer_adversarial_set.
DatasetBundle generate_synthetic_suite(std::uint64_t seed, const SyntheticSpec& spec);

// Per-example perturbations of `source` crafted against `reference`, frozen
// into a new split tagged Adv. Throws when the reference never trained.
Split build_transfer_adversarial_set(const Split& source, const TrainResult& reference, double attack_step,
                                     NormScope scope = NormScope::PerExample);

}  // namespace roast
