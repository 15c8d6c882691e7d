#pragma once

#include "roast/dataset.hpp"
#include "roast/tensor.hpp"

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace roast {

// Accuracies and ECE in percent, AUROC as a fraction.
struct MetricVector {
  double acc_in = 0.0;
  double acc_shift = 0.0;
  double acc_adv = 0.0;
  double ece = 0.0;
  double auroc = 0.5;

  static constexpr std::size_t kCount = 5;
  static constexpr std::array<const char*, kCount> kNames{"acc_in", "acc_shift", "acc_adv", "ece", "auroc"};
  // true where larger is better
  static constexpr std::array<bool, kCount> kHigherIsBetter{true, true, true, false, true};
  // the ideal value of each metric
  static constexpr std::array<double, kCount> kBest{100.0, 100.0, 100.0, 0.0, 1.0};

  std::array<double, kCount> values() const { return {acc_in, acc_shift, acc_adv, ece, auroc}; }
  static MetricVector from_values(const std::array<double, kCount>& v) { return {v[0], v[1], v[2], v[3], v[4]}; }

  friend bool operator==(const MetricVector&, const MetricVector&) = default;
};

struct EvalRecord {
  std::vector<double> distribution;
  std::optional<std::size_t> label;
  SplitTag tag = SplitTag::In;
};

// [N, C] probabilities -> records; throws when rows do not sum to 1 within 1e-9.
std::vector<EvalRecord> make_records(const Tensor& probabilities, std::span<const std::size_t> labels, SplitTag tag);

// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> distribution);
double max_probability(std::span<const double> distribution);

double accuracy(std::span<const EvalRecord> records);

// Equal-width bins over (0, 1], right-closed.
double expected_calibration_error(std::span<const EvalRecord> records, std::size_t bins = 10);

// Probability that an anomaly outscores an in-distribution example on
// 1 - max probability, ties counted half.
double auroc_msp(std::span<const EvalRecord> in_records, std::span<const EvalRecord> anomaly_records);

// Mann-Whitney AUROC for generic scores: P(positive > negative) + P(tie) / 2.
// Pairwise up to kExactAurocLimit total samples, midranks beyond.
inline constexpr std::size_t kExactAurocLimit = 10000;
double auroc(std::span<const double> positive, std::span<const double> negative);
double auroc_pairwise(std::span<const double> positive, std::span<const double> negative);
double auroc_ranked(std::span<const double> positive, std::span<const double> negative);

struct RelativeImprovement {
  double delta_avg = 0.0;  // percent
  std::array<double, MetricVector::kCount> terms{};
  // metrics whose base already sits at the ideal value; left out of the mean
  std::array<bool, MetricVector::kCount> excluded{};

  bool any_excluded() const;
};

RelativeImprovement relative_improvement(const MetricVector& method, const MetricVector& base);

// Mean over the five metrics of each method's rank (1 = best, ties share
// the mean rank).
std::vector<double> average_rank(std::span<const MetricVector> methods);

/// Scores of one evaluation split. Unset fields do not apply to the tag.
struct SplitScore {
  std::string name;
  SplitTag tag = SplitTag::In;
  std::size_t examples = 0;
  std::optional<double> accuracy;
  std::optional<double> ece;
  std::optional<double> auroc;

  friend bool operator==(const SplitScore&, const SplitScore&) = default;
};

// acc_shift and acc_adv average their splits uniformly; ECE averages all
// labeled evaluation splits uniformly; AUROC averages anomaly splits.
MetricVector combine_scores(std::span<const SplitScore> scores);

}  // namespace roast
