#pragma once

#include "roast/model.hpp"
#include "roast/random.hpp"

#include <Eigen/Dense>

#include <string_view>

namespace roast {

// How normalised scores are derived from importance (Max is the method
// itself; Min and Rand are the comparison strategies).
enum class Strategy { Max, Min, Rand };

enum class MaskMode {
  Sample,         // m ~ Bernoulli(p)
  HardThreshold,  // m = 1[s_norm >= alpha]
  SoftScale,      // g scaled by p, no mask
  Off,            // plain gradient
};

// Rising: p = sigmoid(2 beta (s - alpha)), high importance -> high update
// probability. AsPrinted: p = 1 / (1 + exp(2 beta (s - alpha))).
enum class SigmoidSign { Rising, AsPrinted };

std::string_view to_string(Strategy s);
std::string_view to_string(MaskMode m);
std::string_view to_string(SigmoidSign s);
Strategy parse_strategy(std::string_view name);
MaskMode parse_mask_mode(std::string_view name);
SigmoidSign parse_sigmoid_sign(std::string_view name);

// p is clamped to [kMinProbability, 1 - kMinProbability] so 1/p stays finite.
inline constexpr double kMinProbability = 1e-6;

/// Per-scalar running sum of squared gradients over the current window.
class ImportanceAccumulator {
 public:
  explicit ImportanceAccumulator(std::size_t scalars = 0);

  void accumulate(const Eigen::VectorXd& gradient);
  void reset();

  const Eigen::VectorXd& sums() const { return sums_; }
  std::size_t steps() const { return steps_; }
  std::size_t size() const { return static_cast<std::size_t>(sums_.size()); }

 private:
  Eigen::VectorXd sums_;
  std::size_t steps_ = 0;
};

// Rank normalisation to [0, 1]: stable ascending order by (score, index),
// s_norm = rank / (N - 1); N = 1 gives 0.5. Min reverses the order; Rand
// assigns a random permutation of the ranks drawn from `rng`.
Eigen::VectorXd normalize_scores(const Eigen::VectorXd& scores, Strategy strategy = Strategy::Max,
                                 RandomSource* rng = nullptr);

template <typename Derived>
Eigen::VectorXd sampling_probability(const Eigen::MatrixBase<Derived>& normalized, double alpha, double beta,
                                     SigmoidSign sign = SigmoidSign::Rising) {
  const double k = sign == SigmoidSign::Rising ? -2.0 * beta : 2.0 * beta;
  return (1.0 / (1.0 + (k * (normalized.array() - alpha)).exp()))
      .cwiseMax(kMinProbability)
      .cwiseMin(1.0 - kMinProbability)
      .matrix();
}

Eigen::VectorXd sample_mask(const Eigen::VectorXd& probability, RandomSource& rng);

template <typename Derived>
Eigen::VectorXd hard_threshold_mask(const Eigen::MatrixBase<Derived>& normalized, double alpha) {
  return (normalized.array() >= alpha).template cast<double>().matrix();
}

// |a AND b| / |a OR b| over 0/1 masks; 1 when both are empty.
template <typename DerivedA, typename DerivedB>
double mask_iou(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("mask_iou: length mismatch");
  const auto on_a = a.array() != 0.0;
  const auto on_b = b.array() != 0.0;
  const auto both = (on_a && on_b).count();
  const auto either = (on_a || on_b).count();
  return either == 0 ? 1.0 : static_cast<double>(both) / static_cast<double>(either);
}

struct MaskState {
  Eigen::VectorXd normalized;
  Eigen::VectorXd probability;
  Eigen::VectorXd mask;
  std::size_t refresh_epoch = 0;
};

struct MaskSettings {
  double alpha = 0.7;
  double beta = 5.0;
  Strategy strategy = Strategy::Max;
  MaskMode mode = MaskMode::Sample;
  SigmoidSign sign = SigmoidSign::Rising;
};

// Scores -> normalised scores -> probabilities -> mask, per `settings.mode`.
MaskState refresh_mask(const Eigen::VectorXd& scores, const MaskSettings& settings, RandomSource& rng);

// The update direction g_tilde for the given mode:
//   Sample:        (m / p) * g with scaling, m * g without
//   HardThreshold: m * g (m is the thresholded mask)
//   SoftScale:     p * g
//   Off:           g
Eigen::VectorXd masked_gradient(const Eigen::VectorXd& gradient, const MaskState& state, MaskMode mode,
                                bool scaling);

// theta <- theta - lr * g_tilde
void apply_masked_update(ParameterStore& store, const Eigen::VectorXd& gradient, const MaskState& state,
                         double learning_rate, bool scaling, MaskMode mode = MaskMode::Sample);

}  // namespace roast
