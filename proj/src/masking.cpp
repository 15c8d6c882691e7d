#include "roast/masking.hpp"

#include "roast/error.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace roast {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::Max: return "max";
    case Strategy::Min: return "min";
    case Strategy::Rand: return "rand";
  }
  return "?";
}

std::string_view to_string(MaskMode m) {
  switch (m) {
    case MaskMode::Sample: return "sample";
    case MaskMode::HardThreshold: return "hard-threshold";
    case MaskMode::SoftScale: return "soft-scale";
    case MaskMode::Off: return "off";
  }
  return "?";
}

std::string_view to_string(SigmoidSign s) { return s == SigmoidSign::Rising ? "rising" : "as-printed"; }

Strategy parse_strategy(std::string_view name) {
  if (name == "max") return Strategy::Max;
  if (name == "min") return Strategy::Min;
  if (name == "rand") return Strategy::Rand;
  throw ValidationError("unknown strategy '" + std::string(name) + "'");
}

MaskMode parse_mask_mode(std::string_view name) {
  if (name == "sample") return MaskMode::Sample;
  if (name == "hard-threshold") return MaskMode::HardThreshold;
  if (name == "soft-scale") return MaskMode::SoftScale;
  if (name == "off") return MaskMode::Off;
  throw ValidationError("unknown mask mode '" + std::string(name) + "'");
}

SigmoidSign parse_sigmoid_sign(std::string_view name) {
  if (name == "rising") return SigmoidSign::Rising;
  if (name == "as-printed") return SigmoidSign::AsPrinted;
  throw ValidationError("unknown sigmoid sign '" + std::string(name) + "'");
}

ImportanceAccumulator::ImportanceAccumulator(std::size_t scalars)
    : sums_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(scalars))) {}

void ImportanceAccumulator::accumulate(const Eigen::VectorXd& gradient) {
  if (gradient.size() != sums_.size()) {
    throw ValidationError("importance: gradient has " + std::to_string(gradient.size()) + " entries, expected " +
                          std::to_string(sums_.size()));
  }
  sums_.array() += gradient.array().square();
  ++steps_;
}

void ImportanceAccumulator::reset() {
  sums_.setZero();
  steps_ = 0;
}

Eigen::VectorXd normalize_scores(const Eigen::VectorXd& scores, Strategy strategy, RandomSource* rng) {
  const auto n = static_cast<std::size_t>(scores.size());
  Eigen::VectorXd out(scores.size());
  if (n == 0) return out;
  if (n == 1) {
    out[0] = 0.5;
    return out;
  }
  std::vector<std::size_t> rank_of(n);
  if (strategy == Strategy::Rand) {
    if (rng == nullptr) throw ValidationError("normalize_scores: the rand strategy needs a random source");
    rank_of = rng->permutation(n);
  } else {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return scores[static_cast<Eigen::Index>(a)] < scores[static_cast<Eigen::Index>(b)];
    });
    for (std::size_t r = 0; r < n; ++r) rank_of[order[r]] = strategy == Strategy::Min ? n - 1 - r : r;
  }
  const double denom = static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) out[static_cast<Eigen::Index>(i)] = static_cast<double>(rank_of[i]) / denom;
  return out;
}

Eigen::VectorXd sample_mask(const Eigen::VectorXd& probability, RandomSource& rng) {
  Eigen::VectorXd m(probability.size());
  for (Eigen::Index i = 0; i < probability.size(); ++i) m[i] = rng.bernoulli(probability[i]) ? 1.0 : 0.0;
  return m;
}

MaskState refresh_mask(const Eigen::VectorXd& scores, const MaskSettings& settings, RandomSource& rng) {
  MaskState state;
  state.normalized = normalize_scores(scores, settings.strategy, &rng);
  state.probability = sampling_probability(state.normalized, settings.alpha, settings.beta, settings.sign);
  switch (settings.mode) {
    case MaskMode::Sample: state.mask = sample_mask(state.probability, rng); break;
    case MaskMode::HardThreshold: state.mask = hard_threshold_mask(state.normalized, settings.alpha); break;
    case MaskMode::SoftScale:
    case MaskMode::Off: state.mask = Eigen::VectorXd::Ones(scores.size()); break;
  }
  return state;
}

Eigen::VectorXd masked_gradient(const Eigen::VectorXd& gradient, const MaskState& state, MaskMode mode,
                                bool scaling) {
  const auto check = [&](const Eigen::VectorXd& v, const char* what) {
    if (v.size() != gradient.size()) {
      throw ValidationError(std::string("masked update: ") + what + " length " + std::to_string(v.size()) +
                            " does not match gradient length " + std::to_string(gradient.size()));
    }
  };
  switch (mode) {
    case MaskMode::Off: return gradient;
    case MaskMode::SoftScale:
      check(state.probability, "probability");
      return state.probability.cwiseProduct(gradient);
    case MaskMode::HardThreshold:
      check(state.mask, "mask");
      return state.mask.cwiseProduct(gradient);
    case MaskMode::Sample:
      check(state.mask, "mask");
      if (!scaling) return state.mask.cwiseProduct(gradient);
      check(state.probability, "probability");
      return (state.mask.array() / state.probability.array() * gradient.array()).matrix();
  }
  return gradient;
}

void apply_masked_update(ParameterStore& store, const Eigen::VectorXd& gradient, const MaskState& state,
                         double learning_rate, bool scaling, MaskMode mode) {
  if (static_cast<std::size_t>(gradient.size()) != store.scalar_count()) {
    throw ValidationError("masked update: gradient length does not match the parameter count");
  }
  store.assign(store.flatten() - learning_rate * masked_gradient(gradient, state, mode, scaling));
}

}  // namespace roast
