#include "roast/synthetic.hpp"

#include "roast/error.hpp"

#include <cmath>
#include <numeric>

namespace roast {

const Split& DatasetBundle::find(std::string_view name) const {
  if (train.name == name) return train;
  for (const auto& s : evals) {
    if (s.name == name) return s;
  }
  throw ValidationError("no split named '" + std::string(name) + "'");
}

void DatasetBundle::validate() const {
  if (vocab_size == 0 || num_classes < 2) throw ValidationError("bundle: bad vocabulary or class count");
  train.validate(vocab_size);
  for (const auto& s : evals) {
    s.validate(vocab_size);
    for (auto y : s.labels) {
      if (y >= num_classes) throw ValidationError("split '" + s.name + "': label out of range");
    }
  }
  for (auto y : train.labels) {
    if (y >= num_classes) throw ValidationError("split '" + train.name + "': label out of range");
  }
}

void SyntheticSpec::validate() const {
  if (num_classes < 2) throw ValidationError("synthetic: need at least 2 classes");
  if (seq_len == 0 || shift_seq_len == 0) throw ValidationError("synthetic: sequence lengths must be positive");
  if (train_size == 0 || eval_size == 0) throw ValidationError("synthetic: split sizes must be positive");
  if (anomaly_start >= vocab_size) throw ValidationError("synthetic: anomaly region is empty");
  if (num_classes * signal_tokens >= anomaly_start) throw ValidationError("synthetic: no room for neutral tokens");
  for (double r : {signal_rate, confuser_rate, shift_signal_rate, label_noise}) {
    if (r < 0.0 || r > 1.0) throw ValidationError("synthetic: rates must lie in [0, 1]");
  }
  if (signal_rate + confuser_rate > 1.0 || shift_signal_rate + confuser_rate > 1.0) {
    throw ValidationError("synthetic: signal and confuser rates exceed 1");
  }
}

namespace {

// Cumulative Zipf weights over a seeded ordering of the neutral ids.
struct Profile {
  std::vector<std::size_t> ids;
  std::vector<double> cdf;

  std::size_t draw(RandomSource& rng) const {
    const double u = rng.uniform();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    return ids[std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), ids.size() - 1)];
  }
};

Profile zipf_profile(std::size_t first, std::size_t last, double exponent, RandomSource& rng) {
  Profile p;
  p.ids.resize(last - first);
  const auto order = rng.permutation(last - first);
  for (std::size_t i = 0; i < order.size(); ++i) p.ids[i] = first + order[i];
  double total = 0.0;
  for (std::size_t r = 0; r < p.ids.size(); ++r) {
    total += std::pow(static_cast<double>(r + 1), -exponent);
    p.cdf.push_back(total);
  }
  for (auto& c : p.cdf) c /= total;
  return p;
}

Split labeled_split(const std::string& name, SplitTag tag, std::size_t rows, std::size_t len, double signal,
                    double noise, const SyntheticSpec& spec, const Profile& profile, RandomSource& rng) {
  Split s;
  s.name = name;
  s.tag = tag;
  s.seq_len = len;
  const std::size_t k = spec.signal_tokens;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t y = rng.below(spec.num_classes);
    for (std::size_t l = 0; l < len; ++l) {
      const double u = rng.uniform();
      if (u < signal) {
        s.tokens.push_back(y * k + rng.below(k));
      } else if (u < signal + spec.confuser_rate) {
        const std::size_t other = (y + 1 + rng.below(spec.num_classes - 1)) % spec.num_classes;
        s.tokens.push_back(other * k + rng.below(k));
      } else {
        s.tokens.push_back(profile.draw(rng));
      }
    }
    std::size_t label = y;
    if (rng.uniform() < noise) label = (y + 1 + rng.below(spec.num_classes - 1)) % spec.num_classes;
    s.labels.push_back(label);
  }
  return s;
}

}  // namespace

DatasetBundle generate_synthetic_suite(std::uint64_t seed, const SyntheticSpec& spec) {
  spec.validate();
  const RandomSource root(seed);
  RandomSource profile_rng = root.split(0);
  const std::size_t neutral_start = spec.num_classes * spec.signal_tokens;
  const Profile base = zipf_profile(neutral_start, spec.anomaly_start, spec.zipf_exponent, profile_rng);
  const Profile shifted = zipf_profile(neutral_start, spec.anomaly_start, spec.shift_zipf_exponent, profile_rng);

  DatasetBundle b;
  b.vocab_size = spec.vocab_size;
  b.seq_len = spec.seq_len;
  b.num_classes = spec.num_classes;

  RandomSource train_rng = root.split(1);
  b.train = labeled_split("train", SplitTag::Train, spec.train_size, spec.seq_len, spec.signal_rate, spec.label_noise,
                          spec, base, train_rng);
  RandomSource in_rng = root.split(2);
  b.evals.push_back(
      labeled_split("in", SplitTag::In, spec.eval_size, spec.seq_len, spec.signal_rate, 0.0, spec, base, in_rng));
  RandomSource shift_rng = root.split(3);
  b.evals.push_back(labeled_split("shift", SplitTag::Shift, spec.eval_size, spec.shift_seq_len,
                                  spec.shift_signal_rate, 0.0, spec, shifted, shift_rng));

  RandomSource anomaly_rng = root.split(4);
  Split anomaly;
  anomaly.name = "anomaly";
  anomaly.tag = SplitTag::Anomaly;
  anomaly.seq_len = spec.seq_len;
  const std::size_t region = spec.vocab_size - spec.anomaly_start;
  for (std::size_t i = 0; i < spec.eval_size * spec.seq_len; ++i) {
    anomaly.tokens.push_back(spec.anomaly_start + anomaly_rng.below(region));
  }
  b.evals.push_back(std::move(anomaly));
  b.validate();
  return b;
}

Split build_transfer_adversarial_set(const Split& source, const TrainResult& reference, double attack_step,
                                     NormScope scope) {
  if (reference.log.step_losses.empty()) throw ValidationError("transfer attack: reference model is untrained");
  if (!(attack_step >= 0.0)) throw ValidationError("transfer attack: step must be >= 0");
  if (!source.labeled()) throw ValidationError("transfer attack: source split needs labels");
  Split adv = source;
  adv.name = "adv";
  adv.tag = SplitTag::Adv;
  const std::size_t d = reference.model.spec().embed_dim;
  Tensor delta(Shape{source.size(), source.seq_len, d});
  const std::size_t chunk = 128;
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < source.size(); start += chunk) {
    rows.clear();
    for (std::size_t r = start; r < std::min(source.size(), start + chunk); ++r) rows.push_back(r);
    // CE is a batch mean, so per-row gradients only differ by a constant
    // factor, which the per-row normalisation removes.
    const Tensor g = input_gradient(reference.model, source.batch(rows));
    const Tensor step = perturbation(g, attack_step, scope);
    delta.data().segment(static_cast<Eigen::Index>(start * source.seq_len * d), step.data().size()) = step.data();
  }
  adv.perturbation = std::move(delta);
  return adv;
}

}  // namespace roast
