#include "roast/metrics.hpp"

#include "roast/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace roast {

std::vector<EvalRecord> make_records(const Tensor& probabilities, std::span<const std::size_t> labels, SplitTag tag) {
  if (probabilities.rank() != 2) throw ValidationError("make_records: expected [N, C] probabilities");
  const std::size_t n = probabilities.dim(0), c = probabilities.dim(1);
  if (!labels.empty() && labels.size() != n) throw ValidationError("make_records: label count mismatch");
  std::vector<EvalRecord> out(n);
  for (std::size_t r = 0; r < n; ++r) {
    auto& rec = out[r];
    rec.distribution.assign(probabilities.data().data() + r * c, probabilities.data().data() + (r + 1) * c);
    const double total = std::accumulate(rec.distribution.begin(), rec.distribution.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-9) {
      throw ValidationError("make_records: row " + std::to_string(r) + " sums to " + std::to_string(total));
    }
    if (!labels.empty()) {
      if (labels[r] >= c) throw ValidationError("make_records: label out of range");
      rec.label = labels[r];
    }
    rec.tag = tag;
  }
  return out;
}

std::size_t argmax(std::span<const double> distribution) {
  if (distribution.empty()) throw ValidationError("argmax of an empty distribution");
  std::size_t best = 0;
  for (std::size_t i = 1; i < distribution.size(); ++i) {
    if (distribution[i] > distribution[best]) best = i;
  }
  return best;
}

double max_probability(std::span<const double> distribution) { return distribution[argmax(distribution)]; }

namespace {

bool correct(const EvalRecord& r) {
  if (!r.label) throw ValidationError("metric needs labeled records");
  return argmax(r.distribution) == *r.label;
}

}  // namespace

double accuracy(std::span<const EvalRecord> records) {
  if (records.empty()) throw ValidationError("accuracy: empty input");
  std::size_t hits = 0;
  for (const auto& r : records) hits += correct(r) ? 1 : 0;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(records.size());
}

double expected_calibration_error(std::span<const EvalRecord> records, std::size_t bins) {
  if (records.empty()) throw ValidationError("expected_calibration_error: empty input");
  if (bins == 0) throw ValidationError("expected_calibration_error: need at least one bin");
  std::vector<double> count(bins, 0.0), hits(bins, 0.0), confidence(bins, 0.0);
  for (const auto& r : records) {
    const double conf = max_probability(r.distribution);
    auto b = static_cast<std::ptrdiff_t>(std::ceil(conf * static_cast<double>(bins))) - 1;
    b = std::clamp<std::ptrdiff_t>(b, 0, static_cast<std::ptrdiff_t>(bins) - 1);
    count[b] += 1.0;
    hits[b] += correct(r) ? 1.0 : 0.0;
    confidence[b] += conf;
  }
  const double n = static_cast<double>(records.size());
  double ece = 0.0;
  for (std::size_t b = 0; b < bins; ++b) {
    if (count[b] == 0.0) continue;
    ece += (count[b] / n) * std::abs(hits[b] / count[b] - confidence[b] / count[b]);
  }
  return 100.0 * ece;
}

double auroc_pairwise(std::span<const double> positive, std::span<const double> negative) {
  if (positive.empty() || negative.empty()) throw ValidationError("auroc: both sides need samples");
  double wins = 0.0;
  for (double p : positive) {
    for (double q : negative) wins += p > q ? 1.0 : (p == q ? 0.5 : 0.0);
  }
  return wins / (static_cast<double>(positive.size()) * static_cast<double>(negative.size()));
}

double auroc_ranked(std::span<const double> positive, std::span<const double> negative) {
  if (positive.empty() || negative.empty()) throw ValidationError("auroc: both sides need samples");
  std::vector<std::pair<double, bool>> all;
  all.reserve(positive.size() + negative.size());
  for (double p : positive) all.emplace_back(p, true);
  for (double q : negative) all.emplace_back(q, false);
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].first == all[i].first) ++j;
    const double mid = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) rank_sum += all[k].second ? mid : 0.0;
    i = j;
  }
  const double np = static_cast<double>(positive.size()), nn = static_cast<double>(negative.size());
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double auroc(std::span<const double> positive, std::span<const double> negative) {
  return positive.size() + negative.size() <= kExactAurocLimit ? auroc_pairwise(positive, negative)
                                                               : auroc_ranked(positive, negative);
}

double auroc_msp(std::span<const EvalRecord> in_records, std::span<const EvalRecord> anomaly_records) {
  // Anomaly score 1 - MSP is a decreasing map of MSP, so scoring on -MSP
  // gives the same ordering without the rounding of 1 - x.
  std::vector<double> anomaly, in;
  for (const auto& r : anomaly_records) anomaly.push_back(-max_probability(r.distribution));
  for (const auto& r : in_records) in.push_back(-max_probability(r.distribution));
  return auroc(anomaly, in);
}

bool RelativeImprovement::any_excluded() const {
  return std::any_of(excluded.begin(), excluded.end(), [](bool b) { return b; });
}

RelativeImprovement relative_improvement(const MetricVector& method, const MetricVector& base) {
  RelativeImprovement out;
  const auto m = method.values(), b = base.values();
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < MetricVector::kCount; ++i) {
    const double gap = MetricVector::kBest[i] - b[i];
    if (gap == 0.0) {
      out.excluded[i] = true;
      continue;
    }
    out.terms[i] = (m[i] - b[i]) / gap;
    sum += out.terms[i];
    ++used;
  }
  out.delta_avg = used == 0 ? 0.0 : 100.0 * sum / static_cast<double>(used);
  return out;
}

std::vector<double> average_rank(std::span<const MetricVector> methods) {
  const std::size_t n = methods.size();
  if (n < 2) throw ValidationError("average_rank: need at least two methods");
  std::vector<double> total(n, 0.0);
  for (std::size_t k = 0; k < MetricVector::kCount; ++k) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = methods[i].values()[k];
      v[i] = MetricVector::kHigherIsBetter[k] ? -x : x;  // smaller is better
    }
    for (std::size_t i = 0; i < n; ++i) {
      double better = 0.0, tied = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (v[j] < v[i]) better += 1.0;
        else if (v[j] == v[i]) tied += 1.0;
      }
      total[i] += better + (tied + 1.0) / 2.0;
    }
  }
  for (auto& t : total) t /= static_cast<double>(MetricVector::kCount);
  return total;
}

MetricVector combine_scores(std::span<const SplitScore> scores) {
  auto mean_of = [&](auto pick, const char* what) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& s : scores) {
      if (auto v = pick(s)) {
        sum += *v;
        ++n;
      }
    }
    if (n == 0) throw ValidationError(std::string("combine_scores: no split provides ") + what);
    return sum / static_cast<double>(n);
  };
  auto acc_of = [](SplitTag tag) {
    return [tag](const SplitScore& s) { return s.tag == tag ? s.accuracy : std::nullopt; };
  };
  MetricVector out;
  out.acc_in = mean_of(acc_of(SplitTag::In), "in-distribution accuracy");
  out.acc_shift = mean_of(acc_of(SplitTag::Shift), "shift accuracy");
  out.acc_adv = mean_of(acc_of(SplitTag::Adv), "adversarial accuracy");
  out.ece = mean_of([](const SplitScore& s) { return s.ece; }, "ECE");
  out.auroc = mean_of([](const SplitScore& s) { return s.auroc; }, "AUROC");
  return out;
}

}  // namespace roast
