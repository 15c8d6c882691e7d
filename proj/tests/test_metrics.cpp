#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "roast/error.hpp"
#include "roast/metrics.hpp"
#include "roast/random.hpp"

#include <cmath>

using namespace roast;

namespace {

EvalRecord binary(double p0, std::optional<std::size_t> label, SplitTag tag = SplitTag::In) {
  return {{p0, 1.0 - p0}, label, tag};
}

// confidence c on the predicted class (class 0), correct when label is 0
EvalRecord confident(double c, bool right) { return binary(c, right ? 0 : 1); }

// Bins by explicit interval tests lo < c <= hi.
double ece_oracle(const std::vector<double>& conf, const std::vector<int>& right) {
  double ece = 0.0;
  const double n = static_cast<double>(conf.size());
  for (int b = 0; b < 10; ++b) {
    const double lo = b / 10.0, hi = (b + 1) / 10.0;
    double cnt = 0, hit = 0, sum = 0;
    for (std::size_t i = 0; i < conf.size(); ++i) {
      if (conf[i] > lo && conf[i] <= hi) {
        cnt += 1;
        hit += right[i];
        sum += conf[i];
      }
    }
    if (cnt > 0) ece += (cnt / n) * std::abs(hit / cnt - sum / cnt);
  }
  return 100.0 * ece;
}

double ece_of(const std::vector<double>& conf, const std::vector<int>& right) {
  std::vector<EvalRecord> recs;
  for (std::size_t i = 0; i < conf.size(); ++i) recs.push_back(confident(conf[i], right[i] != 0));
  return expected_calibration_error(recs);
}

// Counts every (anomaly, in) pair: anomaly wins when its MSP is lower.
double auroc_oracle(const std::vector<double>& msp_in, const std::vector<double>& msp_anomaly) {
  long twice_wins = 0;
  for (double a : msp_anomaly) {
    for (double i : msp_in) twice_wins += a < i ? 2 : (a == i ? 1 : 0);
  }
  return static_cast<double>(twice_wins) / 2.0 / static_cast<double>(msp_in.size() * msp_anomaly.size());
}

std::vector<EvalRecord> msp_records(const std::vector<double>& msp, SplitTag tag) {
  std::vector<EvalRecord> out;
  // ten classes so any MSP above 0.1 is reachable
  for (double m : msp) {
    EvalRecord r{std::vector<double>(10, (1.0 - m) / 9.0), std::nullopt, tag};
    r.distribution[0] = m;
    out.push_back(r);
  }
  return out;
}

const MetricVector kTable1Vanilla{96.29, 91.79, 66.30, 7.11, 0.8672};
const MetricVector kTable1Roast{96.87, 92.38, 72.57, 5.45, 0.9037};
const MetricVector kTable2Vanilla{89.97, 64.31, 48.60, 12.64, 0.9209};
const MetricVector kTable2Roast{90.64, 63.95, 51.33, 11.02, 0.9325};

}  // namespace

TEST_CASE("accuracy") {
  std::vector<EvalRecord> all{binary(0.9, 0), binary(0.2, 1), binary(0.7, 0), binary(0.1, 1)};
  CHECK(accuracy(all) == 100.0);
  std::vector<EvalRecord> quarter{binary(0.9, 0), binary(0.9, 1), binary(0.2, 0), binary(0.8, 1)};
  CHECK(accuracy(quarter) == 25.0);
  std::vector<EvalRecord> tie{binary(0.5, 0)};
  CHECK(accuracy(tie) == 100.0);
  CHECK(argmax(std::vector<double>{0.3, 0.35, 0.35}) == 1);
  CHECK_THROWS_AS(accuracy(std::vector<EvalRecord>{}), ValidationError);
  CHECK_THROWS_AS(accuracy(std::vector<EvalRecord>{binary(0.5, std::nullopt)}), ValidationError);
}

TEST_CASE("expected_calibration_error worked examples") {
  const std::vector<double> c1{1.0, 1.0, 1.0};
  const std::vector<int> r1{1, 1, 1};
  const std::vector<double> c2{0.95, 0.95, 0.65, 0.65};
  const std::vector<int> r2{1, 1, 1, 0};
  const std::vector<double> c3{0.7};
  const std::vector<int> r3{0};

  CHECK(ece_of(c1, r1) == ece_oracle(c1, r1));
  CHECK(ece_of(c2, r2) == ece_oracle(c2, r2));
  CHECK(ece_of(c3, r3) == ece_oracle(c3, r3));
  CHECK(ece_of(c1, r1) == 0.0);
  CHECK(ece_of(c2, r2) == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(ece_of(c3, r3) == doctest::Approx(70.0).epsilon(1e-12));
  CHECK_THROWS_AS(expected_calibration_error(std::vector<EvalRecord>{}), ValidationError);
}

TEST_CASE("expected_calibration_error properties") {
  RandomSource rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> conf;
    std::vector<int> right;
    for (int i = 0; i < 50; ++i) {
      // keep confidences off the bin edges so the oracle's interval tests agree
      conf.push_back(0.5 + 0.49 * rng.uniform() + 1e-7);
      right.push_back(rng.bernoulli(conf.back()) ? 1 : 0);
    }
    const double e = ece_of(conf, right);
    CHECK(e == doctest::Approx(ece_oracle(conf, right)).epsilon(1e-12));
    CHECK(e >= 0.0);
    CHECK(e <= 100.0);
    auto perm = rng.permutation(conf.size());
    std::vector<double> pc;
    std::vector<int> pr;
    for (auto i : perm) {
      pc.push_back(conf[i]);
      pr.push_back(right[i]);
    }
    CHECK(ece_of(pc, pr) == doctest::Approx(e).epsilon(1e-12));
  }
}

TEST_CASE("auroc_msp") {
  CHECK(auroc_msp(msp_records({0.9, 0.8}, SplitTag::In), msp_records({0.6, 0.55}, SplitTag::Anomaly)) == 1.0);
  CHECK(auroc_msp(msp_records({0.7, 0.7}, SplitTag::In), msp_records({0.7}, SplitTag::Anomaly)) == 0.5);
  CHECK(auroc_msp(msp_records({0.9, 0.6}, SplitTag::In), msp_records({0.7, 0.2}, SplitTag::Anomaly)) == 0.75);
  CHECK_THROWS_AS(auroc_msp({}, msp_records({0.7}, SplitTag::Anomaly)), ValidationError);
}

TEST_CASE("auroc matches the pairwise oracle on random instances") {
  RandomSource rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n_in = 1 + rng.below(120), n_an = 1 + rng.below(80);
    std::vector<double> in, an;
    // quantised scores force ties
    for (std::size_t i = 0; i < n_in; ++i) in.push_back(0.5 + std::round(rng.uniform() * 20) / 40.0);
    for (std::size_t i = 0; i < n_an; ++i) an.push_back(0.5 + std::round(rng.uniform(0.0, 0.8) * 20) / 40.0);
    const double expect = auroc_oracle(in, an);
    const auto rin = msp_records(in, SplitTag::In);
    const auto ran = msp_records(an, SplitTag::Anomaly);
    CHECK(auroc_msp(rin, ran) == expect);
    // complement symmetry
    CHECK(auroc_msp(rin, ran) + auroc_msp(ran, rin) == doctest::Approx(1.0).epsilon(1e-15));

    std::vector<double> pos, neg;
    for (double a : an) pos.push_back(-a);
    for (double i : in) neg.push_back(-i);
    CHECK(auroc_ranked(pos, neg) == doctest::Approx(expect).epsilon(1e-12));
    // strictly monotone transforms leave AUROC unchanged
    std::vector<double> tp, tn;
    for (double v : pos) tp.push_back(std::exp(3.0 * v) + v * v * v);
    for (double v : neg) tn.push_back(std::exp(3.0 * v) + v * v * v);
    CHECK(auroc(tp, tn) == expect);
  }
}

TEST_CASE("auroc large inputs use ranks and agree with pairwise") {
  RandomSource rng(3);
  std::vector<double> pos(6000), neg(5000);
  for (auto& v : pos) v = std::round(rng.normal(0.5, 1.0) * 100) / 100;
  for (auto& v : neg) v = std::round(rng.normal(0.0, 1.0) * 100) / 100;
  CHECK(auroc(pos, neg) == doctest::Approx(auroc_pairwise(pos, neg)).epsilon(1e-12));
}

TEST_CASE("relative_improvement") {
  CHECK(relative_improvement(kTable1Vanilla, kTable1Vanilla).delta_avg == 0.0);
  const auto t1 = relative_improvement(kTable1Roast, kTable1Vanilla);
  CHECK(std::abs(t1.delta_avg - 18.39) <= 0.25);
  CHECK(t1.terms[3] == doctest::Approx(0.2335).epsilon(1e-3));
  CHECK(t1.terms[3] == doctest::Approx((5.45 - 7.11) / (0.0 - 7.11)).epsilon(1e-15));
  CHECK_FALSE(t1.any_excluded());
  const auto t2 = relative_improvement(kTable2Roast, kTable2Vanilla);
  CHECK(std::abs(t2.delta_avg - 7.63) <= 0.25);

  SUBCASE("degenerate base is excluded, not divided by") {
    MetricVector base = kTable1Vanilla;
    base.acc_in = 100.0;
    base.ece = 0.0;
    const auto r = relative_improvement(kTable1Roast, base);
    CHECK(r.excluded[0]);
    CHECK(r.excluded[3]);
    CHECK(r.any_excluded());
    CHECK(std::isfinite(r.delta_avg));
    CHECK(r.delta_avg == doctest::Approx(100.0 * (r.terms[1] + r.terms[2] + r.terms[4]) / 3.0).epsilon(1e-14));
  }
  SUBCASE("linear in each metric") {
    for (std::size_t k = 0; k < 5; ++k) {
      auto v = kTable1Roast.values();
      const double base_k = kTable1Vanilla.values()[k];
      const double step = k == 4 ? 0.01 : 1.0;
      const double r0 = relative_improvement(MetricVector::from_values(v), kTable1Vanilla).delta_avg;
      v[k] += step;
      const double r1 = relative_improvement(MetricVector::from_values(v), kTable1Vanilla).delta_avg;
      const double slope = 100.0 / (MetricVector::kBest[k] - base_k) / 5.0;
      CHECK((r1 - r0) / step == doctest::Approx(slope).epsilon(1e-9));
    }
  }
}

TEST_CASE("average_rank fixtures") {
  SUBCASE("dominating method") {
    std::vector<MetricVector> m{{90, 80, 70, 5, 0.9}, {85, 75, 60, 8, 0.8}, {80, 70, 50, 9, 0.7}};
    const auto r = average_rank(m);
    CHECK(r == std::vector<double>{1.0, 2.0, 3.0});
  }
  SUBCASE("identical methods tie") {
    std::vector<MetricVector> m{{90, 80, 70, 5, 0.9}, {90, 80, 70, 5, 0.9}};
    CHECK(average_rank(m) == std::vector<double>{1.5, 1.5});
  }
  SUBCASE("mixed ranks by hand") {
    // acc_in: A1 B2 C3; acc_shift: C1 A2 B3; acc_adv: B1 A2.5 C2.5... see below
    std::vector<MetricVector> m{{90, 70, 60, 5, 0.8}, {85, 60, 65, 3, 0.8}, {80, 75, 60, 7, 0.9}};
    // acc_in    A=1 B=2 C=3
    // acc_shift C=1 A=2 B=3
    // acc_adv   B=1 A=2.5 C=2.5
    // ece       B=1 A=2 C=3
    // auroc     C=1 A=2.5 B=2.5
    const auto r = average_rank(m);
    CHECK(r[0] == doctest::Approx((1 + 2 + 2.5 + 2 + 2.5) / 5.0).epsilon(1e-15));
    CHECK(r[1] == doctest::Approx((2 + 3 + 1 + 1 + 2.5) / 5.0).epsilon(1e-15));
    CHECK(r[2] == doctest::Approx((3 + 1 + 2.5 + 3 + 1) / 5.0).epsilon(1e-15));
    CHECK(r[0] + r[1] + r[2] == doctest::Approx(6.0).epsilon(1e-15));
  }
  CHECK_THROWS_AS(average_rank(std::vector<MetricVector>{{}}), ValidationError);
}

TEST_CASE("average_rank properties") {
  RandomSource rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + rng.below(6);
    std::vector<MetricVector> m(n);
    for (auto& v : m) v = {std::round(rng.uniform(80, 90)), std::round(rng.uniform(60, 70)), rng.uniform(), 5.0, 0.5};
    const auto r = average_rank(m);
    double sum = 0.0;
    for (double x : r) {
      CHECK(x >= 1.0);
      CHECK(x <= static_cast<double>(n));
      sum += x;
    }
    CHECK(sum == doctest::Approx(static_cast<double>(n * (n + 1)) / 2.0).epsilon(1e-12));
  }
}

TEST_CASE("make_records and combine_scores") {
  const Tensor p(Shape{2, 2}, {0.25, 0.75, 0.5, 0.5});
  const std::vector<std::size_t> labels{1, 0};
  const auto recs = make_records(p, labels, SplitTag::Shift);
  CHECK(recs.size() == 2);
  CHECK(accuracy(recs) == 100.0);
  CHECK_THROWS_AS(make_records(Tensor(Shape{1, 2}, {0.5, 0.6}), {}, SplitTag::In), ValidationError);

  std::vector<SplitScore> s{
      {"in", SplitTag::In, 10, 90.0, 4.0, std::nullopt},
      {"shift-a", SplitTag::Shift, 10, 70.0, 8.0, std::nullopt},
      {"shift-b", SplitTag::Shift, 30, 80.0, 10.0, std::nullopt},
      {"adv", SplitTag::Adv, 10, 50.0, 12.0, std::nullopt},
      {"anom-a", SplitTag::Anomaly, 10, std::nullopt, std::nullopt, 0.8},
      {"anom-b", SplitTag::Anomaly, 10, std::nullopt, std::nullopt, 0.6},
  };
  const MetricVector v = combine_scores(s);
  CHECK(v.acc_in == 90.0);
  CHECK(v.acc_shift == 75.0);
  CHECK(v.acc_adv == 50.0);
  CHECK(v.ece == 8.5);
  CHECK(v.auroc == doctest::Approx(0.7).epsilon(1e-15));
  s.pop_back();
  s.pop_back();
  CHECK_THROWS_AS(combine_scores(s), ValidationError);
}
