#include "roast/experiment.hpp"

#include "roast/error.hpp"
#include "roast/io.hpp"
#include "roast/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

namespace roast {

const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names{"vanilla",  "adv-only", "thre-only",  "adv-thre",
                                              "adv-scal", "roast",    "roast-min", "roast-rand"};
  return names;
}

bool is_method(std::string_view name) {
  const auto& n = method_names();
  return std::find(n.begin(), n.end(), name) != n.end();
}

RoastConfig configure_method(std::string_view name, const RoastConfig& base) {
  RoastConfig c = base;
  c.strategy = Strategy::Max;
  if (name == "vanilla") {
    c.adversarial = false;
    c.mask_mode = MaskMode::Off;
  } else if (name == "adv-only") {
    c.adversarial = true;
    c.mask_mode = MaskMode::Off;
  } else if (name == "thre-only") {
    c.adversarial = false;
    c.mask_mode = MaskMode::HardThreshold;
  } else if (name == "adv-thre") {
    c.adversarial = true;
    c.mask_mode = MaskMode::HardThreshold;
  } else if (name == "adv-scal") {
    c.adversarial = true;
    c.mask_mode = MaskMode::SoftScale;
  } else if (name == "roast" || name == "roast-min" || name == "roast-rand") {
    c.adversarial = true;
    c.mask_mode = MaskMode::Sample;
    if (name == "roast-min") c.strategy = Strategy::Min;
    if (name == "roast-rand") c.strategy = Strategy::Rand;
  } else {
    throw ValidationError("unknown method '" + std::string(name) + "'");
  }
  return c;
}

void ExperimentConfig::validate() const {
  model.validate();
  roast.validate();
  data.validate();
  if (seeds.empty()) throw ValidationError("experiment: need at least one seed");
  if (methods.empty()) throw ValidationError("experiment: need at least one method");
  for (const auto& m : methods) {
    if (!is_method(m)) throw ValidationError("experiment: unknown method '" + m + "'");
  }
  if (std::find(methods.begin(), methods.end(), "vanilla") == methods.end()) {
    throw ValidationError("experiment: the vanilla method is required as the baseline");
  }
  auto sorted = methods;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ValidationError("experiment: duplicate method");
  }
  auto s = seeds;
  std::sort(s.begin(), s.end());
  if (std::adjacent_find(s.begin(), s.end()) != s.end()) throw ValidationError("experiment: duplicate seed");
  if (model.vocab_size != data.vocab_size) {
    throw ValidationError("experiment: model vocab_size must equal the data vocab_size");
  }
  if (model.num_classes != data.num_classes) {
    throw ValidationError("experiment: model num_classes must equal the data num_classes");
  }
  if (!(attack_step > 0.0)) throw ValidationError("experiment: attack_step must be positive");
}

std::vector<SplitScore> evaluate_model(const Model& model, const DatasetBundle& bundle) {
  std::vector<EvalRecord> in_records;
  std::vector<SplitScore> out;
  std::vector<std::vector<EvalRecord>> anomaly_records;
  for (const auto& split : bundle.evals) {
    const Tensor proba = predict_split(model, split);
    auto records = make_records(proba, split.labels, split.tag);
    SplitScore s;
    s.name = split.name;
    s.tag = split.tag;
    s.examples = split.size();
    if (split.tag == SplitTag::Anomaly) {
      anomaly_records.push_back(std::move(records));
    } else {
      s.accuracy = accuracy(records);
      s.ece = expected_calibration_error(records);
      if (split.tag == SplitTag::In) in_records.insert(in_records.end(), records.begin(), records.end());
    }
    out.push_back(std::move(s));
  }
  std::size_t a = 0;
  for (auto& s : out) {
    if (s.tag != SplitTag::Anomaly) continue;
    if (in_records.empty()) throw ValidationError("evaluation: AUROC needs an in-distribution split");
    s.auroc = auroc_msp(in_records, anomaly_records[a++]);
  }
  return out;
}

PreparedData prepare_data(const ExperimentConfig& config) {
  config.validate();
  DatasetBundle bundle = generate_synthetic_suite(config.data_seed, config.data);
  for (const auto& src : config.extra_splits) {
    bundle.evals.push_back(ingest_jsonl_dataset(src.path, src.tag, src.name, bundle.vocab_size));
  }
  Model init = Model::initialize(config.model, config.init_seed);

  RoastConfig ref_config = configure_method("vanilla", config.roast);
  ref_config.seed = config.reference_seed;
  const TrainResult reference = train(init, bundle.train, ref_config);
  // attack every labeled in-distribution split
  std::vector<Split> adv;
  for (const auto& s : bundle.evals) {
    if (s.tag == SplitTag::In) {
      Split a = build_transfer_adversarial_set(s, reference, config.attack_step, config.attack_scope);
      a.name = s.name == "in" ? "adv" : "adv-" + s.name;
      adv.push_back(std::move(a));
    }
  }
  for (auto& a : adv) bundle.evals.push_back(std::move(a));
  bundle.validate();
  const MetricVector ref = combine_scores(evaluate_model(reference.model, bundle));
  return {std::move(bundle), std::move(init), ref};
}

std::vector<RunResult> run_experiment(const ExperimentConfig& config, const PreparedData& data) {
  config.validate();
  const std::size_t n_seeds = config.seeds.size();
  std::vector<RunResult> results(config.methods.size() * n_seeds);
  parallel_for(results.size(), config.workers, [&](std::size_t job) {
    RunResult& r = results[job];
    r.method = config.methods[job / n_seeds];
    r.seed = config.seeds[job % n_seeds];
    r.log_path = "logs/" + r.method + "-seed" + std::to_string(r.seed) + ".jsonl";
    RoastConfig c = configure_method(r.method, config.roast);
    c.seed = r.seed;
    const auto start = std::chrono::steady_clock::now();
    try {
      TrainResult trained = train(data.init, data.bundle.train, c);
      r.splits = evaluate_model(trained.model, data.bundle);
      r.metrics = combine_scores(r.splits);
      r.log = std::move(trained.log);
    } catch (const DivergenceError& e) {
      r.diverged = true;
      r.error = e.what();
    }
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  });
  return results;
}

std::vector<RunResult> run_experiment(const ExperimentConfig& config) {
  return run_experiment(config, prepare_data(config));
}

std::vector<MethodSummary> summarize(const std::vector<RunResult>& results) {
  if (results.empty()) throw ValidationError("summarize: no results");
  std::vector<std::string> order;
  for (const auto& r : results) {
    if (std::find(order.begin(), order.end(), r.method) == order.end()) order.push_back(r.method);
  }
  std::map<std::uint64_t, const RunResult*> base;
  for (const auto& r : results) {
    if (r.method == "vanilla" && !r.diverged) base[r.seed] = &r;
  }

  std::vector<MethodSummary> out;
  for (const auto& name : order) {
    MethodSummary s;
    s.method = name;
    std::vector<std::array<double, MetricVector::kCount>> values;
    std::vector<double> deltas;
    for (const auto& r : results) {
      if (r.method != name) continue;
      if (r.diverged) {
        ++s.diverged;
        continue;
      }
      values.push_back(r.metrics.values());
      auto it = base.find(r.seed);
      if (it != base.end()) {
        const auto imp = relative_improvement(r.metrics, it->second->metrics);
        deltas.push_back(imp.delta_avg);
        for (std::size_t k = 0; k < MetricVector::kCount; ++k) s.excluded[k] = s.excluded[k] || imp.excluded[k];
      }
    }
    s.runs = values.size();
    auto mean_std = [](const std::vector<double>& v) -> std::pair<double, double> {
      if (v.empty()) return {NAN, NAN};
      double m = 0.0;
      for (double x : v) m += x;
      m /= static_cast<double>(v.size());
      if (v.size() < 2) return {m, 0.0};
      double ss = 0.0;
      for (double x : v) ss += (x - m) * (x - m);
      return {m, std::sqrt(ss / static_cast<double>(v.size() - 1))};
    };
    std::array<double, MetricVector::kCount> mean{}, sd{};
    for (std::size_t k = 0; k < MetricVector::kCount; ++k) {
      std::vector<double> col;
      for (const auto& v : values) col.push_back(v[k]);
      std::tie(mean[k], sd[k]) = mean_std(col);
    }
    s.mean = MetricVector::from_values(mean);
    s.stddev = MetricVector::from_values(sd);
    std::tie(s.delta_avg, s.delta_avg_std) = mean_std(deltas);
    out.push_back(s);
  }

  std::vector<MetricVector> means;
  std::vector<std::size_t> ranked;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].runs > 0) {
      means.push_back(out[i].mean);
      ranked.push_back(i);
    } else {
      out[i].rank_avg = NAN;
    }
  }
  if (means.size() >= 2) {
    const auto ranks = average_rank(means);
    for (std::size_t i = 0; i < ranked.size(); ++i) out[ranked[i]].rank_avg = ranks[i];
  }
  return out;
}

}  // namespace roast
