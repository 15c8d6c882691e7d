#include "roast/io.hpp"

#include "roast/error.hpp"
#include "roast/experiment.hpp"

#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace roast {

namespace fs = std::filesystem;

namespace {

std::string where(const fs::path& path, std::size_t line) { return path.string() + ":" + std::to_string(line) + ": "; }

void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& context) {
  if (!j.is_object()) throw ValidationError(context + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.contains(it.key())) throw ValidationError(context + ": unknown key '" + it.key() + "'");
  }
}

template <typename T>
void read_field(const Json& j, const char* key, T& out, const std::string& context) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(context + "." + key + ": " + e.what());
  }
}

}  // namespace

Json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

Split ingest_jsonl_dataset(const fs::path& path, SplitTag tag, std::string name, std::size_t vocab_size) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  Split s;
  s.name = std::move(name);
  s.tag = tag;
  std::string line;
  std::size_t number = 0;
  bool warned = false;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      throw ValidationError(where(path, number) + "malformed JSON");
    }
    if (!j.is_object() || !j.contains("tokens") || !j["tokens"].is_array()) {
      throw ValidationError(where(path, number) + "expected an object with a 'tokens' array");
    }
    std::vector<std::size_t> tokens;
    for (const auto& t : j["tokens"]) {
      if (!t.is_number_integer() || t.get<long long>() < 0) {
        throw ValidationError(where(path, number) + "token ids must be non-negative integers");
      }
      const auto id = t.get<std::size_t>();
      if (id >= vocab_size) {
        throw ValidationError(where(path, number) + "token id " + std::to_string(id) + " >= vocabulary size " +
                              std::to_string(vocab_size));
      }
      tokens.push_back(id);
    }
    if (tokens.empty()) throw ValidationError(where(path, number) + "empty token list");
    if (s.seq_len == 0) s.seq_len = tokens.size();
    if (tokens.size() != s.seq_len) {
      throw ValidationError(where(path, number) + "sequence length " + std::to_string(tokens.size()) +
                            " differs from " + std::to_string(s.seq_len));
    }
    const bool has_label = j.contains("label") && !j["label"].is_null();
    if (tag == SplitTag::Anomaly) {
      if (has_label && !warned) {
        std::cerr << "warning: " << path.string() << ": labels on an anomaly split are ignored\n";
        warned = true;
      }
    } else {
      if (!has_label) throw ValidationError(where(path, number) + "missing label");
      if (!j["label"].is_number_integer() || j["label"].get<long long>() < 0) {
        throw ValidationError(where(path, number) + "label must be a non-negative integer");
      }
      s.labels.push_back(j["label"].get<std::size_t>());
    }
    s.tokens.insert(s.tokens.end(), tokens.begin(), tokens.end());
  }
  if (s.tokens.empty()) throw ValidationError(path.string() + ": empty split");
  s.validate(vocab_size);
  return s;
}

void export_jsonl_dataset(const Split& split, const fs::path& path) {
  if (split.perturbation) throw ValidationError("export: splits with stored perturbations cannot be exported");
  std::ostringstream out;
  for (std::size_t r = 0; r < split.size(); ++r) {
    Json j;
    j["tokens"] = std::vector<std::size_t>(split.tokens.begin() + static_cast<std::ptrdiff_t>(r * split.seq_len),
                                           split.tokens.begin() + static_cast<std::ptrdiff_t>((r + 1) * split.seq_len));
    j["label"] = split.labeled() ? Json(split.labels[r]) : Json(nullptr);
    out << j.dump() << '\n';
  }
  write_text_file(path, out.str());
}

Json to_json(const ModelSpec& spec) {
  Json j;
  j["kind"] = std::string(to_string(spec.kind));
  j["vocab_size"] = spec.vocab_size;
  j["embed_dim"] = spec.embed_dim;
  j["hidden_dims"] = spec.hidden_dims;
  j["num_classes"] = spec.num_classes;
  j["num_blocks"] = spec.num_blocks;
  j["ffn_dim"] = spec.ffn_dim;
  return j;
}

ModelSpec model_spec_from_json(const Json& j, ModelSpec s) {
  const std::string ctx = "model";
  check_keys(j, {"kind", "vocab_size", "embed_dim", "hidden_dims", "num_classes", "num_blocks", "ffn_dim"}, ctx);
  std::string kind(to_string(s.kind));
  read_field(j, "kind", kind, ctx);
  s.kind = parse_model_kind(kind);
  read_field(j, "vocab_size", s.vocab_size, ctx);
  read_field(j, "embed_dim", s.embed_dim, ctx);
  read_field(j, "hidden_dims", s.hidden_dims, ctx);
  read_field(j, "num_classes", s.num_classes, ctx);
  read_field(j, "num_blocks", s.num_blocks, ctx);
  read_field(j, "ffn_dim", s.ffn_dim, ctx);
  s.validate();
  return s;
}

Json checkpoint_json(const Model& model, std::uint64_t seed) {
  Json j;
  j["spec"] = to_json(model.spec());
  j["seed"] = seed;
  Json params = Json::object();
  const auto& store = model.parameters();
  for (std::size_t i = 0; i < store.tensor_count(); ++i) {
    const Tensor& t = store.tensor(i);
    Json p;
    p["shape"] = t.shape();
    p["data"] = std::vector<double>(t.data().data(), t.data().data() + t.size());
    params[store.name(i)] = std::move(p);
  }
  j["parameters"] = std::move(params);
  return j;
}

void save_checkpoint(const Model& model, std::uint64_t seed, const fs::path& path) {
  write_text_file(path, checkpoint_json(model, seed).dump() + "\n");
}

Checkpoint checkpoint_from_json(const Json& j) {
  check_keys(j, {"spec", "seed", "parameters"}, "checkpoint");
  if (!j.contains("spec") || !j.contains("parameters")) throw ValidationError("checkpoint: missing spec or parameters");
  const ModelSpec spec = model_spec_from_json(j["spec"]);
  Model model = Model::initialize(spec, 0);
  auto& store = model.parameters();
  const Json& params = j["parameters"];
  if (!params.is_object() || params.size() != store.tensor_count()) {
    throw ValidationError("checkpoint: expected " + std::to_string(store.tensor_count()) + " parameter tensors");
  }
  for (std::size_t i = 0; i < store.tensor_count(); ++i) {
    const std::string& name = store.name(i);
    if (!params.contains(name)) throw ValidationError("checkpoint: missing parameter '" + name + "'");
    try {
      const auto shape = params[name].at("shape").get<Shape>();
      const auto data = params[name].at("data").get<std::vector<double>>();
      if (shape != store.tensor(i).shape() || data.size() != shape_size(shape)) {
        throw ValidationError("checkpoint: parameter '" + name + "' has shape " + shape_string(shape) +
                              ", expected " + shape_string(store.tensor(i).shape()));
      }
      store.tensor(i).data() = Eigen::Map<const Eigen::VectorXd>(data.data(), static_cast<Eigen::Index>(data.size()));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("checkpoint: parameter '" + name + "': " + e.what());
    }
  }
  Checkpoint c{std::move(model), 0};
  read_field(j, "seed", c.seed, "checkpoint");
  return c;
}

Checkpoint load_checkpoint(const fs::path& path) { return checkpoint_from_json(read_json_file(path)); }

Json to_json(const ExperimentConfig& c) {
  Json j;
  j["model"] = to_json(c.model);
  const RoastConfig& r = c.roast;
  Json rj;
  rj["adversarial"] = r.adversarial;
  rj["step"] = r.perturb.step;
  rj["consistency"] = r.perturb.consistency;
  rj["norm_scope"] = std::string(to_string(r.perturb.scope));
  rj["alpha"] = r.alpha;
  rj["beta"] = r.beta;
  rj["learning_rate"] = r.learning_rate;
  rj["refresh_period"] = r.refresh_period;
  rj["scaling"] = r.scaling;
  rj["strategy"] = std::string(to_string(r.strategy));
  rj["mask_mode"] = std::string(to_string(r.mask_mode));
  rj["sigmoid_sign"] = std::string(to_string(r.sigmoid_sign));
  rj["epochs"] = r.epochs;
  rj["batch_size"] = r.batch_size;
  rj["seed"] = r.seed;
  j["roast"] = rj;
  const SyntheticSpec& d = c.data;
  Json dj;
  dj["vocab_size"] = d.vocab_size;
  dj["seq_len"] = d.seq_len;
  dj["num_classes"] = d.num_classes;
  dj["train_size"] = d.train_size;
  dj["eval_size"] = d.eval_size;
  dj["anomaly_start"] = d.anomaly_start;
  dj["signal_tokens"] = d.signal_tokens;
  dj["signal_rate"] = d.signal_rate;
  dj["confuser_rate"] = d.confuser_rate;
  dj["label_noise"] = d.label_noise;
  dj["zipf_exponent"] = d.zipf_exponent;
  dj["shift_seq_len"] = d.shift_seq_len;
  dj["shift_signal_rate"] = d.shift_signal_rate;
  dj["shift_zipf_exponent"] = d.shift_zipf_exponent;
  j["data"] = dj;
  Json extra = Json::array();
  for (const auto& s : c.extra_splits) {
    extra.push_back({{"path", s.path}, {"name", s.name}, {"tag", std::string(to_string(s.tag))}});
  }
  j["extra_splits"] = extra;
  j["methods"] = c.methods;
  j["seeds"] = c.seeds;
  j["output_dir"] = c.output_dir;
  j["data_seed"] = c.data_seed;
  j["init_seed"] = c.init_seed;
  j["reference_seed"] = c.reference_seed;
  j["attack_step"] = c.attack_step;
  j["attack_scope"] = std::string(to_string(c.attack_scope));
  j["workers"] = c.workers;
  return j;
}

ExperimentConfig experiment_config_from_json(const Json& j) {
  ExperimentConfig c;
  check_keys(j,
             {"model", "roast", "data", "extra_splits", "methods", "seeds", "output_dir", "data_seed", "init_seed",
              "reference_seed", "attack_step", "attack_scope", "workers"},
             "config");
  if (j.contains("model")) c.model = model_spec_from_json(j["model"], c.model);
  if (j.contains("roast")) {
    const Json& rj = j["roast"];
    const std::string ctx = "roast";
    check_keys(rj,
               {"adversarial", "step", "consistency", "norm_scope", "alpha", "beta", "learning_rate",
                "refresh_period", "scaling", "strategy", "mask_mode", "sigmoid_sign", "epochs", "batch_size", "seed"},
               ctx);
    RoastConfig& r = c.roast;
    read_field(rj, "adversarial", r.adversarial, ctx);
    read_field(rj, "step", r.perturb.step, ctx);
    read_field(rj, "consistency", r.perturb.consistency, ctx);
    std::string scope(to_string(r.perturb.scope)), strategy(to_string(r.strategy)), mode(to_string(r.mask_mode)),
        sign(to_string(r.sigmoid_sign));
    read_field(rj, "norm_scope", scope, ctx);
    read_field(rj, "strategy", strategy, ctx);
    read_field(rj, "mask_mode", mode, ctx);
    read_field(rj, "sigmoid_sign", sign, ctx);
    r.perturb.scope = parse_norm_scope(scope);
    r.strategy = parse_strategy(strategy);
    r.mask_mode = parse_mask_mode(mode);
    r.sigmoid_sign = parse_sigmoid_sign(sign);
    read_field(rj, "alpha", r.alpha, ctx);
    read_field(rj, "beta", r.beta, ctx);
    read_field(rj, "learning_rate", r.learning_rate, ctx);
    read_field(rj, "refresh_period", r.refresh_period, ctx);
    read_field(rj, "scaling", r.scaling, ctx);
    read_field(rj, "epochs", r.epochs, ctx);
    read_field(rj, "batch_size", r.batch_size, ctx);
    read_field(rj, "seed", r.seed, ctx);
  }
  if (j.contains("data")) {
    const Json& dj = j["data"];
    const std::string ctx = "data";
    check_keys(dj,
               {"vocab_size", "seq_len", "num_classes", "train_size", "eval_size", "anomaly_start", "signal_tokens",
                "signal_rate", "confuser_rate", "label_noise", "zipf_exponent", "shift_seq_len", "shift_signal_rate",
                "shift_zipf_exponent"},
               ctx);
    SyntheticSpec& d = c.data;
    read_field(dj, "vocab_size", d.vocab_size, ctx);
    read_field(dj, "seq_len", d.seq_len, ctx);
    read_field(dj, "num_classes", d.num_classes, ctx);
    read_field(dj, "train_size", d.train_size, ctx);
    read_field(dj, "eval_size", d.eval_size, ctx);
    read_field(dj, "anomaly_start", d.anomaly_start, ctx);
    read_field(dj, "signal_tokens", d.signal_tokens, ctx);
    read_field(dj, "signal_rate", d.signal_rate, ctx);
    read_field(dj, "confuser_rate", d.confuser_rate, ctx);
    read_field(dj, "label_noise", d.label_noise, ctx);
    read_field(dj, "zipf_exponent", d.zipf_exponent, ctx);
    read_field(dj, "shift_seq_len", d.shift_seq_len, ctx);
    read_field(dj, "shift_signal_rate", d.shift_signal_rate, ctx);
    read_field(dj, "shift_zipf_exponent", d.shift_zipf_exponent, ctx);
  }
  if (j.contains("extra_splits")) {
    if (!j["extra_splits"].is_array()) throw ValidationError("config.extra_splits: expected an array");
    for (const auto& e : j["extra_splits"]) {
      check_keys(e, {"path", "name", "tag"}, "config.extra_splits");
      DatasetSource s;
      std::string tag = "in";
      read_field(e, "path", s.path, "extra_splits");
      read_field(e, "name", s.name, "extra_splits");
      read_field(e, "tag", tag, "extra_splits");
      s.tag = parse_split_tag(tag);
      if (s.path.empty() || s.name.empty()) throw ValidationError("config.extra_splits: path and name are required");
      c.extra_splits.push_back(s);
    }
  }
  read_field(j, "methods", c.methods, "config");
  read_field(j, "seeds", c.seeds, "config");
  read_field(j, "output_dir", c.output_dir, "config");
  read_field(j, "data_seed", c.data_seed, "config");
  read_field(j, "init_seed", c.init_seed, "config");
  read_field(j, "reference_seed", c.reference_seed, "config");
  read_field(j, "attack_step", c.attack_step, "config");
  std::string scope(to_string(c.attack_scope));
  read_field(j, "attack_scope", scope, "config");
  c.attack_scope = parse_norm_scope(scope);
  read_field(j, "workers", c.workers, "config");
  return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) { return experiment_config_from_json(read_json_file(path)); }

}  // namespace roast
