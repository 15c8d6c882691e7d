#include "roast/model.hpp"

#include "roast/error.hpp"
#include "roast/losses.hpp"
#include "roast/random.hpp"

#include <cmath>

namespace roast {

void ParameterStore::add(std::string name, Tensor value) {
  if (by_name_.contains(name)) throw ValidationError("duplicate parameter name '" + name + "'");
  by_name_.emplace(name, names_.size());
  names_.push_back(std::move(name));
  offsets_.push_back(total_);
  total_ += value.size();
  tensors_.push_back(std::move(value));
  const auto n = static_cast<Eigen::Index>(total_);
  gradient = Eigen::VectorXd::Zero(n);
  importance = Eigen::VectorXd::Zero(n);
  probability = Eigen::VectorXd::Ones(n);
  mask = Eigen::VectorXd::Ones(n);
}

bool ParameterStore::contains(std::string_view name) const { return by_name_.contains(std::string(name)); }

std::size_t ParameterStore::index_of(std::string_view name) const {
  auto it = by_name_.find(std::string(name));
  if (it == by_name_.end()) throw ValidationError("unknown parameter '" + std::string(name) + "'");
  return it->second;
}

std::size_t ParameterStore::flat_index(std::string_view name, std::size_t offset) const {
  const std::size_t i = index_of(name);
  if (offset >= tensors_[i].size()) {
    throw ValidationError("offset " + std::to_string(offset) + " out of range for '" + std::string(name) + "'");
  }
  return offsets_[i] + offset;
}

std::pair<std::size_t, std::size_t> ParameterStore::locate(std::size_t flat) const {
  if (flat >= total_) throw ValidationError("flat index " + std::to_string(flat) + " out of range");
  auto it = std::upper_bound(offsets_.begin(), offsets_.end(), flat);
  const auto i = static_cast<std::size_t>(std::distance(offsets_.begin(), it)) - 1;
  return {i, flat - offsets_[i]};
}

Eigen::VectorXd ParameterStore::flatten() const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(total_));
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    out.segment(static_cast<Eigen::Index>(offsets_[i]), static_cast<Eigen::Index>(tensors_[i].size())) =
        tensors_[i].data();
  }
  return out;
}

void ParameterStore::assign(const Eigen::VectorXd& flat) {
  if (static_cast<std::size_t>(flat.size()) != total_) {
    throw ValidationError("assign: expected " + std::to_string(total_) + " scalars, got " +
                          std::to_string(flat.size()));
  }
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    tensors_[i].data() =
        flat.segment(static_cast<Eigen::Index>(offsets_[i]), static_cast<Eigen::Index>(tensors_[i].size()));
  }
}

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Linear: return "linear";
    case ModelKind::Mlp: return "mlp";
    case ModelKind::TinyTransformer: return "tiny-transformer";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "linear") return ModelKind::Linear;
  if (name == "mlp") return ModelKind::Mlp;
  if (name == "tiny-transformer") return ModelKind::TinyTransformer;
  throw ValidationError("unknown model kind '" + std::string(name) + "'");
}

void ModelSpec::validate() const {
  if (embed_dim == 0) throw ValidationError("model spec: embed_dim must be positive");
  if (num_classes < 2) throw ValidationError("model spec: need at least 2 classes");
  for (auto h : hidden_dims) {
    if (h == 0) throw ValidationError("model spec: hidden dims must be positive");
  }
  if (kind == ModelKind::TinyTransformer) {
    if (num_blocks == 0 || num_blocks > 2) throw ValidationError("model spec: tiny-transformer needs 1 or 2 blocks");
    if (ffn_dim == 0) throw ValidationError("model spec: ffn_dim must be positive");
  }
}

namespace {

const std::vector<std::size_t>& head_dims(const ModelSpec& spec) {
  static const std::vector<std::size_t> none;
  return spec.kind == ModelKind::Linear ? none : spec.hidden_dims;
}

Tensor uniform_weight(RandomSource& rng, std::size_t fan_in, std::size_t fan_out) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Tensor w(Shape{fan_in, fan_out});
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-bound, bound);
  return w;
}

}  // namespace

Model::Model(ModelSpec spec, ParameterStore params) : spec_(std::move(spec)), params_(std::move(params)) {
  spec_.validate();
}

Model Model::initialize(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  RandomSource rng(seed);
  ParameterStore store;
  const std::size_t d = spec.embed_dim;
  if (spec.vocab_size > 0) {
    // A lookup is a one-hot input with a single active unit, so fan_in = 1.
    store.add("embedding", uniform_weight(rng, 1, spec.vocab_size * d).reshaped(Shape{spec.vocab_size, d}));
  }
  if (spec.kind == ModelKind::TinyTransformer) {
    for (std::size_t b = 0; b < spec.num_blocks; ++b) {
      const std::string p = "block" + std::to_string(b) + ".";
      for (const char* proj : {"query", "key", "value", "output"}) store.add(p + proj, uniform_weight(rng, d, d));
      store.add(p + "ffn_in.weight", uniform_weight(rng, d, spec.ffn_dim));
      store.add(p + "ffn_in.bias", Tensor::zeros(Shape{spec.ffn_dim}));
      store.add(p + "ffn_out.weight", uniform_weight(rng, spec.ffn_dim, d));
      store.add(p + "ffn_out.bias", Tensor::zeros(Shape{d}));
    }
  }
  std::size_t width = d;
  const auto& hidden = head_dims(spec);
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    const std::string p = "hidden" + std::to_string(i) + ".";
    store.add(p + "weight", uniform_weight(rng, width, hidden[i]));
    store.add(p + "bias", Tensor::zeros(Shape{hidden[i]}));
    width = hidden[i];
  }
  store.add("head.weight", uniform_weight(rng, width, spec.num_classes));
  store.add("head.bias", Tensor::zeros(Shape{spec.num_classes}));
  return Model(spec, std::move(store));
}

ParamBinding Model::bind(Graph& g, bool requires_grad) const {
  ParamBinding p;
  p.nodes.reserve(params_.tensor_count());
  for (std::size_t i = 0; i < params_.tensor_count(); ++i) p.nodes.push_back(g.leaf(params_.tensor(i), requires_grad));
  return p;
}

NodeId Model::embed(Graph& g, const ParamBinding& p, const Inputs& in) const {
  const std::size_t d = spec_.embed_dim;
  if (spec_.vocab_size == 0) {
    const Shape expected{in.rows, in.seq_len, d};
    if (in.features.shape() != expected) {
      throw ValidationError("dense input has shape " + shape_string(in.features.shape()) + ", expected " +
                            shape_string(expected));
    }
    return g.leaf(in.features, true);
  }
  if (in.tokens.size() != in.rows * in.seq_len || in.rows == 0 || in.seq_len == 0) {
    throw ValidationError("token batch does not match rows x seq_len");
  }
  for (auto id : in.tokens) {
    if (id >= spec_.vocab_size) {
      throw ValidationError("token id " + std::to_string(id) + " out of range for vocabulary of " +
                            std::to_string(spec_.vocab_size));
    }
  }
  return g.gather(p.nodes[params_.index_of("embedding")], in.tokens, Shape{in.rows, in.seq_len, d});
}

NodeId Model::dense(Graph& g, const ParamBinding& p, NodeId x, const std::string& prefix) const {
  const NodeId w = p.nodes[params_.index_of(prefix + "weight")];
  const NodeId b = p.nodes[params_.index_of(prefix + "bias")];
  return g.add(g.matmul(x, w), b);
}

NodeId Model::transformer_block(Graph& g, const ParamBinding& p, NodeId x, std::size_t block) const {
  const std::string prefix = "block" + std::to_string(block) + ".";
  auto weight = [&](const char* name) { return p.nodes[params_.index_of(prefix + name)]; };
  const NodeId q = g.matmul(x, weight("query"));
  const NodeId k = g.matmul(x, weight("key"));
  const NodeId v = g.matmul(x, weight("value"));
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(spec_.embed_dim));
  const NodeId scores = g.scale(g.batched_matmul(q, g.transpose_last2(k)), inv_sqrt_d);
  const NodeId attended = g.batched_matmul(g.softmax(scores), v);
  const NodeId h = g.add(x, g.matmul(attended, weight("output")));
  const NodeId ffn = dense(g, p, g.tanh(dense(g, p, h, prefix + "ffn_in.")), prefix + "ffn_out.");
  return g.add(h, ffn);
}

NodeId Model::forward_from_embeddings(Graph& g, const ParamBinding& p, NodeId emb) const {
  const Tensor& e = g.value(emb);
  if (e.rank() != 3 || e.dim(2) != spec_.embed_dim) {
    throw ValidationError("embeddings have shape " + shape_string(e.shape()) + ", expected [B, L, " +
                          std::to_string(spec_.embed_dim) + "]");
  }
  NodeId x = emb;
  if (spec_.kind == ModelKind::TinyTransformer) {
    for (std::size_t b = 0; b < spec_.num_blocks; ++b) x = transformer_block(g, p, x, b);
  }
  x = g.mean(x, 1);
  const auto& hidden = head_dims(spec_);
  for (std::size_t i = 0; i < hidden.size(); ++i) x = g.tanh(dense(g, p, x, "hidden" + std::to_string(i) + "."));
  return dense(g, p, x, "head.");
}

Eigen::VectorXd Model::gradient(const Graph& g, const ParamBinding& p) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(params_.scalar_count()));
  for (std::size_t i = 0; i < p.nodes.size(); ++i) {
    out.segment(static_cast<Eigen::Index>(params_.offset(i)), static_cast<Eigen::Index>(params_.tensor(i).size())) =
        g.grad(p.nodes[i]).data();
  }
  return out;
}

Tensor Model::embed(const Inputs& in) const {
  Graph g;
  const auto p = bind(g, false);
  return g.value(embed(g, p, in));
}

Tensor Model::logits_from_embeddings(const Tensor& emb) const {
  Graph g;
  const auto p = bind(g, false);
  return g.value(forward_from_embeddings(g, p, g.constant(emb)));
}

Tensor Model::logits(const Inputs& in) const {
  Graph g;
  const auto p = bind(g, false);
  return g.value(forward_from_embeddings(g, p, embed(g, p, in)));
}

Tensor Model::predict_proba(const Inputs& in) const { return softmax(logits(in)); }

}  // namespace roast
