#pragma once

#include "roast/graph.hpp"
#include "roast/tensor.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace roast {

/// Named model parameters with a flat scalar index space over all of them.
///
/// Tensors keep insertion order; flat index `offset(i) + k` addresses scalar
/// `k` of tensor `i`. The per-scalar slots (gradient, importance, probability,
/// mask) are sized to scalar_count() and are written by the trainer.
class ParameterStore {
 public:
  void add(std::string name, Tensor value);

  std::size_t tensor_count() const { return tensors_.size(); }
  std::size_t scalar_count() const { return total_; }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  const Tensor& tensor(std::size_t i) const { return tensors_.at(i); }
  Tensor& tensor(std::size_t i) { return tensors_.at(i); }
  std::size_t offset(std::size_t i) const { return offsets_.at(i); }

  bool contains(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;
  const Tensor& operator[](std::string_view name) const { return tensors_[index_of(name)]; }
  Tensor& operator[](std::string_view name) { return tensors_[index_of(name)]; }

  std::size_t flat_index(std::string_view name, std::size_t offset) const;
  // Inverse of flat_index: (tensor index, offset within tensor).
  std::pair<std::size_t, std::size_t> locate(std::size_t flat) const;

  Eigen::VectorXd flatten() const;
  void assign(const Eigen::VectorXd& flat);

  Eigen::VectorXd gradient;
  Eigen::VectorXd importance;
  Eigen::VectorXd probability;
  Eigen::VectorXd mask;

  friend bool operator==(const ParameterStore& a, const ParameterStore& b) {
    return a.names_ == b.names_ && a.tensors_ == b.tensors_;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> tensors_;
  std::vector<std::size_t> offsets_;
  std::unordered_map<std::string, std::size_t> by_name_;
  std::size_t total_ = 0;
};

enum class ModelKind { Linear, Mlp, TinyTransformer };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

struct ModelSpec {
  ModelKind kind = ModelKind::Mlp;
  // 0 selects dense-feature mode: inputs are [B, L, d] tensors and no
  // embedding table exists.
  std::size_t vocab_size = 200;
  std::size_t embed_dim = 16;
  // Hidden widths of the classifier head (Mlp; TinyTransformer head).
  std::vector<std::size_t> hidden_dims{32};
  std::size_t num_classes = 3;
  // TinyTransformer only.
  std::size_t num_blocks = 1;
  std::size_t ffn_dim = 32;

  void validate() const;
  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// A batch of model inputs, either token ids or dense features.
struct Inputs {
  std::size_t rows = 0;
  std::size_t seq_len = 0;
  std::vector<std::size_t> tokens;  // rows * seq_len ids, row-major
  Tensor features;                  // [rows, seq_len, d] in dense mode
};

struct Batch {
  Inputs inputs;
  std::vector<std::size_t> labels;
};

struct ParamBinding {
  std::vector<NodeId> nodes;  // one per ParameterStore tensor
};

/// Small classifier with an explicit embedding stage.
///
/// Pipeline: embed -> (transformer blocks) -> mean-pool over positions ->
/// tanh MLP head -> logits. Weights are stored [in, out] so a layer is
/// `x W + b`.
class Model {
 public:
  Model(ModelSpec spec, ParameterStore params);

  static Model initialize(const ModelSpec& spec, std::uint64_t seed);

  const ModelSpec& spec() const { return spec_; }
  ParameterStore& parameters() { return params_; }
  const ParameterStore& parameters() const { return params_; }

  ParamBinding bind(Graph& g, bool requires_grad = true) const;
  // [B, L, d]. Differentiable with respect to the gathered rows.
  NodeId embed(Graph& g, const ParamBinding& p, const Inputs& in) const;
  // [B, L, d] -> [B, C].
  NodeId forward_from_embeddings(Graph& g, const ParamBinding& p, NodeId emb) const;
  // Parameter gradients after g.backward(), flattened in store order.
  Eigen::VectorXd gradient(const Graph& g, const ParamBinding& p) const;

  Tensor embed(const Inputs& in) const;
  Tensor logits_from_embeddings(const Tensor& emb) const;
  Tensor logits(const Inputs& in) const;
  Tensor predict_proba(const Inputs& in) const;

 private:
  NodeId dense(Graph& g, const ParamBinding& p, NodeId x, const std::string& prefix) const;
  NodeId transformer_block(Graph& g, const ParamBinding& p, NodeId x, std::size_t block) const;

  ModelSpec spec_;
  ParameterStore params_;
};

}  // namespace roast
