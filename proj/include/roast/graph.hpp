#pragma once

#include "roast/tensor.hpp"

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace roast {

using NodeId = std::size_t;

// Shape rules, per kind:
//   Matmul         a[..., k] x b[k, n]         -> [..., n]   (leading dims of a flattened)
//   BatchedMatmul  a[b, m, k] x b[b, k, n]     -> [b, m, n]
//   TransposeLast2 a[..., m, n]                -> [..., n, m]
//   Add            a + b, same shape; or b[n] broadcast over rows of a[..., n]
//   Sub, Multiply  same shape
//   Relu, Tanh     elementwise
//   Softmax, LogSoftmax  over the last axis
//   LogFloor       log(max(a, floor)); gradient is zero where a <= floor
//   Gather         table[V, d] rows at `indices` -> out_shape (product = |indices| * d)
//   Mean           mean over `axis`, which is removed
//   Sum            all entries -> scalar
//   Scale          scalar * a
//   Pick           a[n, c], indices[n] -> [n], a[i, indices[i]]
enum class OpKind {
  Leaf,
  Matmul,
  BatchedMatmul,
  TransposeLast2,
  Add,
  Sub,
  Multiply,
  Relu,
  Tanh,
  Softmax,
  LogSoftmax,
  LogFloor,
  Gather,
  Mean,
  Sum,
  Scale,
  Pick,
};

std::string_view op_name(OpKind kind);

struct OpAttrs {
  std::vector<std::size_t> indices;  // Gather, Pick
  Shape out_shape;                   // Gather
  std::size_t axis = 0;              // Mean
  double scalar = 0.0;               // Scale factor, LogFloor floor
};

// Tape for reverse-mode differentiation. Nodes are appended in evaluation
// order, which is a topological order; backward() walks it in reverse and
// visits every node once. A graph is single-threaded and rebuilt per step.
class Graph {
 public:
  struct Node {
    OpKind op = OpKind::Leaf;
    std::vector<NodeId> inputs;
    OpAttrs attrs;
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
  };

  NodeId leaf(Tensor value, bool requires_grad = true);
  NodeId constant(Tensor value) { return leaf(std::move(value), false); }

  // Generic entry point; the named helpers below forward here.
  NodeId apply(OpKind kind, std::span<const NodeId> inputs, OpAttrs attrs = {});

  NodeId matmul(NodeId a, NodeId b) { return binary(OpKind::Matmul, a, b); }
  NodeId batched_matmul(NodeId a, NodeId b) { return binary(OpKind::BatchedMatmul, a, b); }
  NodeId transpose_last2(NodeId a) { return unary(OpKind::TransposeLast2, a); }
  NodeId add(NodeId a, NodeId b) { return binary(OpKind::Add, a, b); }
  NodeId sub(NodeId a, NodeId b) { return binary(OpKind::Sub, a, b); }
  NodeId multiply(NodeId a, NodeId b) { return binary(OpKind::Multiply, a, b); }
  NodeId relu(NodeId a) { return unary(OpKind::Relu, a); }
  NodeId tanh(NodeId a) { return unary(OpKind::Tanh, a); }
  NodeId softmax(NodeId a) { return unary(OpKind::Softmax, a); }
  NodeId log_softmax(NodeId a) { return unary(OpKind::LogSoftmax, a); }
  NodeId log_floor(NodeId a, double floor);
  NodeId gather(NodeId table, std::vector<std::size_t> indices, Shape out_shape);
  NodeId mean(NodeId a, std::size_t axis);
  NodeId sum(NodeId a) { return unary(OpKind::Sum, a); }
  NodeId scale(NodeId a, double factor);
  NodeId pick(NodeId a, std::vector<std::size_t> indices);

  // Fills grad() for every node that requires it. Nodes the loss does not
  // depend on end up with an all-zero gradient.
  void backward(NodeId loss);

  const Tensor& value(NodeId id) const { return node(id).value; }
  const Tensor& grad(NodeId id) const { return node(id).grad; }
  const Node& node(NodeId id) const { return nodes_.at(id); }
  std::size_t size() const { return nodes_.size(); }

 private:
  NodeId unary(OpKind kind, NodeId a) {
    const NodeId in[] = {a};
    return apply(kind, in);
  }
  NodeId binary(OpKind kind, NodeId a, NodeId b) {
    const NodeId in[] = {a, b};
    return apply(kind, in);
  }
  Tensor evaluate(OpKind kind, std::span<const NodeId> inputs, const OpAttrs& attrs) const;
  void propagate(NodeId id);

  std::vector<Node> nodes_;
};

}  // namespace roast
