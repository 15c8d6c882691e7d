#include "roast/losses.hpp"

#include "roast/error.hpp"

#include <string>

namespace roast {

NodeId cross_entropy(Graph& g, NodeId logits, std::span<const std::size_t> labels) {
  const Tensor& z = g.value(logits);
  if (z.rank() != 2 || labels.size() != z.dim(0)) {
    throw ValidationError("cross_entropy: expected [B, C] logits with B labels, got " + shape_string(z.shape()) +
                          " and " + std::to_string(labels.size()) + " labels");
  }
  for (auto y : labels) {
    if (y >= z.dim(1)) {
      throw ValidationError("cross_entropy: label " + std::to_string(y) + " out of range for " +
                            std::to_string(z.dim(1)) + " classes");
    }
  }
  const NodeId logp = g.log_softmax(logits);
  const NodeId picked = g.pick(logp, std::vector<std::size_t>(labels.begin(), labels.end()));
  return g.scale(g.sum(picked), -1.0 / static_cast<double>(labels.size()));
}

double cross_entropy(const Tensor& logits, std::span<const std::size_t> labels) {
  Graph g;
  return g.value(cross_entropy(g, g.constant(logits), labels)).item();
}

NodeId bidirectional_kl(Graph& g, NodeId p_logits, NodeId q_logits) {
  const Tensor& a = g.value(p_logits);
  const Tensor& b = g.value(q_logits);
  if (a.shape() != b.shape() || a.rank() != 2) {
    throw ValidationError("bidirectional_kl: shape mismatch " + shape_string(a.shape()) + " vs " +
                          shape_string(b.shape()));
  }
  const double batch = static_cast<double>(a.dim(0));
  const NodeId p = g.softmax(p_logits);
  const NodeId q = g.softmax(q_logits);
  const NodeId log_ratio = g.sub(g.log_floor(p, kProbabilityFloor), g.log_floor(q, kProbabilityFloor));
  const NodeId terms = g.multiply(g.sub(p, q), log_ratio);
  return g.scale(g.sum(terms), 1.0 / batch);
}

double bidirectional_kl(const Tensor& p_logits, const Tensor& q_logits) {
  Graph g;
  return g.value(bidirectional_kl(g, g.constant(p_logits), g.constant(q_logits))).item();
}

Tensor softmax(const Tensor& logits) {
  Graph g;
  return g.value(g.softmax(g.constant(logits)));
}

}  // namespace roast
