#pragma once

#include "roast/graph.hpp"

#include <span>
#include <vector>

namespace roast {

// Floor applied to probabilities before any log.
inline constexpr double kProbabilityFloor = 1e-12;

// Mean over the batch of -log softmax(logits)[label]. logits: [B, C].
NodeId cross_entropy(Graph& g, NodeId logits, std::span<const std::size_t> labels);
double cross_entropy(const Tensor& logits, std::span<const std::size_t> labels);

// Mean over the batch of KL(P||Q) + KL(Q||P), P and Q the row softmaxes of
// the two logit tensors. Written as sum((P - Q) * (log P - log Q)), which is
// the same quantity and keeps the two arguments symmetric.
NodeId bidirectional_kl(Graph& g, NodeId p_logits, NodeId q_logits);
double bidirectional_kl(const Tensor& p_logits, const Tensor& q_logits);

Tensor softmax(const Tensor& logits);

}  // namespace roast
