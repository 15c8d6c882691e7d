#pragma once

#include "roast/model.hpp"
#include "roast/tensor.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace roast {

enum class SplitTag { Train, In, Shift, Adv, Anomaly };

std::string_view to_string(SplitTag tag);
SplitTag parse_split_tag(std::string_view name);

/// Fixed-length token sequences with optional labels.
///
/// Adv splits additionally carry a frozen embedding-space perturbation
/// [size, seq_len, d] that evaluation adds to the model's own embeddings.
struct Split {
  std::string name;
  SplitTag tag = SplitTag::In;
  std::size_t seq_len = 0;
  std::vector<std::size_t> tokens;  // size() * seq_len
  std::vector<std::size_t> labels;  // empty for anomaly splits
  std::optional<Tensor> perturbation;

  std::size_t size() const { return seq_len == 0 ? 0 : tokens.size() / seq_len; }
  bool labeled() const { return !labels.empty(); }

  Inputs inputs(std::span<const std::size_t> rows) const;
  Inputs inputs() const;
  Batch batch(std::span<const std::size_t> rows) const;

  // Throws ValidationError on inconsistent sizes or ids >= vocab.
  void validate(std::size_t vocab) const;

  friend bool operator==(const Split&, const Split&) = default;
};

// Class probabilities for every row; applies the stored perturbation when present.
Tensor predict_split(const Model& model, const Split& split);

}  // namespace roast
