#include "roast/dataset.hpp"

#include "roast/error.hpp"
#include "roast/losses.hpp"

#include <numeric>
#include <string>

namespace roast {

std::string_view to_string(SplitTag tag) {
  switch (tag) {
    case SplitTag::Train: return "train";
    case SplitTag::In: return "in";
    case SplitTag::Shift: return "shift";
    case SplitTag::Adv: return "adv";
    case SplitTag::Anomaly: return "anomaly";
  }
  return "?";
}

SplitTag parse_split_tag(std::string_view name) {
  if (name == "train") return SplitTag::Train;
  if (name == "in") return SplitTag::In;
  if (name == "shift") return SplitTag::Shift;
  if (name == "adv") return SplitTag::Adv;
  if (name == "anomaly") return SplitTag::Anomaly;
  throw ValidationError("unknown split tag '" + std::string(name) + "'");
}

Inputs Split::inputs(std::span<const std::size_t> rows) const {
  Inputs in;
  in.rows = rows.size();
  in.seq_len = seq_len;
  in.tokens.reserve(rows.size() * seq_len);
  for (auto r : rows) {
    if (r >= size()) throw ValidationError("row " + std::to_string(r) + " out of range for split '" + name + "'");
    in.tokens.insert(in.tokens.end(), tokens.begin() + static_cast<std::ptrdiff_t>(r * seq_len),
                     tokens.begin() + static_cast<std::ptrdiff_t>((r + 1) * seq_len));
  }
  return in;
}

Inputs Split::inputs() const {
  std::vector<std::size_t> rows(size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return inputs(rows);
}

Batch Split::batch(std::span<const std::size_t> rows) const {
  if (!labeled()) throw ValidationError("split '" + name + "' has no labels");
  Batch b;
  b.inputs = inputs(rows);
  b.labels.reserve(rows.size());
  for (auto r : rows) b.labels.push_back(labels[r]);
  return b;
}

void Split::validate(std::size_t vocab) const {
  if (seq_len == 0 || tokens.empty()) throw ValidationError("split '" + name + "': empty split");
  if (tokens.size() % seq_len != 0) throw ValidationError("split '" + name + "': ragged token buffer");
  if (labeled() && labels.size() != size()) throw ValidationError("split '" + name + "': label count mismatch");
  if (tag == SplitTag::Anomaly && labeled()) throw ValidationError("split '" + name + "': anomaly split is labeled");
  if (tag != SplitTag::Anomaly && !labeled()) throw ValidationError("split '" + name + "': missing labels");
  for (auto t : tokens) {
    if (t >= vocab) {
      throw ValidationError("split '" + name + "': token id " + std::to_string(t) + " >= vocabulary size " +
                            std::to_string(vocab));
    }
  }
  if (perturbation && (perturbation->rank() != 3 || perturbation->dim(0) != size() ||
                       perturbation->dim(1) != seq_len)) {
    throw ValidationError("split '" + name + "': perturbation shape " + shape_string(perturbation->shape()) +
                          " does not match the split");
  }
}

Tensor predict_split(const Model& model, const Split& split) {
  const Inputs in = split.inputs();
  if (!split.perturbation) return model.predict_proba(in);
  Tensor emb = model.embed(in);
  if (emb.shape() != split.perturbation->shape()) {
    throw ValidationError("split '" + split.name + "': perturbation shape does not match the model embeddings");
  }
  emb.data() += split.perturbation->data();
  return softmax(model.logits_from_embeddings(emb));
}

}  // namespace roast
