#pragma once

#include "roast/model.hpp"

#include <cstdint>
#include <vector>

namespace roast {

struct GradCheckResult {
  ModelKind kind = ModelKind::Linear;
  std::size_t parameters = 0;
  double max_parameter_error = 0.0;  // over every scalar parameter
  double max_input_error = 0.0;      // over the embedding output
  bool passed = false;
};

// Training-loss shape used for checking: CE(x) + CE(x + offset) +
// consistency * BKL(f(x), f(x + offset)) with `offset` held constant.
double fixed_offset_loss(const Model& model, const Batch& batch, const Tensor& offset, double consistency);

// Compares backward() against central differences (step h) for every
// parameter and for d CE / d x. Relative error is |a - n| / max(|a|, |n|, 1e-6).
GradCheckResult check_gradients(const Model& model, const Batch& batch, const Tensor& offset, double consistency,
                                double h = 1e-5, double tolerance = 1e-4);

// `instances` random small models (cycling linear, mlp, tiny-transformer)
// with random batches and offsets.
std::vector<GradCheckResult> gradcheck_suite(std::uint64_t seed, std::size_t instances = 50);

}  // namespace roast
