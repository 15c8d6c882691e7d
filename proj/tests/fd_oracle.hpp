#pragma once

// Central finite differences. Test-only; depends on forward evaluation alone.

#include "roast/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace roast::testing {

using LossFn = std::function<double(const std::vector<Tensor>&)>;

inline std::vector<Tensor> numeric_gradients(const LossFn& f, std::vector<Tensor> at, double h = 1e-5) {
  std::vector<Tensor> grads;
  for (std::size_t t = 0; t < at.size(); ++t) {
    Tensor g = Tensor::zeros(at[t].shape());
    for (std::size_t i = 0; i < at[t].size(); ++i) {
      const double saved = at[t][i];
      at[t][i] = saved + h;
      const double up = f(at);
      at[t][i] = saved - h;
      const double down = f(at);
      at[t][i] = saved;
      g[i] = (up - down) / (2 * h);
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

// |a - n| / max(|a|, |n|, floor): relative where gradients are sizeable,
// absolute (scaled by 1/floor) near zero.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

inline double max_relative_error(const Tensor& analytic, const Tensor& numeric) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) worst = std::max(worst, relative_error(analytic[i], numeric[i]));
  return worst;
}

}  // namespace roast::testing
