#pragma once

#include "roast/graph.hpp"
#include "roast/model.hpp"

#include <string_view>

namespace roast {

// Scope of the l-infinity normalisation of the input gradient.
enum class NormScope {
  PerExample,  // max over every token x dim entry of one example
  PerToken,    // max over the dims of one token
};

std::string_view to_string(NormScope scope);
NormScope parse_norm_scope(std::string_view name);

struct PerturbConfig {
  double step = 0.1;         // l-inf step size in embedding units
  double consistency = 0.1;  // weight of the bidirectional-KL term
  NormScope scope = NormScope::PerExample;

  void validate() const;
  friend bool operator==(const PerturbConfig&, const PerturbConfig&) = default;
};

// step * grad / ||grad||_inf over each scope group. Groups whose gradient is
// exactly zero get no perturbation.
Tensor perturbation(const Tensor& grad_x, double step, NormScope scope);

Tensor build_adversarial_input(const Tensor& x, const Tensor& grad_x, double step,
                               NormScope scope = NormScope::PerExample);

// d L_task / d x at the embedding output, for the current parameters.
Tensor input_gradient(const Model& model, const Batch& batch);

/// A built loss graph, ready for the parameter backward pass.
struct LossEvaluation {
  Graph graph;
  ParamBinding params;
  NodeId loss = 0;
  double clean_task = 0.0;
  double adversarial_task = 0.0;
  double consistency = 0.0;

  double value() const { return graph.value(loss).item(); }
  // Runs backward on `loss` and returns flattened parameter gradients.
  Eigen::VectorXd parameter_gradient(const Model& model);
};

// Plain cross-entropy on clean inputs.
LossEvaluation task_loss(const Model& model, const Batch& batch);

// L_task(x, y) + L_task(x_adv, y) + consistency * BKL(f(x), f(x_adv)).
// x_adv is built from a first backward pass through L_task(x, y); the
// perturbation is then a constant, so no second-order term flows through it.
LossEvaluation roast_training_loss(const Model& model, const Batch& batch, const PerturbConfig& config);

}  // namespace roast
