#include "roast/adversarial.hpp"

#include "roast/error.hpp"
#include "roast/losses.hpp"

#include <string>

namespace roast {

std::string_view to_string(NormScope scope) {
  return scope == NormScope::PerExample ? "per-example" : "per-token";
}

NormScope parse_norm_scope(std::string_view name) {
  if (name == "per-example") return NormScope::PerExample;
  if (name == "per-token") return NormScope::PerToken;
  throw ValidationError("unknown norm scope '" + std::string(name) + "'");
}

void PerturbConfig::validate() const {
  if (!(step >= 0.0)) throw ValidationError("perturbation step must be >= 0");
  if (!(consistency >= 0.0)) throw ValidationError("consistency weight must be >= 0");
}

Tensor perturbation(const Tensor& grad_x, double step, NormScope scope) {
  if (!(step >= 0.0)) throw ValidationError("perturbation step must be >= 0");
  Tensor out = Tensor::zeros(grad_x.shape());
  if (step == 0.0 || grad_x.size() == 0) return out;
  std::size_t group = grad_x.last_dim();
  if (scope == NormScope::PerExample && grad_x.rank() >= 1) group = grad_x.size() / grad_x.dim(0);
  const auto g = grad_x.matrix(grad_x.size() / group, group);
  auto p = out.matrix(grad_x.size() / group, group);
  for (Eigen::Index r = 0; r < g.rows(); ++r) {
    const double norm = g.row(r).cwiseAbs().maxCoeff();
    if (norm > 0.0) p.row(r) = (step / norm) * g.row(r);
  }
  return out;
}

Tensor build_adversarial_input(const Tensor& x, const Tensor& grad_x, double step, NormScope scope) {
  if (x.shape() != grad_x.shape()) {
    throw ValidationError("input and gradient shapes differ: " + shape_string(x.shape()) + " vs " +
                          shape_string(grad_x.shape()));
  }
  Tensor out = x;
  out.data() += perturbation(grad_x, step, scope).data();
  return out;
}

Tensor input_gradient(const Model& model, const Batch& batch) {
  Graph g;
  const auto p = model.bind(g);
  const NodeId x = model.embed(g, p, batch.inputs);
  const NodeId loss = cross_entropy(g, model.forward_from_embeddings(g, p, x), batch.labels);
  g.backward(loss);
  return g.grad(x);
}

Eigen::VectorXd LossEvaluation::parameter_gradient(const Model& model) {
  graph.backward(loss);
  return model.gradient(graph, params);
}

LossEvaluation task_loss(const Model& model, const Batch& batch) {
  LossEvaluation ev;
  ev.params = model.bind(ev.graph);
  const NodeId x = model.embed(ev.graph, ev.params, batch.inputs);
  ev.loss = cross_entropy(ev.graph, model.forward_from_embeddings(ev.graph, ev.params, x), batch.labels);
  ev.clean_task = ev.value();
  return ev;
}

LossEvaluation roast_training_loss(const Model& model, const Batch& batch, const PerturbConfig& config) {
  config.validate();
  LossEvaluation ev;
  Graph& g = ev.graph;
  ev.params = model.bind(g);
  const NodeId x = model.embed(g, ev.params, batch.inputs);
  const NodeId clean_logits = model.forward_from_embeddings(g, ev.params, x);
  const NodeId clean_task = cross_entropy(g, clean_logits, batch.labels);

  // First pass: direction of steepest ascent of the clean task loss.
  g.backward(clean_task);
  const Tensor delta = perturbation(g.grad(x), config.step, config.scope);

  const NodeId x_adv = g.add(x, g.constant(delta));
  const NodeId adv_logits = model.forward_from_embeddings(g, ev.params, x_adv);
  const NodeId adv_task = cross_entropy(g, adv_logits, batch.labels);
  const NodeId cons = bidirectional_kl(g, clean_logits, adv_logits);
  ev.loss = g.add(g.add(clean_task, adv_task), g.scale(cons, config.consistency));

  ev.clean_task = g.value(clean_task).item();
  ev.adversarial_task = g.value(adv_task).item();
  ev.consistency = g.value(cons).item();
  return ev;
}

}  // namespace roast
