#include "roast/gradcheck.hpp"

#include "roast/adversarial.hpp"
#include "roast/losses.hpp"
#include "roast/random.hpp"

#include <algorithm>
#include <cmath>

namespace roast {

namespace {

double rel_error(double a, double n) { return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-6}); }

NodeId build_loss(Graph& g, const Model& model, const ParamBinding& p, NodeId x, const Batch& batch,
                  const Tensor& offset, double consistency) {
  const NodeId clean = model.forward_from_embeddings(g, p, x);
  const NodeId shifted = model.forward_from_embeddings(g, p, g.add(x, g.constant(offset)));
  return g.add(g.add(cross_entropy(g, clean, batch.labels), cross_entropy(g, shifted, batch.labels)),
               g.scale(bidirectional_kl(g, clean, shifted), consistency));
}

}  // namespace

double fixed_offset_loss(const Model& model, const Batch& batch, const Tensor& offset, double consistency) {
  Graph g;
  const auto p = model.bind(g, false);
  return g.value(build_loss(g, model, p, model.embed(g, p, batch.inputs), batch, offset, consistency)).item();
}

GradCheckResult check_gradients(const Model& model, const Batch& batch, const Tensor& offset, double consistency,
                                double h, double tolerance) {
  GradCheckResult result;
  result.kind = model.spec().kind;
  result.parameters = model.parameters().scalar_count();

  Graph g;
  const auto p = model.bind(g);
  const NodeId loss = build_loss(g, model, p, model.embed(g, p, batch.inputs), batch, offset, consistency);
  g.backward(loss);
  const Eigen::VectorXd analytic = model.gradient(g, p);

  Model probe = model;
  Eigen::VectorXd theta = model.parameters().flatten();
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double saved = theta[i];
    theta[i] = saved + h;
    probe.parameters().assign(theta);
    const double up = fixed_offset_loss(probe, batch, offset, consistency);
    theta[i] = saved - h;
    probe.parameters().assign(theta);
    const double down = fixed_offset_loss(probe, batch, offset, consistency);
    theta[i] = saved;
    result.max_parameter_error = std::max(result.max_parameter_error, rel_error(analytic[i], (up - down) / (2 * h)));
  }

  // d CE / d x at the embedding output.
  const Tensor grad_x = input_gradient(model, batch);
  Tensor x = model.embed(batch.inputs);
  auto ce_at = [&](const Tensor& emb) { return cross_entropy(model.logits_from_embeddings(emb), batch.labels); };
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = ce_at(x);
    x[i] = saved - h;
    const double down = ce_at(x);
    x[i] = saved;
    result.max_input_error = std::max(result.max_input_error, rel_error(grad_x[i], (up - down) / (2 * h)));
  }
  result.passed = result.max_parameter_error < tolerance && result.max_input_error < tolerance;
  return result;
}

std::vector<GradCheckResult> gradcheck_suite(std::uint64_t seed, std::size_t instances) {
  const ModelKind kinds[] = {ModelKind::Linear, ModelKind::Mlp, ModelKind::TinyTransformer};
  RandomSource rng(seed);
  std::vector<GradCheckResult> out;
  for (std::size_t n = 0; n < instances; ++n) {
    ModelSpec spec;
    spec.kind = kinds[n % 3];
    spec.vocab_size = rng.bernoulli(0.25) ? 0 : 6 + rng.below(5);
    spec.embed_dim = 2 + rng.below(3);
    spec.hidden_dims = {2 + rng.below(4)};
    spec.num_classes = 2 + rng.below(2);
    spec.num_blocks = 1 + rng.below(2);
    spec.ffn_dim = 2 + rng.below(3);
    Model model = Model::initialize(spec, rng());

    Batch batch;
    batch.inputs.rows = 1 + rng.below(3);
    batch.inputs.seq_len = 1 + rng.below(3);
    const std::size_t cells = batch.inputs.rows * batch.inputs.seq_len;
    if (spec.vocab_size > 0) {
      for (std::size_t i = 0; i < cells; ++i) batch.inputs.tokens.push_back(rng.below(spec.vocab_size));
    } else {
      batch.inputs.features = Tensor(Shape{batch.inputs.rows, batch.inputs.seq_len, spec.embed_dim});
      for (std::size_t i = 0; i < batch.inputs.features.size(); ++i) batch.inputs.features[i] = rng.uniform(-1, 1);
    }
    for (std::size_t i = 0; i < batch.inputs.rows; ++i) batch.labels.push_back(rng.below(spec.num_classes));

    Tensor offset(Shape{batch.inputs.rows, batch.inputs.seq_len, spec.embed_dim});
    for (std::size_t i = 0; i < offset.size(); ++i) offset[i] = rng.uniform(-0.3, 0.3);
    out.push_back(check_gradients(model, batch, offset, rng.uniform(0.0, 1.0)));
  }
  return out;
}

}  // namespace roast
