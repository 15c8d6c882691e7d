#include "roast/graph.hpp"

#include "roast/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace roast {

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::Leaf: return "leaf";
    case OpKind::Matmul: return "matmul";
    case OpKind::BatchedMatmul: return "batched-matmul";
    case OpKind::TransposeLast2: return "transpose";
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::Multiply: return "multiply";
    case OpKind::Relu: return "relu";
    case OpKind::Tanh: return "tanh";
    case OpKind::Softmax: return "row-softmax";
    case OpKind::LogSoftmax: return "row-log-softmax";
    case OpKind::LogFloor: return "log-floor";
    case OpKind::Gather: return "embedding-gather";
    case OpKind::Mean: return "mean";
    case OpKind::Sum: return "sum";
    case OpKind::Scale: return "scale";
    case OpKind::Pick: return "pick";
  }
  return "?";
}

namespace {

[[noreturn]] void shape_error(OpKind kind, const std::string& what) {
  throw ValidationError(std::string(op_name(kind)) + ": " + what);
}

std::size_t arity(OpKind kind) {
  switch (kind) {
    case OpKind::Leaf: return 0;
    case OpKind::Matmul:
    case OpKind::BatchedMatmul:
    case OpKind::Add:
    case OpKind::Sub:
    case OpKind::Multiply: return 2;
    default: return 1;
  }
}

bool is_bias_add(const Tensor& a, const Tensor& b) {
  return a.shape() != b.shape() && b.rank() == 1 && a.rank() >= 1 && a.last_dim() == b.dim(0);
}

void softmax_rows(const Tensor& x, Tensor& y) {
  const auto in = x.rows();
  auto out = y.rows();
  for (Eigen::Index r = 0; r < in.rows(); ++r) {
    const double m = in.row(r).maxCoeff();
    out.row(r) = (in.row(r).array() - m).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
}

// [b, m, n] batch slice as a matrix.
Eigen::Map<const RowMatrix> slice(const Tensor& t, std::size_t b) {
  const auto m = t.dim(1), n = t.dim(2);
  return {t.data().data() + b * m * n, static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)};
}

Eigen::Map<RowMatrix> slice(Tensor& t, std::size_t b) {
  const auto m = t.dim(1), n = t.dim(2);
  return {t.data().data() + b * m * n, static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)};
}

}  // namespace

NodeId Graph::leaf(Tensor value, bool requires_grad) {
  if (!value.all_finite()) throw NonFiniteError("leaf tensor contains non-finite values");
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return nodes_.size() - 1;
}

NodeId Graph::log_floor(NodeId a, double floor) {
  OpAttrs attrs;
  attrs.scalar = floor;
  const NodeId in[] = {a};
  return apply(OpKind::LogFloor, in, std::move(attrs));
}

NodeId Graph::gather(NodeId table, std::vector<std::size_t> indices, Shape out_shape) {
  OpAttrs attrs;
  attrs.indices = std::move(indices);
  attrs.out_shape = std::move(out_shape);
  const NodeId in[] = {table};
  return apply(OpKind::Gather, in, std::move(attrs));
}

NodeId Graph::mean(NodeId a, std::size_t axis) {
  OpAttrs attrs;
  attrs.axis = axis;
  const NodeId in[] = {a};
  return apply(OpKind::Mean, in, std::move(attrs));
}

NodeId Graph::scale(NodeId a, double factor) {
  OpAttrs attrs;
  attrs.scalar = factor;
  const NodeId in[] = {a};
  return apply(OpKind::Scale, in, std::move(attrs));
}

NodeId Graph::pick(NodeId a, std::vector<std::size_t> indices) {
  OpAttrs attrs;
  attrs.indices = std::move(indices);
  const NodeId in[] = {a};
  return apply(OpKind::Pick, in, std::move(attrs));
}

NodeId Graph::apply(OpKind kind, std::span<const NodeId> inputs, OpAttrs attrs) {
  if (kind == OpKind::Leaf) shape_error(kind, "use leaf() to create leaves");
  if (inputs.size() != arity(kind)) shape_error(kind, "wrong number of inputs");
  for (auto id : inputs) {
    if (id >= nodes_.size()) shape_error(kind, "unknown input node");
  }
  Tensor out = evaluate(kind, inputs, attrs);
  if (!out.all_finite()) throw NonFiniteError(std::string(op_name(kind)) + " produced non-finite values");

  Node n;
  n.op = kind;
  n.inputs.assign(inputs.begin(), inputs.end());
  n.attrs = std::move(attrs);
  n.value = std::move(out);
  n.requires_grad = std::any_of(inputs.begin(), inputs.end(), [&](NodeId id) { return nodes_[id].requires_grad; });
  nodes_.push_back(std::move(n));
  return nodes_.size() - 1;
}

Tensor Graph::evaluate(OpKind kind, std::span<const NodeId> inputs, const OpAttrs& attrs) const {
  const Tensor& a = nodes_[inputs[0]].value;
  switch (kind) {
    case OpKind::Matmul: {
      const Tensor& b = nodes_[inputs[1]].value;
      if (a.rank() < 2 || b.rank() != 2 || a.last_dim() != b.dim(0)) {
        shape_error(kind, shape_string(a.shape()) + " x " + shape_string(b.shape()));
      }
      Shape shape = a.shape();
      shape.back() = b.dim(1);
      Tensor out(shape);
      out.rows().noalias() = a.rows() * b.rows();
      return out;
    }
    case OpKind::BatchedMatmul: {
      const Tensor& b = nodes_[inputs[1]].value;
      if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(1)) {
        shape_error(kind, shape_string(a.shape()) + " x " + shape_string(b.shape()));
      }
      Tensor out(Shape{a.dim(0), a.dim(1), b.dim(2)});
      for (std::size_t i = 0; i < a.dim(0); ++i) slice(out, i).noalias() = slice(a, i) * slice(b, i);
      return out;
    }
    case OpKind::TransposeLast2: {
      if (a.rank() < 2) shape_error(kind, "needs rank >= 2");
      const auto m = a.dim(a.rank() - 2), n = a.dim(a.rank() - 1);
      Shape shape = a.shape();
      std::swap(shape[shape.size() - 2], shape[shape.size() - 1]);
      Tensor out(shape);
      const std::size_t batches = a.size() / (m * n);
      for (std::size_t i = 0; i < batches; ++i) {
        Eigen::Map<const RowMatrix> src(a.data().data() + i * m * n, m, n);
        Eigen::Map<RowMatrix> dst(out.data().data() + i * m * n, n, m);
        dst = src.transpose();
      }
      return out;
    }
    case OpKind::Add: {
      const Tensor& b = nodes_[inputs[1]].value;
      if (a.shape() == b.shape()) return Tensor(a.shape(), a.data() + b.data());
      if (!is_bias_add(a, b)) shape_error(kind, shape_string(a.shape()) + " + " + shape_string(b.shape()));
      Tensor out = a;
      out.rows().rowwise() += b.data().transpose();
      return out;
    }
    case OpKind::Sub:
    case OpKind::Multiply: {
      const Tensor& b = nodes_[inputs[1]].value;
      if (a.shape() != b.shape()) shape_error(kind, shape_string(a.shape()) + " vs " + shape_string(b.shape()));
      if (kind == OpKind::Sub) return Tensor(a.shape(), a.data() - b.data());
      return Tensor(a.shape(), a.data().cwiseProduct(b.data()));
    }
    case OpKind::Relu: return Tensor(a.shape(), a.data().cwiseMax(0.0));
    case OpKind::Tanh: return Tensor(a.shape(), a.data().array().tanh().matrix());
    case OpKind::Softmax: {
      Tensor out(a.shape());
      softmax_rows(a, out);
      return out;
    }
    case OpKind::LogSoftmax: {
      Tensor out(a.shape());
      const auto in = a.rows();
      auto rows = out.rows();
      for (Eigen::Index r = 0; r < in.rows(); ++r) {
        const double m = in.row(r).maxCoeff();
        const double lse = m + std::log((in.row(r).array() - m).exp().sum());
        rows.row(r) = (in.row(r).array() - lse).matrix();
      }
      return out;
    }
    case OpKind::LogFloor:
      return Tensor(a.shape(), a.data().cwiseMax(attrs.scalar).array().log().matrix());
    case OpKind::Gather: {
      if (a.rank() != 2) shape_error(kind, "table must be rank 2");
      const std::size_t d = a.dim(1);
      if (shape_size(attrs.out_shape) != attrs.indices.size() * d || attrs.out_shape.empty() ||
          attrs.out_shape.back() != d) {
        shape_error(kind, "output shape " + shape_string(attrs.out_shape) + " does not fit the gathered rows");
      }
      Tensor out(attrs.out_shape);
      auto dst = out.matrix(attrs.indices.size(), d);
      const auto table = a.rows();
      for (std::size_t i = 0; i < attrs.indices.size(); ++i) {
        if (attrs.indices[i] >= a.dim(0)) {
          throw ValidationError("embedding-gather: id " + std::to_string(attrs.indices[i]) + " out of range for " +
                                std::to_string(a.dim(0)) + " rows");
        }
        dst.row(static_cast<Eigen::Index>(i)) = table.row(static_cast<Eigen::Index>(attrs.indices[i]));
      }
      return out;
    }
    case OpKind::Mean: {
      if (attrs.axis >= a.rank()) shape_error(kind, "axis out of range");
      Shape shape = a.shape();
      const std::size_t n = shape[attrs.axis];
      std::size_t outer = 1, inner = 1;
      for (std::size_t i = 0; i < attrs.axis; ++i) outer *= shape[i];
      for (std::size_t i = attrs.axis + 1; i < shape.size(); ++i) inner *= shape[i];
      shape.erase(shape.begin() + static_cast<std::ptrdiff_t>(attrs.axis));
      Tensor out(shape);
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t k = 0; k < n; ++k) {
          out.data().segment(o * inner, inner) += a.data().segment((o * n + k) * inner, inner);
        }
      }
      out.data() /= static_cast<double>(n);
      return out;
    }
    case OpKind::Sum: return Tensor::scalar(a.data().sum());
    case OpKind::Scale: return Tensor(a.shape(), attrs.scalar * a.data());
    case OpKind::Pick: {
      if (a.rank() != 2 || attrs.indices.size() != a.dim(0)) shape_error(kind, "needs [n, c] input and n indices");
      Tensor out(Shape{a.dim(0)});
      for (std::size_t i = 0; i < a.dim(0); ++i) {
        if (attrs.indices[i] >= a.dim(1)) {
          throw ValidationError("pick: index " + std::to_string(attrs.indices[i]) + " out of range for " +
                                std::to_string(a.dim(1)) + " columns");
        }
        out[i] = a[i * a.dim(1) + attrs.indices[i]];
      }
      return out;
    }
    case OpKind::Leaf: break;
  }
  shape_error(kind, "unsupported");
}

void Graph::backward(NodeId loss) {
  if (loss >= nodes_.size()) throw ValidationError("backward: unknown loss node");
  if (nodes_[loss].value.size() != 1) {
    throw ValidationError("backward: loss must be scalar, got " + shape_string(nodes_[loss].value.shape()));
  }
  for (auto& n : nodes_) {
    if (n.requires_grad) n.grad = Tensor::zeros(n.value.shape());
  }
  if (!nodes_[loss].requires_grad) return;
  nodes_[loss].grad.data().setOnes();
  for (NodeId id = loss + 1; id-- > 0;) {
    if (nodes_[id].requires_grad && nodes_[id].op != OpKind::Leaf) propagate(id);
  }
}

void Graph::propagate(NodeId id) {
  Node& n = nodes_[id];
  const Tensor& gy = n.grad;
  Node& na = nodes_[n.inputs[0]];
  const Tensor& a = na.value;
  const bool ga = na.requires_grad;

  switch (n.op) {
    case OpKind::Matmul: {
      Node& nb = nodes_[n.inputs[1]];
      if (ga) na.grad.rows().noalias() += gy.rows() * nb.value.rows().transpose();
      if (nb.requires_grad) nb.grad.rows().noalias() += a.rows().transpose() * gy.rows();
      break;
    }
    case OpKind::BatchedMatmul: {
      Node& nb = nodes_[n.inputs[1]];
      for (std::size_t i = 0; i < a.dim(0); ++i) {
        if (ga) slice(na.grad, i).noalias() += slice(gy, i) * slice(nb.value, i).transpose();
        if (nb.requires_grad) slice(nb.grad, i).noalias() += slice(a, i).transpose() * slice(gy, i);
      }
      break;
    }
    case OpKind::TransposeLast2: {
      if (!ga) break;
      const auto m = a.dim(a.rank() - 2), k = a.dim(a.rank() - 1);
      const std::size_t batches = a.size() / (m * k);
      for (std::size_t i = 0; i < batches; ++i) {
        Eigen::Map<const RowMatrix> src(gy.data().data() + i * m * k, k, m);
        Eigen::Map<RowMatrix> dst(na.grad.data().data() + i * m * k, m, k);
        dst += src.transpose();
      }
      break;
    }
    case OpKind::Add: {
      Node& nb = nodes_[n.inputs[1]];
      if (ga) na.grad.data() += gy.data();
      if (nb.requires_grad) {
        if (nb.value.shape() == gy.shape()) {
          nb.grad.data() += gy.data();
        } else {
          nb.grad.data() += gy.rows().colwise().sum().transpose();
        }
      }
      break;
    }
    case OpKind::Sub: {
      Node& nb = nodes_[n.inputs[1]];
      if (ga) na.grad.data() += gy.data();
      if (nb.requires_grad) nb.grad.data() -= gy.data();
      break;
    }
    case OpKind::Multiply: {
      Node& nb = nodes_[n.inputs[1]];
      if (ga) na.grad.data() += gy.data().cwiseProduct(nb.value.data());
      if (nb.requires_grad) nb.grad.data() += gy.data().cwiseProduct(a.data());
      break;
    }
    case OpKind::Relu:
      if (ga) na.grad.data().array() += (a.data().array() > 0.0).select(gy.data().array(), 0.0);
      break;
    case OpKind::Tanh:
      if (ga) na.grad.data().array() += gy.data().array() * (1.0 - n.value.data().array().square());
      break;
    case OpKind::Softmax: {
      if (!ga) break;
      const auto y = n.value.rows();
      const auto g = gy.rows();
      auto dx = na.grad.rows();
      for (Eigen::Index r = 0; r < y.rows(); ++r) {
        const double dot = g.row(r).dot(y.row(r));
        dx.row(r).array() += y.row(r).array() * (g.row(r).array() - dot);
      }
      break;
    }
    case OpKind::LogSoftmax: {
      if (!ga) break;
      const auto y = n.value.rows();
      const auto g = gy.rows();
      auto dx = na.grad.rows();
      for (Eigen::Index r = 0; r < y.rows(); ++r) {
        dx.row(r).array() += g.row(r).array() - y.row(r).array().exp() * g.row(r).sum();
      }
      break;
    }
    case OpKind::LogFloor:
      if (ga) {
        const double floor = n.attrs.scalar;
        na.grad.data().array() += (a.data().array() > floor).select(gy.data().array() / a.data().array(), 0.0);
      }
      break;
    case OpKind::Gather: {
      if (!ga) break;
      const std::size_t d = a.dim(1);
      const auto g = gy.matrix(n.attrs.indices.size(), d);
      auto table = na.grad.rows();
      for (std::size_t i = 0; i < n.attrs.indices.size(); ++i) {
        table.row(static_cast<Eigen::Index>(n.attrs.indices[i])) += g.row(static_cast<Eigen::Index>(i));
      }
      break;
    }
    case OpKind::Mean: {
      if (!ga) break;
      const std::size_t axis = n.attrs.axis;
      const std::size_t len = a.dim(axis);
      std::size_t outer = 1, inner = 1;
      for (std::size_t i = 0; i < axis; ++i) outer *= a.dim(i);
      for (std::size_t i = axis + 1; i < a.rank(); ++i) inner *= a.dim(i);
      const double w = 1.0 / static_cast<double>(len);
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t k = 0; k < len; ++k) {
          na.grad.data().segment((o * len + k) * inner, inner) += w * gy.data().segment(o * inner, inner);
        }
      }
      break;
    }
    case OpKind::Sum:
      if (ga) na.grad.data().array() += gy.item();
      break;
    case OpKind::Scale:
      if (ga) na.grad.data() += n.attrs.scalar * gy.data();
      break;
    case OpKind::Pick:
      if (ga) {
        const std::size_t c = a.dim(1);
        for (std::size_t i = 0; i < a.dim(0); ++i) na.grad[i * c + n.attrs.indices[i]] += gy[i];
      }
      break;
    case OpKind::Leaf: break;
  }
}

}  // namespace roast
