#include "igs/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "igs/errors.hpp"

namespace igs::numgrad {
namespace {

constexpr double kEntropyClip = 1e-12;

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double sign(double x) { return (x > 0.0) - (x < 0.0); }

Matrix& slot(std::vector<Matrix>& grads, std::size_t id, const Matrix& like) {
  Matrix& g = grads[id];
  if (g.empty() && like.size() != 0) g = Matrix(like.rows(), like.cols());
  return g;
}

}  // namespace

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kInput: return "input";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kHadamard: return "hadamard";
    case OpKind::kAdd: return "add";
    case OpKind::kTranspose: return "transpose";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kRelu: return "relu";
    case OpKind::kRowMean: return "row-mean";
    case OpKind::kScale: return "scale";
    case OpKind::kSum: return "l1-sum";
    case OpKind::kSoftmaxXent: return "softmax-xent";
    case OpKind::kDropout: return "dropout";
    case OpKind::kGcnNormalize: return "gcn-normalize";
    case OpKind::kEntropySum: return "entropy-sum";
  }
  return "unknown";
}

void GradientBundle::set(Var v, Matrix grad) {
  for (auto& [var, g] : entries_) {
    if (var == v) {
      g = std::move(grad);
      return;
    }
  }
  entries_.emplace_back(v, std::move(grad));
}

const Matrix& GradientBundle::operator[](Var v) const {
  for (const auto& [var, g] : entries_)
    if (var == v) return g;
  throw ContractError("no gradient recorded for node " + std::to_string(v.id));
}

bool GradientBundle::contains(Var v) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [v](const auto& e) { return e.first == v; });
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  const std::size_t id = nodes_.size() - 1;
  if (nodes_[id].kind != OpKind::kInput) evaluate(id);
  check_finite(id);
  return Var{id};
}

Var Tape::input(Matrix value, bool differentiable) {
  Node n;
  n.kind = OpKind::kInput;
  n.needs_grad = differentiable;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
  Node n;
  n.kind = OpKind::kMatMul;
  n.lhs = a.id;
  n.rhs = b.id;
  n.needs_grad = nodes_.at(a.id).needs_grad || nodes_.at(b.id).needs_grad;
  return push(std::move(n));
}

Var Tape::hadamard(Var a, Var b) {
  Node n;
  n.kind = OpKind::kHadamard;
  n.lhs = a.id;
  n.rhs = b.id;
  n.needs_grad = nodes_.at(a.id).needs_grad || nodes_.at(b.id).needs_grad;
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  Node n;
  n.kind = OpKind::kAdd;
  n.lhs = a.id;
  n.rhs = b.id;
  n.needs_grad = nodes_.at(a.id).needs_grad || nodes_.at(b.id).needs_grad;
  return push(std::move(n));
}

#define IGS_UNARY(method, op_kind)                   \
  Var Tape::method(Var a) {                          \
    Node n;                                          \
    n.kind = op_kind;                                \
    n.lhs = a.id;                                    \
    n.needs_grad = nodes_.at(a.id).needs_grad;       \
    return push(std::move(n));                       \
  }

IGS_UNARY(transpose, OpKind::kTranspose)
IGS_UNARY(sigmoid, OpKind::kSigmoid)
IGS_UNARY(relu, OpKind::kRelu)
IGS_UNARY(row_mean, OpKind::kRowMean)
IGS_UNARY(sum, OpKind::kSum)
IGS_UNARY(gcn_normalize, OpKind::kGcnNormalize)
IGS_UNARY(entropy_sum, OpKind::kEntropySum)

#undef IGS_UNARY

Var Tape::scale(Var a, double factor) {
  Node n;
  n.kind = OpKind::kScale;
  n.lhs = a.id;
  n.scalar = factor;
  n.needs_grad = nodes_.at(a.id).needs_grad;
  return push(std::move(n));
}

Var Tape::softmax_xent(Var logits, std::size_t label) {
  Node n;
  n.kind = OpKind::kSoftmaxXent;
  n.lhs = logits.id;
  n.label = label;
  n.needs_grad = nodes_.at(logits.id).needs_grad;
  return push(std::move(n));
}

Var Tape::dropout(Var a, double rate, bool training, std::mt19937_64& rng) {
  if (!training || rate == 0.0) return a;
  if (rate < 0.0 || rate >= 1.0)
    throw ConfigError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  const Matrix& in = nodes_.at(a.id).value;
  Node n;
  n.kind = OpKind::kDropout;
  n.lhs = a.id;
  n.scalar = rate;
  n.needs_grad = nodes_.at(a.id).needs_grad;
  n.aux = Matrix(in.rows(), in.cols());
  const double keep_scale = 1.0 / (1.0 - rate);
  std::bernoulli_distribution keep(1.0 - rate);
  for (double& v : n.aux.values()) v = keep(rng) ? keep_scale : 0.0;
  return push(std::move(n));
}

void Tape::set_input(Var leaf, Matrix value) {
  Node& n = nodes_.at(leaf.id);
  if (n.kind != OpKind::kInput) throw ContractError("set_input on a non-leaf node");
  if (!n.value.same_shape(value))
    throw ConfigError("rebinding leaf " + std::to_string(leaf.id) + " with shape " +
                      value.shape_string() + ", expected " + n.value.shape_string());
  n.value = std::move(value);
  check_finite(leaf.id);
}

void Tape::forward() {
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    if (nodes_[id].kind == OpKind::kInput) continue;
    evaluate(id);
    check_finite(id);
  }
}

void Tape::check_finite(std::size_t id) const {
  if (!nodes_[id].value.all_finite())
    throw NumericError("non-finite value at node " + std::to_string(id) + " (" +
                       std::string(op_name(nodes_[id].kind)) + ")");
}

void Tape::evaluate(std::size_t id) {
  Node& n = nodes_[id];
  const auto shape_error = [&](const std::string& detail) {
    return ConfigError("shape mismatch at node " + std::to_string(id) + " (" +
                       std::string(op_name(n.kind)) + "): " + detail);
  };
  const Matrix& a = nodes_[n.lhs].value;
  switch (n.kind) {
    case OpKind::kInput:
      return;
    case OpKind::kMatMul: {
      const Matrix& b = nodes_[n.rhs].value;
      if (a.cols() != b.rows()) throw shape_error(a.shape_string() + " * " + b.shape_string());
      n.value = Matrix(a.rows(), b.cols());
      gemm_accumulate(a, b, n.value);
      return;
    }
    case OpKind::kHadamard:
    case OpKind::kAdd: {
      const Matrix& b = nodes_[n.rhs].value;
      if (!a.same_shape(b)) throw shape_error(a.shape_string() + " vs " + b.shape_string());
      n.value = Matrix(a.rows(), a.cols());
      const bool mul = n.kind == OpKind::kHadamard;
      for (std::size_t i = 0; i < a.size(); ++i)
        n.value.data()[i] = mul ? a.data()[i] * b.data()[i] : a.data()[i] + b.data()[i];
      return;
    }
    case OpKind::kTranspose:
      n.value = a.transposed();
      return;
    case OpKind::kSigmoid:
      n.value = Matrix(a.rows(), a.cols());
      for (std::size_t i = 0; i < a.size(); ++i) n.value.data()[i] = stable_sigmoid(a.data()[i]);
      return;
    case OpKind::kRelu:
      n.value = Matrix(a.rows(), a.cols());
      for (std::size_t i = 0; i < a.size(); ++i)
        n.value.data()[i] = a.data()[i] > 0.0 ? a.data()[i] : 0.0;
      return;
    case OpKind::kRowMean: {
      if (a.rows() == 0) throw shape_error("row-mean of an empty matrix");
      n.value = Matrix(1, a.cols());
      for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c) n.value(0, c) += a(r, c);
      n.value *= 1.0 / static_cast<double>(a.rows());
      return;
    }
    case OpKind::kScale:
      n.value = a;
      n.value *= n.scalar;
      return;
    case OpKind::kSum: {
      double total = 0.0;
      for (double v : a.values()) total += v;
      n.value = Matrix(1, 1, total);
      return;
    }
    case OpKind::kSoftmaxXent: {
      if (a.rows() != 1 || a.cols() == 0) throw shape_error("logits must be 1 x k, got " + a.shape_string());
      if (n.label >= a.cols())
        throw shape_error("label " + std::to_string(n.label) + " out of range for " +
                          std::to_string(a.cols()) + " classes");
      const double top = *std::max_element(a.values().begin(), a.values().end());
      n.aux = Matrix(1, a.cols());
      double z = 0.0;
      for (std::size_t c = 0; c < a.cols(); ++c) {
        n.aux(0, c) = std::exp(a(0, c) - top);
        z += n.aux(0, c);
      }
      n.aux *= 1.0 / z;
      n.value = Matrix(1, 1, std::log(z) + top - a(0, n.label));
      return;
    }
    case OpKind::kDropout:
      if (!a.same_shape(n.aux)) throw shape_error("dropout pattern " + n.aux.shape_string());
      n.value = igs::hadamard(a, n.aux);
      return;
    case OpKind::kGcnNormalize: {
      if (!a.is_square()) throw shape_error("adjacency must be square, got " + a.shape_string());
      const std::size_t sz = a.rows();
      n.aux = Matrix(sz, 1);
      for (std::size_t v = 0; v < sz; ++v) {
        double degree = 1.0;
        for (std::size_t u = 0; u < sz; ++u) degree += u == v ? a(v, u) : std::abs(a(v, u));
        n.aux(v, 0) = 1.0 / std::sqrt(degree);
      }
      n.value = Matrix(sz, sz);
      for (std::size_t i = 0; i < sz; ++i)
        for (std::size_t j = 0; j < sz; ++j)
          n.value(i, j) = (a(i, j) + (i == j ? 1.0 : 0.0)) * n.aux(i, 0) * n.aux(j, 0);
      return;
    }
    case OpKind::kEntropySum: {
      double total = 0.0;
      for (double s : a.values()) {
        const double c = std::clamp(s, kEntropyClip, 1.0 - kEntropyClip);
        total -= c * std::log(c) + (1.0 - c) * std::log1p(-c);
      }
      n.value = Matrix(1, 1, total);
      return;
    }
  }
}

void Tape::backprop_node(std::size_t id, std::vector<Matrix>& grads) const {
  const Node& n = nodes_[id];
  const Matrix& g = grads[id];
  const Node& in = nodes_[n.lhs];
  const Matrix& a = in.value;
  switch (n.kind) {
    case OpKind::kInput:
      return;
    case OpKind::kMatMul: {
      const Node& rhs = nodes_[n.rhs];
      if (in.needs_grad) gemm_a_bt_accumulate(g, rhs.value, slot(grads, n.lhs, a));
      if (rhs.needs_grad) gemm_at_b_accumulate(a, g, slot(grads, n.rhs, rhs.value));
      return;
    }
    case OpKind::kHadamard: {
      const Node& rhs = nodes_[n.rhs];
      if (in.needs_grad) slot(grads, n.lhs, a) += igs::hadamard(g, rhs.value);
      if (rhs.needs_grad) slot(grads, n.rhs, rhs.value) += igs::hadamard(g, a);
      return;
    }
    case OpKind::kAdd: {
      const Node& rhs = nodes_[n.rhs];
      if (in.needs_grad) slot(grads, n.lhs, a) += g;
      if (rhs.needs_grad) slot(grads, n.rhs, rhs.value) += g;
      return;
    }
    case OpKind::kTranspose:
      slot(grads, n.lhs, a) += g.transposed();
      return;
    case OpKind::kSigmoid: {
      Matrix& ga = slot(grads, n.lhs, a);
      for (std::size_t i = 0; i < a.size(); ++i) {
        const double y = n.value.data()[i];
        ga.data()[i] += g.data()[i] * y * (1.0 - y);
      }
      return;
    }
    case OpKind::kRelu: {
      Matrix& ga = slot(grads, n.lhs, a);
      for (std::size_t i = 0; i < a.size(); ++i)
        if (a.data()[i] > 0.0) ga.data()[i] += g.data()[i];
      return;
    }
    case OpKind::kRowMean: {
      Matrix& ga = slot(grads, n.lhs, a);
      const double inv = 1.0 / static_cast<double>(a.rows());
      for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c) ga(r, c) += g(0, c) * inv;
      return;
    }
    case OpKind::kScale: {
      Matrix& ga = slot(grads, n.lhs, a);
      for (std::size_t i = 0; i < a.size(); ++i) ga.data()[i] += n.scalar * g.data()[i];
      return;
    }
    case OpKind::kSum: {
      Matrix& ga = slot(grads, n.lhs, a);
      for (double& v : ga.values()) v += g(0, 0);
      return;
    }
    case OpKind::kSoftmaxXent: {
      Matrix& ga = slot(grads, n.lhs, a);
      for (std::size_t c = 0; c < a.cols(); ++c)
        ga(0, c) += g(0, 0) * (n.aux(0, c) - (c == n.label ? 1.0 : 0.0));
      return;
    }
    case OpKind::kDropout:
      slot(grads, n.lhs, a) += igs::hadamard(g, n.aux);
      return;
    case OpKind::kGcnNormalize: {
      Matrix& ga = slot(grads, n.lhs, a);
      const std::size_t sz = a.rows();
      const Matrix& r = n.aux;
      const Matrix& norm = n.value;
      for (std::size_t i = 0; i < sz; ++i)
        for (std::size_t j = 0; j < sz; ++j) ga(i, j) += g(i, j) * r(i, 0) * r(j, 0);
      // Each degree d_i enters row i and column i of the output.
      for (std::size_t i = 0; i < sz; ++i) {
        double through = 0.0;
        for (std::size_t v = 0; v < sz; ++v) through += g(i, v) * norm(i, v) + g(v, i) * norm(v, i);
        const double d_degree = -0.5 * r(i, 0) * r(i, 0) * through;
        if (d_degree == 0.0) continue;
        for (std::size_t u = 0; u < sz; ++u) ga(i, u) += d_degree * (u == i ? 1.0 : sign(a(i, u)));
      }
      return;
    }
    case OpKind::kEntropySum: {
      Matrix& ga = slot(grads, n.lhs, a);
      for (std::size_t i = 0; i < a.size(); ++i) {
        const double c = std::clamp(a.data()[i], kEntropyClip, 1.0 - kEntropyClip);
        ga.data()[i] += g(0, 0) * std::log((1.0 - c) / c);
      }
      return;
    }
  }
}

GradientBundle Tape::backward(Var root, std::span<const Var> wrt) const {
  const Matrix& root_value = nodes_.at(root.id).value;
  if (root_value.rows() != 1 || root_value.cols() != 1)
    throw ContractError("backward requires a scalar root, node " + std::to_string(root.id) +
                        " is " + root_value.shape_string());
  std::vector<Matrix> grads(root.id + 1);
  grads[root.id] = Matrix(1, 1, 1.0);
  for (std::size_t id = root.id + 1; id-- > 0;) {
    if (grads[id].empty() || !nodes_[id].needs_grad) continue;
    backprop_node(id, grads);
  }
  GradientBundle bundle;
  for (Var v : wrt) {
    const Matrix& shape = nodes_.at(v.id).value;
    if (v.id <= root.id && !grads[v.id].empty())
      bundle.set(v, grads[v.id]);
    else
      bundle.set(v, Matrix(shape.rows(), shape.cols()));
  }
  return bundle;
}

const Matrix& forward_eval(Tape& tape, std::span<const Binding> bindings, Var root) {
  for (const Binding& b : bindings) tape.set_input(b.leaf, b.value);
  tape.forward();
  return tape.value(root);
}

GradientBundle backward_grad(const Tape& tape, Var root, std::span<const Var> wrt) {
  return tape.backward(root, wrt);
}

double finite_difference_check(Tape& tape, Var root, Var leaf, double epsilon) {
  if (!(epsilon > 0.0)) throw ContractError("finite-difference epsilon must be positive");
  const Var wrt[] = {leaf};
  const Matrix analytic = tape.backward(root, wrt)[leaf];
  const Matrix original = tape.value(leaf);
  double worst = 0.0;
  for (std::size_t i = 0; i < original.size(); ++i) {
    Matrix probe = original;
    probe.data()[i] = original.data()[i] + epsilon;
    tape.set_input(leaf, probe);
    tape.forward();
    const double plus = tape.value(root)(0, 0);
    probe.data()[i] = original.data()[i] - epsilon;
    tape.set_input(leaf, probe);
    tape.forward();
    const double minus = tape.value(root)(0, 0);
    const double numeric = (plus - minus) / (2.0 * epsilon);
    const double exact = analytic.data()[i];
    const double denom = std::max({std::abs(exact), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(exact - numeric) / denom);
  }
  tape.set_input(leaf, original);
  tape.forward();
  return worst;
}

}  // namespace igs::numgrad
