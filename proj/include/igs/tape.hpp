#pragma once

// Reverse-mode differentiation over dense matrices.
//
// A Tape records operations eagerly: every call computes and caches the
// forward value. Inputs may later be rebound and the whole tape replayed
// with forward_eval(), which is how the finite-difference oracle works.
// Dropout patterns are drawn once at record time and reused on replay.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "igs/matrix.hpp"

namespace igs::numgrad {

enum class OpKind : std::uint8_t {
  kInput,
  kMatMul,
  kHadamard,
  kAdd,
  kTranspose,
  kSigmoid,
  kRelu,
  kRowMean,
  kScale,
  kSum,
  kSoftmaxXent,
  kDropout,
  kGcnNormalize,
  kEntropySum,
};

std::string_view op_name(OpKind kind);

/// Handle to a node on a Tape.
struct Var {
  std::size_t id = 0;
  friend bool operator==(Var, Var) = default;
};

class GradientBundle {
 public:
  GradientBundle() = default;
  void set(Var v, Matrix grad);
  const Matrix& operator[](Var v) const;
  bool contains(Var v) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<std::pair<Var, Matrix>> entries_;
};

class Tape {
 public:
  Tape() = default;

  /// Registers a leaf. Leaves with `differentiable == false` are treated as
  /// constants and no gradient is propagated into or through them.
  Var input(Matrix value, bool differentiable = true);

  Var matmul(Var a, Var b);
  Var hadamard(Var a, Var b);
  Var add(Var a, Var b);
  Var transpose(Var a);
  Var sigmoid(Var a);
  Var relu(Var a);
  /// Column-wise mean over rows: n x d -> 1 x d.
  Var row_mean(Var a);
  Var scale(Var a, double factor);
  /// Sum of all entries -> 1 x 1. Equals the l1 norm for non-negative inputs.
  Var sum(Var a);
  /// Cross-entropy of softmax(logits) against `label`; logits is 1 x k.
  Var softmax_xent(Var logits, std::size_t label);
  /// Inverted dropout. Identity (returns `a`) when `training` is false.
  Var dropout(Var a, double rate, bool training, std::mt19937_64& rng);
  /// D^-1/2 (A + I) D^-1/2 with D = diag(1 + A[v,v] + sum_{u != v} |A[v,u]|).
  Var gcn_normalize(Var adjacency);
  /// Sum of binary entropies -s ln s - (1-s) ln(1-s) over all entries in (0,1).
  Var entropy_sum(Var a);

  const Matrix& value(Var v) const { return nodes_.at(v.id).value; }
  OpKind kind(Var v) const { return nodes_.at(v.id).kind; }
  std::size_t node_count() const { return nodes_.size(); }
  bool differentiable(Var v) const { return nodes_.at(v.id).needs_grad; }

  /// Replaces the value of a leaf. Call forward() to refresh dependents.
  void set_input(Var leaf, Matrix value);
  /// Recomputes every non-leaf node in record order.
  void forward();

  /// Exact reverse-mode gradients of the scalar `root` w.r.t. each of `wrt`.
  GradientBundle backward(Var root, std::span<const Var> wrt) const;

 private:
  struct Node {
    OpKind kind = OpKind::kInput;
    std::size_t lhs = 0;
    std::size_t rhs = 0;
    double scalar = 0.0;     // scale factor or dropout rate
    std::size_t label = 0;   // softmax-xent target
    bool needs_grad = false;
    Matrix value;
    Matrix aux;              // dropout keep-mask, softmax probs, or inverse sqrt degrees
  };

  Var push(Node node);
  void evaluate(std::size_t id);
  void check_finite(std::size_t id) const;
  void backprop_node(std::size_t id, std::vector<Matrix>& grads) const;

  std::vector<Node> nodes_;
};

struct Binding {
  Var leaf;
  Matrix value;
};

/// Binds the given leaves, replays the tape and returns the value of `root`.
const Matrix& forward_eval(Tape& tape, std::span<const Binding> bindings, Var root);

/// Gradients of a scalar root. Leaves not on any path to root get zeros.
GradientBundle backward_grad(const Tape& tape, Var root, std::span<const Var> wrt);

/// Maximum relative error between analytic and central-difference gradients
/// of `root` w.r.t. every entry of `leaf`. Relative error uses the
/// denominator max(|analytic|, |numeric|, 1e-8). Leaves the tape as found.
double finite_difference_check(Tape& tape, Var root, Var leaf, double epsilon);

}  // namespace igs::numgrad
