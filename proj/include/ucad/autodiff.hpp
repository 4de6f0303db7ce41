#pragma once

#include <functional>
#include <vector>

#include "ucad/tensor.hpp"

namespace ucad {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid as long as the tape lives.
class Var {
 public:
  Var() = default;
  const Tensor& value() const;
  bool requires_grad() const;
  Tape* tape() const { return tape_; }
  int32_t id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, int32_t id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  int32_t id_ = -1;
};

/// Reverse-mode differentiation tape. Nodes are recorded in evaluation order;
/// backward() replays them once each, in reverse. Single-threaded per tape.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf holding a trainable parameter (gradient is accumulated).
  Var param(Tensor value);
  /// Leaf holding a fixed input (no gradient).
  Var constant(Tensor value);

  /// Runs the reverse sweep from a scalar node. Each recorded op is visited
  /// exactly once, in reverse recording order.
  void backward(Var loss);

  /// Gradient accumulated for a node after backward(); zeros if untouched.
  Tensor grad(Var v) const;

  size_t num_nodes() const { return nodes_.size(); }

  // --- internal plumbing used by the op implementations ---
  struct Node {
    const char* op;
    Tensor value;
    Tensor grad;  // empty until first accumulation
    bool requires_grad = false;
    std::vector<int32_t> parents;
    std::function<void(Tape&, const Node&)> pull;  // pushes grad to parents
  };
  Var emit(const char* op, Tensor value, std::vector<Var> parents,
           std::function<void(Tape&, const Node&)> pull);
  const Node& node(int32_t id) const { return nodes_[id]; }
  void accumulate(int32_t id, const Tensor& g);

 private:
  std::vector<Node> nodes_;
};

// Supported primitives. All validate shapes and fail on non-finite outputs,
// naming the offending op.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);                 // elementwise
Var scale(Var a, double c);
Var matmul(Var a, Var b);              // [m,k] x [k,n]
Var matmul_nt(Var a, Var b);           // [m,k] x [n,k]^T -> [m,n]
Var broadcast_add_row(Var x, Var v);   // [n,c] + [c] to every row
Var softmax_rows(Var x);
Var layer_norm_rows(Var x, Var gain, Var bias);  // eps = 1e-5
Var gelu(Var x);                       // exact erf form
Var tanh_act(Var x);
Var sum(Var x);                        // -> scalar, shape [1]
Var row_normalize(Var x);              // rows scaled by 1/(||row|| + 1e-8)
Var cosine_similarity(Var a, Var b);   // 1-D vectors -> scalar; eps-guarded
Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var slice_rows(Var x, int64_t start, int64_t count);

/// A differentiable scalar function of the parameter list. The same callable
/// feeds both grad() and finite_diff_grad().
using LossFn = std::function<Var(Tape&, const std::vector<Var>&)>;

/// dLoss/dParam for each parameter, by reverse-mode differentiation.
std::vector<Tensor> grad(const LossFn& loss_fn, const std::vector<Tensor>& params);

/// Central differences (L(p+h) - L(p-h)) / 2h per coordinate. Test oracle;
/// intentionally independent of the tape's backward pass.
std::vector<Tensor> finite_diff_grad(const LossFn& loss_fn,
                                     const std::vector<Tensor>& params, double h);

/// Evaluates loss_fn without differentiating.
double eval_loss(const LossFn& loss_fn, const std::vector<Tensor>& params);

}  // namespace ucad
