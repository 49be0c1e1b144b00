#pragma once

#include <deque>
#include <functional>
#include <vector>

#include "turngcn/mask.hpp"
#include "turngcn/tensor.hpp"

namespace turngcn {

/// Handle to a node on a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

/// Reverse-mode differentiation tape. Operations append nodes in execution
/// order, so creation order is a topological order and backward() replays it
/// in reverse exactly once. A tape is single-owner: it must not be shared
/// across concurrent tasks, but independent tapes may run in parallel.
///
/// Every forward operation validates that its result is finite and throws
/// NumericError otherwise; NaN/Inf never propagate silently.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Binds a tensor as a leaf. Gradients accumulate iff value.requires_grad.
  Var leaf(const Tensor& value);
  /// Non-differentiable input (adjacency matrices, dropout masks, ...).
  Var constant(Tensor value);

  /// Node values and gradients live in a deque: references stay valid while
  /// later operations append nodes.
  const Tensor& val(Var v) const { return nodes_[check(v)].value; }
  /// Accumulated gradient; materializes a zero tensor of the value's shape
  /// when the node was never touched by backward().
  const Tensor& grad(Var v);
  std::size_t num_nodes() const { return nodes_.size(); }

  /// Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse. `loss` must be
  /// 1x1. May be called more than once; gradients accumulate linearly.
  void backward(Var loss);

  // ---- differentiable operations -----------------------------------------
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);                 // elementwise
  Var scale(Var a, double s);
  Var add_rowbias(Var m, Var bias);      // [r x c] + [1 x c], broadcast over rows
  Var matmul(Var a, Var b, bool trans_a = false, bool trans_b = false);
  Var relu(Var a);
  Var tanh_act(Var a);
  Var sigmoid_act(Var a);
  Var gelu(Var a);
  /// Row softmax over allowed positions only; disallowed weights are exact
  /// zeros. Throws on shape mismatch or a row with no allowed position.
  Var masked_softmax_rows(Var scores, const SurroundMask& mask);
  Var softmax_rows(Var scores);
  Var layer_norm_rows(Var x, Var gain, Var bias, double eps = 1e-5);
  Var gather_rows(Var table, std::vector<int> ids);
  Var slice_rows(Var x, int r0, int r1);     // rows [r0, r1)
  Var slice_cols(Var x, int c0, int c1);     // cols [c0, c1)
  Var concat_rows(const std::vector<Var>& xs);
  Var concat_cols(const std::vector<Var>& xs);
  Var mean_rows(Var x);                  // [r x c] -> [1 x c]
  Var sum_all(Var x);                    // -> [1 x 1]
  Var mean_all(Var x);                   // -> [1 x 1]
  /// Inverted dropout; identity when rate == 0 or training masks disabled.
  Var dropout(Var x, double rate, Rng& rng);
  /// Sum over labels of stabilized binary cross-entropy between sigmoid(z)
  /// and 0/1 targets. logits and targets are [1 x L].
  Var bce_with_logits(Var logits, const Tensor& targets);

 private:
  struct Node {
    Tensor value;
    Tensor grad;  // allocated lazily
    bool requires_grad = false;
    std::function<void(Tape&)> back;  // empty for leaves/constants
  };

  std::deque<Node> nodes_;

  int check(Var v) const;
  Var push(Tensor value, bool requires_grad, std::function<void(Tape&)> back, const char* op);
  Tensor& grad_ref(int id);
  bool needs_grad(Var v) const { return nodes_[check(v)].requires_grad; }
};

/// Standalone masked softmax on plain tensors (same semantics as the tape
/// op, no differentiation).
Tensor masked_softmax(const Tensor& scores, const SurroundMask& mask);

}  // namespace turngcn
