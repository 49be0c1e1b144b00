#pragma once

#include "turngcn/mask.hpp"
#include "turngcn/tape.hpp"

namespace turngcn {

/// Parameter handles for one multi-head attention block (q/k/v/o projections
/// with biases, each projection d x d).
struct AttentionParams {
  Var wq, bq, wk, bk, wv, bv, wo, bo;
};

/// Multi-head self-attention: per-head Q K^T / sqrt(d_h) scores, (masked)
/// row softmax, context aggregation, head concat, output projection.
/// `mask` == nullptr means full attention. Dropout on attention weights in
/// training mode only. Throws when d is not divisible by the head count.
Var multi_head_attention(Tape& tape, Var x, const AttentionParams& p, const SurroundMask* mask,
                         int heads, double dropout_rate, bool training, Rng* dropout_rng);

}  // namespace turngcn
