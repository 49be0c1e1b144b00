#include "turngcn/turn_attention.hpp"

#include <algorithm>

#include "turngcn/attention.hpp"

namespace turngcn {

SurroundMask build_surround_mask(const InputSequence& input, int window) {
  const int n = input.length();
  if (window < 0) throw ShapeError("surround window must be >= 0");
  const int m = static_cast<int>(input.turn_spans.size());

  // turn_of[t] = 1-based turn index, 0 for non-dialogue tokens
  std::vector<int> turn_of(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < m; ++i) {
    const auto [b, e] = input.turn_spans[static_cast<std::size_t>(i)];
    if (b < 0 || e >= n || b > e) throw ShapeError("malformed turn span");
    for (int t = b; t <= e; ++t) {
      if (turn_of[static_cast<std::size_t>(t)] != 0) throw ShapeError("overlapping turn spans");
      turn_of[static_cast<std::size_t>(t)] = i + 1;
    }
  }

  SurroundMask mask(n, window);
  for (int r = 0; r < n; ++r) {
    const int fr = turn_of[static_cast<std::size_t>(r)];
    if (fr == 0) {
      mask.set(r, r, true);
      continue;
    }
    const int lo = std::max(1, fr - window);
    const int hi = std::min(m, fr + window);
    for (int z = lo; z <= hi; ++z) {
      const auto [b, e] = input.turn_spans[static_cast<std::size_t>(z - 1)];
      for (int c = b; c <= e; ++c) mask.set(r, c, true);
    }
  }
  return mask;
}

Var turn_attend(Tape& t, ParamVars& p, Var x, const SurroundMask& mask, const TrainConfig& cfg,
                bool training, Rng* dropout_rng) {
  AttentionParams ap{p["turnattn.q.w"], p["turnattn.q.b"], p["turnattn.k.w"], p["turnattn.k.b"],
                     p["turnattn.v.w"], p["turnattn.v.b"], p["turnattn.o.w"], p["turnattn.o.b"]};
  Var a = multi_head_attention(t, x, ap, &mask, cfg.turn_attention_heads, cfg.dropout_attention,
                               training, dropout_rng);
  if (training && dropout_rng) a = t.dropout(a, cfg.dropout_attention, *dropout_rng);
  return t.layer_norm_rows(t.add(x, a), p["turnattn.ln.gain"], p["turnattn.ln.bias"]);
}

}  // namespace turngcn
