#include "turngcn/attention.hpp"

#include <cmath>

namespace turngcn {

Var multi_head_attention(Tape& t, Var x, const AttentionParams& p, const SurroundMask* mask,
                         int heads, double dropout_rate, bool training, Rng* dropout_rng) {
  const int d = t.val(x).cols();
  if (heads <= 0 || d % heads != 0)
    throw ShapeError("attention width must be divisible by the head count");
  const int dh = d / heads;

  Var q = t.add_rowbias(t.matmul(x, p.wq, false, true), p.bq);
  Var k = t.add_rowbias(t.matmul(x, p.wk, false, true), p.bk);
  Var v = t.add_rowbias(t.matmul(x, p.wv, false, true), p.bv);

  std::vector<Var> contexts;
  contexts.reserve(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    Var qh = t.slice_cols(q, h * dh, (h + 1) * dh);
    Var kh = t.slice_cols(k, h * dh, (h + 1) * dh);
    Var vh = t.slice_cols(v, h * dh, (h + 1) * dh);
    Var scores = t.scale(t.matmul(qh, kh, false, true), 1.0 / std::sqrt(static_cast<double>(dh)));
    Var probs = mask ? t.masked_softmax_rows(scores, *mask) : t.softmax_rows(scores);
    if (training && dropout_rate > 0.0 && dropout_rng)
      probs = t.dropout(probs, dropout_rate, *dropout_rng);
    contexts.push_back(t.matmul(probs, vh));
  }
  Var ctx = heads == 1 ? contexts[0] : t.concat_cols(contexts);
  return t.add_rowbias(t.matmul(ctx, p.wo, false, true), p.bo);
}

}  // namespace turngcn
