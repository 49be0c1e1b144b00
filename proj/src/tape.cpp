#include "turngcn/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <utility>

namespace turngcn {

namespace {

constexpr double kMaskPenalty = -1e30;  // additive stand-in for -inf

// C = op(A) * op(B) with optional transposes, plain triple loop.
Tensor raw_matmul(const Tensor& a, bool ta, const Tensor& b, bool tb) {
  const int m = ta ? a.cols() : a.rows();
  const int k = ta ? a.rows() : a.cols();
  const int kb = tb ? b.cols() : b.rows();
  const int n = tb ? b.rows() : b.cols();
  if (k != kb)
    throw ShapeError("matmul: inner dimensions disagree " + a.shape_str() + " vs " + b.shape_str());
  Tensor c({m, n});
  for (int i = 0; i < m; ++i) {
    double* crow = c.data() + static_cast<std::size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const double av = ta ? a.at(p, i) : a.at(i, p);
      if (av == 0.0) continue;
      if (!tb) {
        const double* brow = b.data() + static_cast<std::size_t>(p) * n;
        for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
      } else {
        for (int j = 0; j < n; ++j) crow[j] += av * b.at(j, p);
      }
    }
  }
  return c;
}

void accumulate(Tensor& dst, const Tensor& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

double gelu_value(double x) {
  constexpr double c = 0.7978845608028654;  // sqrt(2/pi)
  return 0.5 * x * (1.0 + std::tanh(c * (x + 0.044715 * x * x * x)));
}

double gelu_deriv(double x) {
  constexpr double c = 0.7978845608028654;
  const double u = c * (x + 0.044715 * x * x * x);
  const double t = std::tanh(u);
  const double du = c * (1.0 + 3.0 * 0.044715 * x * x);
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
}

}  // namespace

int Tape::check(Var v) const {
  if (!v.valid() || static_cast<std::size_t>(v.id) >= nodes_.size())
    throw ShapeError("variable does not belong to this tape");
  return v.id;
}

Tensor& Tape::grad_ref(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.empty()) n.grad = Tensor::zeros(n.value.shape());
  return n.grad;
}

const Tensor& Tape::grad(Var v) {
  return grad_ref(check(v));
}

Var Tape::push(Tensor value, bool requires_grad, std::function<void(Tape&)> back, const char* op) {
  if (!value.all_finite())
    throw NumericError(std::string("non-finite values produced by ") + op);
  nodes_.push_back(Node{std::move(value), Tensor(), requires_grad, std::move(back)});
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::leaf(const Tensor& value) {
  return push(value, value.requires_grad, nullptr, "leaf");
}

Var Tape::constant(Tensor value) {
  value.requires_grad = false;
  return push(std::move(value), false, nullptr, "constant");
}

void Tape::backward(Var loss) {
  const int lid = check(loss);
  const Tensor& lv = nodes_[static_cast<std::size_t>(lid)].value;
  if (lv.size() != 1) throw ShapeError("backward expects a scalar (1x1) loss");

  // Stash gradients accumulated by earlier backward() calls so this sweep
  // propagates only its own mass; repeated calls then accumulate linearly.
  std::vector<Tensor> stash(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) stash[i] = std::move(nodes_[i].grad);

  grad_ref(lid)[0] = 1.0;
  for (int id = lid; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.requires_grad || n.grad.empty() || !n.back) continue;
    n.back(*this);
  }

  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (stash[i].empty()) continue;
    if (nodes_[i].grad.empty()) nodes_[i].grad = std::move(stash[i]);
    else accumulate(nodes_[i].grad, stash[i]);
  }
}

Var Tape::add(Var a, Var b) {
  const Tensor& va = val(a);
  const Tensor& vb = val(b);
  if (!va.same_shape(vb)) throw ShapeError("add: shape mismatch");
  Tensor out = va;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += vb[i];
  const bool rg = needs_grad(a) || needs_grad(b);
  Var o = push(std::move(out), rg, nullptr, "add");
  if (rg) {
    const int oid = o.id;
    nodes_[oid].back = [a, b, oid](Tape& t) {
      const Tensor& g = t.nodes_[oid].grad;
      if (t.needs_grad(a)) accumulate(t.grad_ref(a.id), g);
      if (t.needs_grad(b)) accumulate(t.grad_ref(b.id), g);
    };
  }
  return o;
}

Var Tape::sub(Var a, Var b) {
  const Tensor& va = val(a);
  const Tensor& vb = val(b);
  if (!va.same_shape(vb)) throw ShapeError("sub: shape mismatch");
  Tensor out = va;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= vb[i];
  const bool rg = needs_grad(a) || needs_grad(b);
  Var o = push(std::move(out), rg, nullptr, "sub");
  if (rg) {
    const int oid = o.id;
    nodes_[oid].back = [a, b, oid](Tape& t) {
      const Tensor& g = t.nodes_[oid].grad;
      if (t.needs_grad(a)) accumulate(t.grad_ref(a.id), g);
      if (t.needs_grad(b)) {
        Tensor& gb = t.grad_ref(b.id);
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= g[i];
      }
    };
  }
  return o;
}

Var Tape::mul(Var a, Var b) {
  const Tensor& va = val(a);
  const Tensor& vb = val(b);
  if (!va.same_shape(vb)) throw ShapeError("mul: shape mismatch");
  Tensor out = va;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= vb[i];
  const bool rg = needs_grad(a) || needs_grad(b);
  Var o = push(std::move(out), rg, nullptr, "mul");
  if (rg) {
    const int oid = o.id;
    nodes_[oid].back = [a, b, oid](Tape& t) {
      const Tensor& g = t.nodes_[oid].grad;
      if (t.needs_grad(a)) {
        const Tensor& vb2 = t.val(b);
        Tensor& ga = t.grad_ref(a.id);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * vb2[i];
      }
      if (t.needs_grad(b)) {
        const Tensor& va2 = t.val(a);
        Tensor& gb = t.grad_ref(b.id);
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[i] * va2[i];
      }
    };
  }
  return o;
}

Var Tape::scale(Var a, double s) {
  Tensor out = val(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= s;
  const bool rg = needs_grad(a);
  Var o = push(std::move(out), rg, nullptr, "scale");
  if (rg) {
    const int oid = o.id;
    nodes_[oid].back = [a, s, oid](Tape& t) {
      const Tensor& g = t.nodes_[oid].grad;
      Tensor& ga = t.grad_ref(a.id);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * s;
    };
  }
  return o;
}

Var Tape::add_rowbias(Var m, Var bias) {
  const Tensor& vm = val(m);
  const Tensor& vb = val(bias);
  if (vb.rows() != 1 || vb.cols() != vm.cols())
    throw ShapeError("add_rowbias: bias must be [1 x cols]");
  Tensor out = vm;
  const int r = vm.rows(), c = vm.cols();
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out.at(i, j) += vb.at(0, j);
  const bool rg = needs_grad(m) || needs_grad(bias);
  Var o = push(std::move(out), rg, nullptr, "add_rowbias");
  if (rg) {
    const int oid = o.id;
    nodes_[oid].back = [m, bias, oid, r, c](Tape& t) {
      const Tensor& g = t.nodes_[oid].grad;
      if (t.needs_grad(m)) accumulate(t.grad_ref(m.id), g);
      if (t.needs_grad(bias)) {
        Tensor& gb = t.grad_ref(bias.id);
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < c; ++j) gb.at(0, j) += g.at(i, j);
      }
    };
  }
  return o;
}

Var Tape::matmul(Var a, Var b, bool trans_a, bool trans_b) {
  Tensor out = raw_matmul(val(a), trans_a, val(b), trans_b);
  const bool rg = needs_grad(a) || needs_grad(b);
  Var o = push(std::move(out), rg, nullptr, "matmul");
  if (rg) {
    const int oid = o.id;
    nodes_[oid].back = [a, b, trans_a, trans_b, oid](Tape& t) {
      const Tensor& g = t.nodes_[oid].grad;
      const Tensor& va = t.val(a);
      const Tensor& vb = t.val(b);
      if (t.needs_grad(a)) {
        Tensor da;
        if (!trans_a && !trans_b) da = raw_matmul(g, false, vb, true);
        else if (!trans_a && trans_b) da = raw_matmul(g, false, vb, false);
        else if (trans_a && !trans_b) da = raw_matmul(vb, false, g, true);
        else da = raw_matmul(vb, true, g, true);
        accumulate(t.grad_ref(a.id), da);
      }
      if (t.needs_grad(b)) {
        Tensor db;
        if (!trans_a && !trans_b) db = raw_matmul(va, true, g, false);
        else if (!trans_a && trans_b) db = raw_matmul(g, true, va, false);
        else if (trans_a && !trans_b) db = raw_matmul(va, false, g, false);
        else db = raw_matmul(g, true, va, true);
        accumulate(t.grad_ref(b.id), db);
      }
    };
  }
  return o;
}

Var Tape::relu(Var a) {
  Tensor out = val(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] > 0.0 ? out[i] : 0.0;
  const bool rg = needs_grad(a);
  Var o = push(std::move(out), rg, nullptr, "relu");
  if (rg) {
    const int oid = o.id;
    nodes_[oid].back = [a, oid](Tape& t) {
      const Tensor& g = t.nodes_[oid].grad;
      const Tensor& va = t.val(a);
      Tensor& ga = t.grad_ref(a.id);
      for (std::size_t i = 0; i < ga.size(); ++i)
        if (va[i] > 0.0) ga[i] += g[i];
    };
  }
  return o;
}

Var Tape::tanh_act(Var a) {
  Tensor out = val(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(out[i]);
  const bool rg = needs_grad(a);
  Var o = push(std::move(out), rg, nullptr, "tanh");
  if (rg) {
    const int oid = o.id;
    nodes_[oid].back = [a, oid](Tape& t) {
      const Tensor& g = t.nodes_[oid].grad;
      const Tensor& y = t.nodes_[oid].value;
      Tensor& ga = t.grad_ref(a.id);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
    };
  }
  return o;
}

Var Tape::sigmoid_act(Var a) {
  Tensor out = val(a);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = out[i];
    out[i] = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  }
  const bool rg = needs_grad(a);
  Var o = push(std::move(out), rg, nullptr, "sigmoid");
  if (rg) {
    const int oid = o.id;
    nodes_[oid].back = [a, oid](Tape& t) {
      const Tensor& g = t.nodes_[oid].grad;
      const Tensor& y = t.nodes_[oid].value;
      Tensor& ga = t.grad_ref(a.id);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
    };
  }
  return o;
}

Var Tape::gelu(Var a) {
  Tensor out = val(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = gelu_value(out[i]);
  const bool rg = needs_grad(a);
  Var o = push(std::move(out), rg, nullptr, "gelu");
  if (rg) {
    const int oid = o.id;
    nodes_[oid].back = [a, oid](Tape& t) {
      const Tensor& g = t.nodes_[oid].grad;
      const Tensor& va = t.val(a);
      Tensor& ga = t.grad_ref(a.id);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * gelu_deriv(va[i]);
    };
  }
  return o;
}

Var Tape::masked_softmax_rows(Var scores, const SurroundMask& mask) {
  Tensor out = masked_softmax(val(scores), mask);
  const bool rg = needs_grad(scores);
  Var o = push(std::move(out), rg, nullptr, "masked_softmax");
  if (rg) {
    const int oid = o.id;
    nodes_[oid].back = [scores, oid](Tape& t) {
      const Tensor& g = t.nodes_[oid].grad;
      const Tensor& p = t.nodes_[oid].value;
      Tensor& gs = t.grad_ref(scores.id);
      const int n = p.rows(), c = p.cols();
      for (int i = 0; i < n; ++i) {
        double dot = 0.0;
        for (int j = 0; j < c; ++j) dot += g.at(i, j) * p.at(i, j);
        for (int j = 0; j < c; ++j) gs.at(i, j) += p.at(i, j) * (g.at(i, j) - dot);
      }
    };
  }
  return o;
}

Var Tape::softmax_rows(Var scores) {
  const Tensor& v = val(scores);
  if (v.rows() == v.cols()) return masked_softmax_rows(scores, SurroundMask::all_allowed(v.rows()));
  // Rectangular case: each row normalized over all columns.
  Tensor out = v;
  for (int i = 0; i < v.rows(); ++i) {
    double mx = out.at(i, 0);
    for (int j = 1; j < v.cols(); ++j) mx = std::max(mx, out.at(i, j));
    double denom = 0.0;
    for (int j = 0; j < v.cols(); ++j) denom += std::exp(out.at(i, j) - mx);
    for (int j = 0; j < v.cols(); ++j) out.at(i, j) = std::exp(out.at(i, j) - mx) / denom;
  }
  const bool rg = needs_grad(scores);
  Var o = push(std::move(out), rg, nullptr, "softmax");
  if (rg) {
    const int oid = o.id;
    nodes_[oid].back = [scores, oid](Tape& t) {
      const Tensor& g = t.nodes_[oid].grad;
      const Tensor& p = t.nodes_[oid].value;
      Tensor& gs = t.grad_ref(scores.id);
      for (int i = 0; i < p.rows(); ++i) {
        double dot = 0.0;
        for (int j = 0; j < p.cols(); ++j) dot += g.at(i, j) * p.at(i, j);
        for (int j = 0; j < p.cols(); ++j) gs.at(i, j) += p.at(i, j) * (g.at(i, j) - dot);
      }
    };
  }
  return o;
}

Var Tape::layer_norm_rows(Var x, Var gain, Var bias, double eps) {
  const Tensor& vx = val(x);
  const Tensor& vg = val(gain);
  const Tensor& vb = val(bias);
  const int r = vx.rows(), c = vx.cols();
  if (vg.rows() != 1 || vg.cols() != c || vb.rows() != 1 || vb.cols() != c)
    throw ShapeError("layer_norm: gain/bias must be [1 x cols]");
  Tensor out({r, c});
  Tensor xhat({r, c});
  Tensor inv_sigma({r, 1});
  for (int i = 0; i < r; ++i) {
    double mu = 0.0;
    for (int j = 0; j < c; ++j) mu += vx.at(i, j);
    mu /= c;
    double var = 0.0;
    for (int j = 0; j < c; ++j) {
      const double d = vx.at(i, j) - mu;
      var += d * d;
    }
    var /= c;
    const double is = 1.0 / std::sqrt(var + eps);
    inv_sigma.at(i, 0) = is;
    for (int j = 0; j < c; ++j) {
      xhat.at(i, j) = (vx.at(i, j) - mu) * is;
      out.at(i, j) = vg.at(0, j) * xhat.at(i, j) + vb.at(0, j);
    }
  }
  const bool rg = needs_grad(x) || needs_grad(gain) || needs_grad(bias);
  Var o = push(std::move(out), rg, nullptr, "layer_norm");
  if (rg) {
    const int oid = o.id;
    auto xh = std::make_shared<Tensor>(std::move(xhat));
    auto is = std::make_shared<Tensor>(std::move(inv_sigma));
    nodes_[oid].back = [x, gain, bias, oid, xh, is, r, c](Tape& t) {
      const Tensor& g = t.nodes_[oid].grad;
      const Tensor& vg2 = t.val(gain);
      if (t.needs_grad(gain)) {
        Tensor& gg = t.grad_ref(gain.id);
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < c; ++j) gg.at(0, j) += g.at(i, j) * xh->at(i, j);
      }
      if (t.needs_grad(bias)) {
        Tensor& gb = t.grad_ref(bias.id);
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < c; ++j) gb.at(0, j) += g.at(i, j);
      }
      if (t.needs_grad(x)) {
        Tensor& gx = t.grad_ref(x.id);
        for (int i = 0; i < r; ++i) {
          double sum_d = 0.0, sum_dx = 0.0;
          for (int j = 0; j < c; ++j) {
            const double d = g.at(i, j) * vg2.at(0, j);
            sum_d += d;
            sum_dx += d * xh->at(i, j);
          }
          const double inv = is->at(i, 0);
          for (int j = 0; j < c; ++j) {
            const double d = g.at(i, j) * vg2.at(0, j);
            gx.at(i, j) += inv * (d - sum_d / c - xh->at(i, j) * sum_dx / c);
          }
        }
      }
    };
  }
  return o;
}

Var Tape::gather_rows(Var table, std::vector<int> ids) {
  const Tensor& vt = val(table);
  const int c = vt.cols();
  Tensor out({static_cast<int>(ids.size()), c});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const int r = ids[i];
    if (r < 0 || r >= vt.rows()) throw ShapeError("gather_rows: id out of table range");
    for (int j = 0; j < c; ++j) out.at(static_cast<int>(i), j) = vt.at(r, j);
  }
  const bool rg = needs_grad(table);
  Var o = push(std::move(out), rg, nullptr, "gather_rows");
  if (rg) {
    const int oid = o.id;
    auto idv = std::make_shared<std::vector<int>>(std::move(ids));
    nodes_[oid].back = [table, oid, idv, c](Tape& t) {
      const Tensor& g = t.nodes_[oid].grad;
      Tensor& gt = t.grad_ref(table.id);
      for (std::size_t i = 0; i < idv->size(); ++i)
        for (int j = 0; j < c; ++j) gt.at((*idv)[i], j) += g.at(static_cast<int>(i), j);
    };
  }
  return o;
}

Var Tape::slice_rows(Var x, int r0, int r1) {
  const Tensor& vx = val(x);
  if (r0 < 0 || r1 > vx.rows() || r0 >= r1) throw ShapeError("slice_rows: bad range");
  const int c = vx.cols();
  Tensor out({r1 - r0, c});
  for (int i = r0; i < r1; ++i)
    for (int j = 0; j < c; ++j) out.at(i - r0, j) = vx.at(i, j);
  const bool rg = needs_grad(x);
  Var o = push(std::move(out), rg, nullptr, "slice_rows");
  if (rg) {
    const int oid = o.id;
    nodes_[oid].back = [x, oid, r0, r1, c](Tape& t) {
      const Tensor& g = t.nodes_[oid].grad;
      Tensor& gx = t.grad_ref(x.id);
      for (int i = r0; i < r1; ++i)
        for (int j = 0; j < c; ++j) gx.at(i, j) += g.at(i - r0, j);
    };
  }
  return o;
}

Var Tape::slice_cols(Var x, int c0, int c1) {
  const Tensor& vx = val(x);
  if (c0 < 0 || c1 > vx.cols() || c0 >= c1) throw ShapeError("slice_cols: bad range");
  const int r = vx.rows();
  Tensor out({r, c1 - c0});
  for (int i = 0; i < r; ++i)
    for (int j = c0; j < c1; ++j) out.at(i, j - c0) = vx.at(i, j);
  const bool rg = needs_grad(x);
  Var o = push(std::move(out), rg, nullptr, "slice_cols");
  if (rg) {
    const int oid = o.id;
    nodes_[oid].back = [x, oid, c0, c1, r](Tape& t) {
      const Tensor& g = t.nodes_[oid].grad;
      Tensor& gx = t.grad_ref(x.id);
      for (int i = 0; i < r; ++i)
        for (int j = c0; j < c1; ++j) gx.at(i, j) += g.at(i, j - c0);
    };
  }
  return o;
}

Var Tape::concat_rows(const std::vector<Var>& xs) {
  if (xs.empty()) throw ShapeError("concat_rows: empty input");
  const int c = val(xs[0]).cols();
  int r = 0;
  bool rg = false;
  for (Var v : xs) {
    if (val(v).cols() != c) throw ShapeError("concat_rows: column mismatch");
    r += val(v).rows();
    rg = rg || needs_grad(v);
  }
  Tensor out({r, c});
  int off = 0;
  for (Var v : xs) {
    const Tensor& t = val(v);
    for (int i = 0; i < t.rows(); ++i)
      for (int j = 0; j < c; ++j) out.at(off + i, j) = t.at(i, j);
    off += t.rows();
  }
  Var o = push(std::move(out), rg, nullptr, "concat_rows");
  if (rg) {
    const int oid = o.id;
    auto parts = std::make_shared<std::vector<Var>>(xs);
    nodes_[oid].back = [oid, parts, c](Tape& t) {
      const Tensor& g = t.nodes_[oid].grad;
      int off2 = 0;
      for (Var v : *parts) {
        const int pr = t.val(v).rows();
        if (t.needs_grad(v)) {
          Tensor& gv = t.grad_ref(v.id);
          for (int i = 0; i < pr; ++i)
            for (int j = 0; j < c; ++j) gv.at(i, j) += g.at(off2 + i, j);
        }
        off2 += pr;
      }
    };
  }
  return o;
}

Var Tape::concat_cols(const std::vector<Var>& xs) {
  if (xs.empty()) throw ShapeError("concat_cols: empty input");
  const int r = val(xs[0]).rows();
  int c = 0;
  bool rg = false;
  for (Var v : xs) {
    if (val(v).rows() != r) throw ShapeError("concat_cols: row mismatch");
    c += val(v).cols();
    rg = rg || needs_grad(v);
  }
  Tensor out({r, c});
  int off = 0;
  for (Var v : xs) {
    const Tensor& t = val(v);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < t.cols(); ++j) out.at(i, off + j) = t.at(i, j);
    off += t.cols();
  }
  Var o = push(std::move(out), rg, nullptr, "concat_cols");
  if (rg) {
    const int oid = o.id;
    auto parts = std::make_shared<std::vector<Var>>(xs);
    nodes_[oid].back = [oid, parts, r](Tape& t) {
      const Tensor& g = t.nodes_[oid].grad;
      int off2 = 0;
      for (Var v : *parts) {
        const int pc = t.val(v).cols();
        if (t.needs_grad(v)) {
          Tensor& gv = t.grad_ref(v.id);
          for (int i = 0; i < r; ++i)
            for (int j = 0; j < pc; ++j) gv.at(i, j) += g.at(i, off2 + j);
        }
        off2 += pc;
      }
    };
  }
  return o;
}

Var Tape::mean_rows(Var x) {
  const Tensor& vx = val(x);
  const int r = vx.rows(), c = vx.cols();
  Tensor out({1, c});
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out.at(0, j) += vx.at(i, j) / r;
  const bool rg = needs_grad(x);
  Var o = push(std::move(out), rg, nullptr, "mean_rows");
  if (rg) {
    const int oid = o.id;
    nodes_[oid].back = [x, oid, r, c](Tape& t) {
      const Tensor& g = t.nodes_[oid].grad;
      Tensor& gx = t.grad_ref(x.id);
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) gx.at(i, j) += g.at(0, j) / r;
    };
  }
  return o;
}

Var Tape::sum_all(Var x) {
  const Tensor& vx = val(x);
  double s = 0.0;
  for (std::size_t i = 0; i < vx.size(); ++i) s += vx[i];
  const bool rg = needs_grad(x);
  Var o = push(Tensor::scalar(s), rg, nullptr, "sum_all");
  if (rg) {
    const int oid = o.id;
    nodes_[oid].back = [x, oid](Tape& t) {
      const double g = t.nodes_[oid].grad[0];
      Tensor& gx = t.grad_ref(x.id);
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g;
    };
  }
  return o;
}

Var Tape::mean_all(Var x) {
  const double n = static_cast<double>(val(x).size());
  return scale(sum_all(x), 1.0 / n);
}

Var Tape::dropout(Var x, double rate, Rng& rng) {
  if (rate <= 0.0) return x;
  if (rate >= 1.0) throw ShapeError("dropout rate must be < 1");
  const Tensor& vx = val(x);
  Tensor mask(vx.shape());
  const double keep = 1.0 - rate;
  for (std::size_t i = 0; i < mask.size(); ++i)
    mask[i] = rng.uniform() < keep ? 1.0 / keep : 0.0;
  Var m = constant(std::move(mask));
  return mul(x, m);
}

Var Tape::bce_with_logits(Var logits, const Tensor& targets) {
  const Tensor& z = val(logits);
  if (!z.same_shape(targets)) throw ShapeError("bce_with_logits: target shape mismatch");
  double loss = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double zi = z[i];
    const double yi = targets[i];
    loss += std::max(zi, 0.0) - zi * yi + std::log1p(std::exp(-std::abs(zi)));
  }
  const bool rg = needs_grad(logits);
  Var o = push(Tensor::scalar(loss), rg, nullptr, "bce_with_logits");
  if (rg) {
    const int oid = o.id;
    auto ys = std::make_shared<Tensor>(targets);
    nodes_[oid].back = [logits, oid, ys](Tape& t) {
      const double g = t.nodes_[oid].grad[0];
      const Tensor& z2 = t.val(logits);
      Tensor& gz = t.grad_ref(logits.id);
      for (std::size_t i = 0; i < gz.size(); ++i) {
        const double zi = z2[i];
        const double p = zi >= 0.0 ? 1.0 / (1.0 + std::exp(-zi)) : std::exp(zi) / (1.0 + std::exp(zi));
        gz[i] += g * (p - (*ys)[i]);
      }
    };
  }
  return o;
}

Tensor masked_softmax(const Tensor& scores, const SurroundMask& mask) {
  if (scores.ndim() != 2 || scores.rows() != mask.n || scores.cols() != mask.n)
    throw ShapeError("masked_softmax: scores must be [N x N] matching the mask");
  if (!scores.all_finite()) throw NumericError("masked_softmax: non-finite scores");
  const int n = mask.n;
  Tensor out({n, n});
  for (int i = 0; i < n; ++i) {
    // additive penalty realization of the -inf entries
    double mx = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (int j = 0; j < n; ++j) {
      const double s = scores.at(i, j) + (mask.is_allowed(i, j) ? 0.0 : kMaskPenalty);
      if (s > mx) mx = s;
      any = any || mask.is_allowed(i, j);
    }
    if (!any) throw ShapeError("masked_softmax: row " + std::to_string(i) + " has no allowed position");
    double denom = 0.0;
    for (int j = 0; j < n; ++j) {
      const double s = scores.at(i, j) + (mask.is_allowed(i, j) ? 0.0 : kMaskPenalty);
      out.at(i, j) = std::exp(s - mx);
      denom += out.at(i, j);
    }
    for (int j = 0; j < n; ++j) out.at(i, j) /= denom;
  }
  return out;
}

}  // namespace turngcn
