#include "turngcn/grad_check.hpp"

#include <cmath>

namespace turngcn {

ParamVars::ParamVars(Tape& tape, const ParamStore& store) : tape_(&tape), store_(&store) {
  vars_.reserve(store.count());
  for (std::size_t i = 0; i < store.count(); ++i) {
    index_[store.names()[i]] = i;
    vars_.push_back(tape.leaf(store.at(i)));
  }
}

Var ParamVars::operator[](const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ShapeError("unbound parameter: " + name);
  return vars_[it->second];
}

std::vector<Tensor> ParamVars::collect_grads() const {
  std::vector<Tensor> grads;
  grads.reserve(vars_.size());
  for (Var v : vars_) grads.push_back(tape_->grad(v));
  return grads;
}

namespace {

double eval_loss(const LossFn& loss_fn, const ParamStore& params) {
  Tape tape;
  ParamVars pv(tape, params);
  Var loss = loss_fn(tape, pv);
  return tape.val(loss)[0];
}

double relative_error(double a, double b) {
  constexpr double kTiny = 1e-8;
  if (std::abs(a) < kTiny && std::abs(b) < kTiny) return 0.0;
  return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

}  // namespace

GradReport grad_check(const LossFn& loss_fn, ParamStore& params, int num_samples, double eps,
                      uint64_t seed) {
  if (eps <= 0.0) throw ShapeError("grad_check requires eps > 0");
  GradReport report;
  if (num_samples <= 0) return report;

  // Determinism probe: two identical forwards must agree bit-for-bit.
  const double probe1 = eval_loss(loss_fn, params);
  const double probe2 = eval_loss(loss_fn, params);
  if (probe1 != probe2) throw NumericError("grad_check: loss function is not deterministic");

  // Analytic gradients from one taped pass.
  std::vector<Tensor> grads;
  {
    Tape tape;
    ParamVars pv(tape, params);
    Var loss = loss_fn(tape, pv);
    tape.backward(loss);
    grads = pv.collect_grads();
  }

  Rng rng(seed);
  const std::size_t n_tensors = params.count();
  report.samples.reserve(static_cast<std::size_t>(num_samples));
  for (int s = 0; s < num_samples; ++s) {
    const std::size_t ti = static_cast<std::size_t>(s) % n_tensors;
    Tensor& t = params.at(ti);
    const int idx = rng.uniform_int(static_cast<int>(t.size()));

    const double saved = t[static_cast<std::size_t>(idx)];
    t[static_cast<std::size_t>(idx)] = saved + eps;
    const double f_plus = eval_loss(loss_fn, params);
    t[static_cast<std::size_t>(idx)] = saved - eps;
    const double f_minus = eval_loss(loss_fn, params);
    t[static_cast<std::size_t>(idx)] = saved;

    GradCheckSample sample;
    sample.param = params.names()[ti];
    sample.index = idx;
    sample.analytic = grads[ti][static_cast<std::size_t>(idx)];
    sample.numeric = (f_plus - f_minus) / (2.0 * eps);
    sample.rel_err = relative_error(sample.analytic, sample.numeric);
    report.max_rel_err = std::max(report.max_rel_err, sample.rel_err);
    report.samples.push_back(std::move(sample));
  }
  return report;
}

}  // namespace turngcn
