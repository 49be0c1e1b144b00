#pragma once

#include <functional>
#include <string>
#include <vector>

#include "turngcn/params.hpp"
#include "turngcn/tape.hpp"

namespace turngcn {

/// Live binding of a ParamStore onto a Tape: one leaf per parameter, bound
/// eagerly in store order so node layout is deterministic.
class ParamVars {
 public:
  ParamVars(Tape& tape, const ParamStore& store);
  Var operator[](const std::string& name) const;
  const ParamStore& store() const { return *store_; }
  Tape& tape() const { return *tape_; }
  /// Gradient of every parameter after backward(), in store order.
  std::vector<Tensor> collect_grads() const;

 private:
  Tape* tape_;
  const ParamStore* store_;
  std::vector<Var> vars_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Scalar loss builder used by the gradient checker. Must be deterministic
/// for fixed parameter values (dropout disabled).
using LossFn = std::function<Var(Tape&, ParamVars&)>;

struct GradCheckSample {
  std::string param;
  int index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_err = 0.0;
};

struct GradReport {
  std::vector<GradCheckSample> samples;
  double max_rel_err = 0.0;
  bool pass(double tol) const { return max_rel_err < tol; }
};

/// Compares tape gradients against central finite differences
/// (f(t+eps) - f(t-eps)) / (2 eps) on `num_samples` scalar parameters.
/// Samples cycle round-robin over parameter tensors so every parameter
/// family is covered once num_samples >= the tensor count. Throws
/// NumericError if two identical forward passes disagree (loss_fn is not
/// deterministic). num_samples == 0 yields an empty report.
GradReport grad_check(const LossFn& loss_fn, ParamStore& params, int num_samples, double eps,
                      uint64_t seed);

}  // namespace turngcn
