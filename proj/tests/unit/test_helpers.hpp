#pragma once

#include <functional>
#include <vector>

#include "turngcn/corpus.hpp"
#include "turngcn/grad_check.hpp"
#include "turngcn/tape.hpp"

namespace turngcn::testing {

inline Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

/// Max |a-b| over all entries; requires same shapes.
inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Finite-difference check of one tape op: loss = sum(w * op(inputs)), each
/// input coordinate perturbed by +-eps. Returns the max relative error over
/// every input coordinate.
inline double fd_check_op(const std::function<Var(Tape&, const std::vector<Var>&)>& op,
                          std::vector<Tensor> inputs, uint64_t seed, double eps = 1e-6) {
  for (Tensor& t : inputs) t.requires_grad = true;

  auto eval = [&](std::vector<Tensor> const& values, std::vector<Tensor>* grads) {
    Tape tape;
    std::vector<Var> vars;
    vars.reserve(values.size());
    for (const Tensor& t : values) vars.push_back(tape.leaf(t));
    Var out = op(tape, vars);
    Rng wrng(seed ^ 0xabcdef12ULL);
    Tensor w = random_tensor(tape.val(out).shape(), wrng);
    Var loss = tape.sum_all(tape.mul(out, tape.constant(w)));
    const double value = tape.val(loss)[0];
    if (grads) {
      tape.backward(loss);
      grads->clear();
      for (Var v : vars) grads->push_back(tape.grad(v));
    }
    return value;
  };

  std::vector<Tensor> grads;
  eval(inputs, &grads);

  double max_rel = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      std::vector<Tensor> plus = inputs, minus = inputs;
      plus[k][i] += eps;
      minus[k][i] -= eps;
      const double fd = (eval(plus, nullptr) - eval(minus, nullptr)) / (2.0 * eps);
      const double an = grads[k][i];
      if (std::abs(fd) < 1e-8 && std::abs(an) < 1e-8) continue;
      max_rel = std::max(max_rel, std::abs(fd - an) / std::max(std::abs(fd), std::abs(an)));
    }
  }
  return max_rel;
}

/// Random dialogue + instance for structural property tests. Arguments are
/// drawn to exercise both the speaker and in-text mention routes.
inline RelationInstance random_instance(Rng& rng, int max_turns = 8) {
  static const std::vector<std::string> words{"red", "blue", "green", "moss",
                                              "tide", "lamp", "fox", "hill"};
  static const std::vector<std::string> names{"ada", "bob", "cleo"};
  const int n_turns = 1 + rng.uniform_int(max_turns);
  const int n_speakers = 1 + rng.uniform_int(3);
  auto dialogue = std::make_shared<Dialogue>();
  dialogue->dialogue_id = "r" + std::to_string(rng.uniform_int(1 << 20));
  for (int i = 0; i < n_turns; ++i) {
    Turn t;
    t.speaker_id = "S" + std::to_string(1 + rng.uniform_int(n_speakers));
    const int len = 1 + rng.uniform_int(6);
    for (int j = 0; j < len; ++j) {
      if (j) t.text += ' ';
      t.text += rng.uniform() < 0.2 ? names[static_cast<std::size_t>(rng.uniform_int(3))]
                                    : words[static_cast<std::size_t>(rng.uniform_int(8))];
    }
    dialogue->turns.push_back(std::move(t));
  }
  RelationInstance inst;
  inst.dialogue = dialogue;
  auto pick_argument = [&]() -> std::string {
    const double roll = rng.uniform();
    if (roll < 0.4)  // a speaker (sometimes one that actually speaks)
      return "S" + std::to_string(1 + rng.uniform_int(n_speakers + 1));
    if (roll < 0.8) return names[static_cast<std::size_t>(rng.uniform_int(3))];
    return words[static_cast<std::size_t>(rng.uniform_int(8))];
  };
  inst.subject = pick_argument();
  inst.object = pick_argument();
  inst.gold_relations = {"rel:any"};
  return inst;
}

}  // namespace turngcn::testing
