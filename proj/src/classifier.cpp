#include "turngcn/classifier.hpp"

#include <cmath>

namespace turngcn {

Var build_feature(Tape& t, const LayerStates& states, const DialogueGraph& graph) {
  if (states.h.empty()) throw ShapeError("build_feature: missing layer states");
  std::vector<Var> parts;
  parts.reserve(states.h.size() * 3);
  for (const Var& h : states.h) {
    parts.push_back(t.slice_rows(h, graph.dialogue_node(), graph.dialogue_node() + 1));
    parts.push_back(t.slice_rows(h, graph.subject_node(), graph.subject_node() + 1));
    parts.push_back(t.slice_rows(h, graph.object_node(), graph.object_node() + 1));
  }
  return t.concat_cols(parts);
}

Var class_logits(Tape& t, ParamVars& p, Var feature) {
  return t.matmul(feature, p["cls.w"], false, true);
}

namespace {
double stable_sigmoid(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}
}  // namespace

RelationScores RelationScores::from_logits(const std::vector<double>& logits) {
  RelationScores s;
  s.logits = logits;
  s.probs.reserve(logits.size());
  for (double z : logits) s.probs.push_back(stable_sigmoid(z));
  return s;
}

RelationScores RelationScores::from_probs(const std::vector<double>& probs) {
  RelationScores s;
  s.probs = probs;
  s.logits.reserve(probs.size());
  for (double p : probs) {
    if (p <= 0.0 || p >= 1.0) throw ShapeError("probabilities must lie strictly in (0, 1)");
    s.logits.push_back(std::log(p / (1.0 - p)));
  }
  return s;
}

RelationScores predict_probs(const Tensor& feature, const Tensor& w) {
  if (feature.rows() != 1 || feature.cols() != w.cols())
    throw ShapeError("predict_probs: feature width " + feature.shape_str() +
                     " does not match classifier " + w.shape_str());
  std::vector<double> logits(static_cast<std::size_t>(w.rows()), 0.0);
  for (int r = 0; r < w.rows(); ++r) {
    double z = 0.0;
    for (int j = 0; j < w.cols(); ++j) z += feature.at(0, j) * w.at(r, j);
    logits[static_cast<std::size_t>(r)] = z;
  }
  return RelationScores::from_logits(logits);
}

double bce_loss(const RelationScores& scores, const std::vector<int>& gold_ids) {
  std::vector<char> is_gold(scores.probs.size(), 0);
  for (int g : gold_ids) {
    if (g < 0 || g >= scores.size()) throw ShapeError("gold label id out of range");
    is_gold[static_cast<std::size_t>(g)] = 1;
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < scores.logits.size(); ++i) {
    const double z = scores.logits[i];
    const double y = is_gold[i] ? 1.0 : 0.0;
    loss += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
  }
  return loss;
}

std::vector<int> decide_labels(const RelationScores& scores, DecodeMode mode) {
  if (scores.probs.empty()) throw ShapeError("decide_labels: empty scores");
  int best = 0;
  for (int i = 1; i < scores.size(); ++i)
    if (scores.probs[static_cast<std::size_t>(i)] > scores.probs[static_cast<std::size_t>(best)])
      best = i;  // strict > keeps the lowest id on ties
  if (mode == DecodeMode::SingleLabel) return {best};
  std::vector<int> picked;
  for (int i = 0; i < scores.size(); ++i)
    if (scores.probs[static_cast<std::size_t>(i)] > 0.5) picked.push_back(i);
  if (picked.empty()) picked.push_back(best);
  return picked;
}

}  // namespace turngcn
