#pragma once

#include <vector>

#include "turngcn/gcn_bilstm.hpp"

namespace turngcn {

/// Concatenates (dialogue, subject, object) node states of every layer
/// 0..G, layers ascending, into the 1 x 3(G+1)d classification feature.
Var build_feature(Tape& tape, const LayerStates& states, const DialogueGraph& graph);

/// Relation logits: feature times the per-relation weight rows (no bias).
Var class_logits(Tape& tape, ParamVars& params, Var feature);

/// Per-relation probabilities with the logits they came from. Values are
/// strictly inside (0, 1).
struct RelationScores {
  std::vector<double> probs;
  std::vector<double> logits;

  int size() const { return static_cast<int>(probs.size()); }
  static RelationScores from_logits(const std::vector<double>& logits);
  /// Inverse-sigmoid construction; probabilities must lie strictly in (0,1).
  static RelationScores from_probs(const std::vector<double>& probs);
};

/// Pure-forward scoring: sigmoid(feature . w_r) per relation row of `w`.
RelationScores predict_probs(const Tensor& feature, const Tensor& w);

/// Sum over labels of binary cross-entropy between each probability and the
/// 0/1 gold indicator, evaluated through the stabilized logit form.
double bce_loss(const RelationScores& scores, const std::vector<int>& gold_ids);

enum class DecodeMode { MultiLabel, SingleLabel };

/// MultiLabel: all labels with p > 0.5, falling back to the argmax when the
/// set would be empty. SingleLabel: the argmax. Ties break to the lowest id.
std::vector<int> decide_labels(const RelationScores& scores, DecodeMode mode);

}  // namespace turngcn
