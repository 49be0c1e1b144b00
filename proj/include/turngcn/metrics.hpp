#pragma once

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "turngcn/corpus.hpp"

namespace turngcn {

using LabelSet = std::set<std::string>;

struct ClassScore {
  std::string label;
  int tp = 0, fp = 0, fn = 0;
  int support = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

struct MetricsReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::optional<double> f1c;
  std::optional<double> weighted_f1;
  std::optional<double> micro_f1_excl;
  std::vector<ClassScore> per_class;
  std::vector<std::string> warnings;

  /// Per-class table plus aggregates, human-readable.
  std::string to_text() const;
  /// Machine-readable "key<TAB>value" lines.
  std::string to_kv() const;
};

/// Micro precision/recall/F1 over (instance, relation) pairs:
/// TP = sum |pred ∩ gold|, FP = sum |pred \ gold|, FN = sum |gold \ pred|.
/// Also fills the per-class breakdown. Throws on misaligned lists.
MetricsReport score_triples(const std::vector<LabelSet>& preds, const std::vector<LabelSet>& golds);

/// Weighted-F1 for single-label predictions: per-class one-vs-rest F1,
/// weighted by gold support. Throws on multi-label input.
double score_weighted_f1(const std::vector<LabelSet>& preds, const std::vector<LabelSet>& golds);

/// Micro-F1 over all classes except `excluded_label`: the excluded label
/// contributes no TP; predicting it against another gold counts as that
/// gold's FN, and predicting another label against an excluded gold counts
/// as that label's FP. A zero denominator reports 0 with a warning. Throws
/// on multi-label input.
double score_micro_f1_excl(const std::vector<LabelSet>& preds, const std::vector<LabelSet>& golds,
                           const std::string& excluded_label,
                           std::vector<std::string>* warnings = nullptr);

/// Predicts the relation set of an instance given only its first
/// `prefix_turns` turns.
using PrefixPredictor = std::function<LabelSet(const RelationInstance&, int prefix_turns)>;
/// Chooses how many leading turns of the instance's dialogue to keep.
using PrefixRule = std::function<int(const RelationInstance&)>;

/// Shortest prefix of whole turns containing at least one mention of each
/// argument (speaker equality or in-text token match); the full dialogue
/// when no such prefix exists.
int default_prefix_rule(const RelationInstance& instance);

/// F1 with every instance re-scored on the dialogue prefix selected by
/// `rule` (default_prefix_rule when empty).
MetricsReport score_f1c(const PrefixPredictor& model, const std::vector<RelationInstance>& instances,
                        const PrefixRule& rule = nullptr);

}  // namespace turngcn
