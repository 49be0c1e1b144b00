#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "turngcn/corpus.hpp"

namespace turngcn {

/// One planted labeling rule. The gold relation of a generated instance is a
/// pure function of the planted surface pattern, so a hand-written checker
/// can recover it from the text alone.
struct SyntheticRule {
  enum class Family {
    SpeakerUtters,   // positive iff the subject speaker utters the trigger token
    TextMention,     // positive iff the trigger appears in the turn mentioning the subject
    CrossTurnPair,   // positive iff trigger_a and trigger_b appear in two different turns
  };
  Family family = Family::SpeakerUtters;
  std::string trigger_a;
  std::string trigger_b;  // CrossTurnPair only
  std::string positive_label;
  std::string negative_label;
};

struct SyntheticConfig {
  int num_instances = 64;
  int num_speakers = 3;
  std::vector<std::string> vocab;  // filler tokens
  std::vector<SyntheticRule> rules;
  int min_turns = 3;
  int max_turns = 6;
  int tokens_per_turn = 4;

  /// Three rules (one per family) over six labels, small filler vocab.
  static SyntheticConfig standard();
  void validate() const;
};

/// Deterministic planted-rule dataset. Instances cycle over the configured
/// rules; positives and negatives alternate within each rule so label
/// marginals stay balanced.
Dataset gen_synthetic(const SyntheticConfig& config, uint64_t seed);

/// Recovers the gold label of a generated instance by applying its rule to
/// the surface text. Independent reference used by tests: it never looks at
/// the stored gold relation.
std::string synthetic_rule_label(const SyntheticRule& rule, const RelationInstance& inst);

/// Matches the instance to the rule that produced it (via its label pair).
const SyntheticRule& synthetic_rule_for(const SyntheticConfig& config,
                                        const RelationInstance& inst);

}  // namespace turngcn
