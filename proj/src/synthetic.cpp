#include "turngcn/synthetic.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace turngcn {

namespace {

const std::vector<std::string>& name_pool() {
  static const std::vector<std::string> pool{"avery", "blake", "casey", "drew"};
  return pool;
}

const std::vector<std::string>& entity_pool() {
  static const std::vector<std::string> pool{"opal", "quartz", "topaz", "jasper"};
  return pool;
}

std::vector<std::string> split_ws(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  std::string w;
  while (is >> w) out.push_back(w);
  return out;
}

bool turn_has_token(const Turn& t, const std::string& token) {
  for (const std::string& w : split_ws(t.text))
    if (w == token) return true;
  return false;
}

struct DraftTurn {
  std::string speaker;
  std::vector<std::string> tokens;
};

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

void insert_token(DraftTurn& turn, const std::string& token, Rng& rng) {
  const int pos = rng.uniform_int(static_cast<int>(turn.tokens.size()) + 1);
  turn.tokens.insert(turn.tokens.begin() + pos, token);
}

}  // namespace

SyntheticConfig SyntheticConfig::standard() {
  SyntheticConfig c;
  c.vocab = {"lorem", "ipsum", "dolor", "amet", "porta", "vitae", "nulla", "felis"};
  c.rules = {
      {SyntheticRule::Family::SpeakerUtters, "alpha", "", "rel:speaks_alpha", "rel:quiet_alpha"},
      {SyntheticRule::Family::TextMention, "bravo", "", "rel:near_bravo", "rel:far_bravo"},
      {SyntheticRule::Family::CrossTurnPair, "gamma", "delta", "rel:pair_split", "rel:pair_none"},
  };
  return c;
}

void SyntheticConfig::validate() const {
  if (num_instances < 0) throw ShapeError("num_instances must be >= 0");
  if (num_speakers < 1) throw ShapeError("num_speakers must be >= 1");
  if (rules.empty()) throw ShapeError("at least one rule required");
  if (vocab.empty()) throw ShapeError("filler vocab must be non-empty");
  if (min_turns < 2 || max_turns < min_turns) throw ShapeError("bad turn count range");
  if (tokens_per_turn < 1) throw ShapeError("tokens_per_turn must be >= 1");
  std::set<std::string> labels;
  std::set<std::string> reserved(vocab.begin(), vocab.end());
  for (const SyntheticRule& r : rules) {
    labels.insert(r.positive_label);
    labels.insert(r.negative_label);
    if (r.trigger_a.empty()) throw ShapeError("rule without trigger token");
    if (reserved.count(r.trigger_a) || (!r.trigger_b.empty() && reserved.count(r.trigger_b)))
      throw ShapeError("trigger tokens must not collide with the filler vocab");
    if (r.family == SyntheticRule::Family::CrossTurnPair && r.trigger_b.empty())
      throw ShapeError("CrossTurnPair rule needs two trigger tokens");
  }
  if (labels.size() < 2) throw ShapeError("rules must span at least 2 relation labels");
}

Dataset gen_synthetic(const SyntheticConfig& config, uint64_t seed) {
  config.validate();
  Rng rng(seed);

  std::vector<std::string> all_labels;
  for (const SyntheticRule& r : config.rules) {
    all_labels.push_back(r.positive_label);
    all_labels.push_back(r.negative_label);
  }
  std::sort(all_labels.begin(), all_labels.end());
  all_labels.erase(std::unique(all_labels.begin(), all_labels.end()), all_labels.end());
  auto labels = std::make_shared<const LabelMap>(LabelMap::from_labels(all_labels));

  Dataset out;
  out.labels = labels;
  std::vector<int> per_rule_count(config.rules.size(), 0);

  for (int n = 0; n < config.num_instances; ++n) {
    const std::size_t ri = static_cast<std::size_t>(n) % config.rules.size();
    const SyntheticRule& rule = config.rules[ri];
    const bool positive = (per_rule_count[ri]++ % 2) == 0;

    const int n_turns = config.min_turns + rng.uniform_int(config.max_turns - config.min_turns + 1);
    std::vector<DraftTurn> turns(static_cast<std::size_t>(n_turns));
    for (int i = 0; i < n_turns; ++i) {
      // Round-robin base keeps every speaker present; the random swap varies order.
      turns[i].speaker = "S" + std::to_string(1 + (i % config.num_speakers));
      for (int k = 0; k < config.tokens_per_turn; ++k)
        turns[i].tokens.push_back(config.vocab[rng.uniform_int(static_cast<int>(config.vocab.size()))]);
    }
    if (n_turns >= 2 && rng.uniform() < 0.5) {
      const int a = rng.uniform_int(n_turns);
      const int b = rng.uniform_int(n_turns);
      std::swap(turns[static_cast<std::size_t>(a)].speaker,
                turns[static_cast<std::size_t>(b)].speaker);
    }

    RelationInstance inst;
    switch (rule.family) {
      case SyntheticRule::Family::SpeakerUtters: {
        const int subj_turn = rng.uniform_int(n_turns);
        inst.subject = turns[subj_turn].speaker;
        const std::string entity = entity_pool()[rng.uniform_int(static_cast<int>(entity_pool().size()))];
        insert_token(turns[rng.uniform_int(n_turns)], entity, rng);
        inst.object = entity;
        if (positive) {
          insert_token(turns[subj_turn], rule.trigger_a, rng);
        } else {
          // Optionally plant the trigger in another speaker's turn so a
          // bag-of-words shortcut cannot recover the label.
          std::vector<int> other;
          for (int i = 0; i < n_turns; ++i)
            if (turns[i].speaker != inst.subject) other.push_back(i);
          if (!other.empty() && rng.uniform() < 0.5)
            insert_token(turns[other[rng.uniform_int(static_cast<int>(other.size()))]],
                         rule.trigger_a, rng);
        }
        break;
      }
      case SyntheticRule::Family::TextMention: {
        const std::string name = name_pool()[rng.uniform_int(static_cast<int>(name_pool().size()))];
        const int name_turn = rng.uniform_int(n_turns);
        insert_token(turns[name_turn], name, rng);
        inst.subject = name;
        inst.object = turns[rng.uniform_int(n_turns)].speaker;
        if (positive) {
          insert_token(turns[name_turn], rule.trigger_a, rng);
        } else if (n_turns >= 2 && rng.uniform() < 0.7) {
          int other = rng.uniform_int(n_turns - 1);
          if (other >= name_turn) ++other;
          insert_token(turns[other], rule.trigger_a, rng);
        }
        break;
      }
      case SyntheticRule::Family::CrossTurnPair: {
        const int subj_turn = rng.uniform_int(n_turns);
        inst.subject = turns[subj_turn].speaker;
        const std::string entity = entity_pool()[rng.uniform_int(static_cast<int>(entity_pool().size()))];
        insert_token(turns[rng.uniform_int(n_turns)], entity, rng);
        inst.object = entity;
        if (positive) {
          const int ta = rng.uniform_int(n_turns);
          int tb = rng.uniform_int(n_turns - 1);
          if (tb >= ta) ++tb;
          insert_token(turns[ta], rule.trigger_a, rng);
          insert_token(turns[tb], rule.trigger_b, rng);
        } else {
          switch (rng.uniform_int(3)) {
            case 0: insert_token(turns[rng.uniform_int(n_turns)], rule.trigger_a, rng); break;
            case 1: insert_token(turns[rng.uniform_int(n_turns)], rule.trigger_b, rng); break;
            default: break;  // neither trigger
          }
        }
        break;
      }
    }

    auto dialogue = std::make_shared<Dialogue>();
    dialogue->dialogue_id = "syn" + std::to_string(n);
    for (const DraftTurn& t : turns) dialogue->turns.push_back(Turn{t.speaker, join(t.tokens)});
    inst.dialogue = std::shared_ptr<const Dialogue>(dialogue);
    inst.gold_relations = {positive ? rule.positive_label : rule.negative_label};
    inst.label_space = labels;
    inst.validate();
    out.instances.push_back(std::move(inst));
  }
  return out;
}

std::string synthetic_rule_label(const SyntheticRule& rule, const RelationInstance& inst) {
  const std::vector<Turn>& turns = inst.dialogue->turns;
  bool positive = false;
  switch (rule.family) {
    case SyntheticRule::Family::SpeakerUtters:
      for (const Turn& t : turns)
        if (t.speaker_id == inst.subject && turn_has_token(t, rule.trigger_a)) positive = true;
      break;
    case SyntheticRule::Family::TextMention:
      for (const Turn& t : turns)
        if (turn_has_token(t, inst.subject) && turn_has_token(t, rule.trigger_a)) positive = true;
      break;
    case SyntheticRule::Family::CrossTurnPair:
      for (std::size_t i = 0; i < turns.size() && !positive; ++i)
        for (std::size_t j = 0; j < turns.size() && !positive; ++j)
          if (i != j && turn_has_token(turns[i], rule.trigger_a) &&
              turn_has_token(turns[j], rule.trigger_b))
            positive = true;
      break;
  }
  return positive ? rule.positive_label : rule.negative_label;
}

const SyntheticRule& synthetic_rule_for(const SyntheticConfig& config,
                                        const RelationInstance& inst) {
  if (inst.gold_relations.size() != 1)
    throw DataError("synthetic instances carry exactly one gold relation");
  const std::string& label = inst.gold_relations.front();
  for (const SyntheticRule& r : config.rules)
    if (r.positive_label == label || r.negative_label == label) return r;
  throw DataError("no rule produces label: " + label);
}

}  // namespace turngcn
