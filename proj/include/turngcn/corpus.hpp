#pragma once

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "turngcn/tensor.hpp"

namespace turngcn {

/// One speaker-attributed utterance.
struct Turn {
  std::string speaker_id;
  std::string text;

  bool operator==(const Turn& o) const = default;
};

struct Dialogue {
  std::string dialogue_id;
  std::vector<Turn> turns;  // M >= 1, source order preserved

  bool operator==(const Dialogue& o) const = default;
};

/// Relation label inventory; ids are dense, file format "id<TAB>label".
class LabelMap {
 public:
  int add(const std::string& label);
  int id(const std::string& label) const;  // -1 when absent
  const std::string& label(int id) const;
  bool has(const std::string& label) const { return id(label) >= 0; }
  int size() const { return static_cast<int>(labels_.size()); }
  const std::vector<std::string>& labels() const { return labels_; }

  void save(const std::string& path) const;
  static LabelMap load(const std::string& path);
  static LabelMap from_labels(const std::vector<std::string>& labels);

  bool operator==(const LabelMap& o) const { return labels_ == o.labels_; }

 private:
  std::vector<std::string> labels_;
  std::map<std::string, int> index_;
};

/// One (dialogue, subject, object, gold relations) example.
struct RelationInstance {
  std::shared_ptr<const Dialogue> dialogue;
  std::string subject;
  std::string object;
  std::vector<std::string> gold_relations;  // sorted, unique
  std::shared_ptr<const LabelMap> label_space;
  std::map<std::string, std::string> metadata;  // opaque (entity types, triggers)

  void validate() const;
  bool same_values(const RelationInstance& o) const;
};

struct Dataset {
  std::vector<RelationInstance> instances;
  std::shared_ptr<const LabelMap> labels;

  bool empty() const { return instances.empty(); }
  std::size_t size() const { return instances.size(); }
};

/// One annotated utterance of an ERC conversation.
struct ErcUtteranceRecord {
  std::string speaker;
  std::string utterance;
  std::string emotion;
};

// ---- operations ----------------------------------------------------------

/// Renames speakers to S1, S2, ... in order of first appearance. Returns the
/// renamed dialogue and the original -> Sk mapping (first-appearance order).
std::pair<Dialogue, std::vector<std::pair<std::string, std::string>>> anonymize_speakers(
    const Dialogue& dialogue);

/// Converts an ERC conversation into relation instances: one per utterance,
/// subject = anonymized speaker, object = the utterance text verbatim,
/// gold relation = its emotion label. All instances share one dialogue.
std::vector<RelationInstance> erc_to_re(const std::vector<ErcUtteranceRecord>& conversation,
                                        std::shared_ptr<const LabelMap> emotions = nullptr);

/// Fills in speakers S1/S2 alternating by position (for corpora without
/// speaker annotation). Existing speaker fields are overwritten.
std::vector<ErcUtteranceRecord> assign_alternating_speakers(
    std::vector<ErcUtteranceRecord> conversation);

struct ImportStats {
  int num_dialogues = 0;
  int num_triples = 0;
};

/// Reads a DialogRE-format JSON file: an array of [turn-strings, relation
/// entries]; turn strings "Speaker: text"; each entry carries x, y and its
/// relation list. When `labels` is null the label inventory is derived from
/// the data (sorted); otherwise every relation must exist in it.
Dataset import_dialogre(const std::string& path, std::shared_ptr<const LabelMap> labels,
                        ImportStats* stats = nullptr);

// Canonical dataset: one JSON record per line,
// {dialogue_id, turns:[{speaker,text}], subject, object, relations:[...]}.
void save_canonical(const Dataset& data, const std::string& path);
Dataset load_canonical(const std::string& path, std::shared_ptr<const LabelMap> labels = nullptr);

// Canonical ERC file: one conversation per line,
// {conversation_id?, utterances:[{speaker?, utterance, emotion}]}.
std::vector<std::vector<ErcUtteranceRecord>> load_erc(const std::string& path);
void save_erc(const std::vector<std::vector<ErcUtteranceRecord>>& conversations,
              const std::string& path);

/// Derives the label inventory from gold relations present in `instances`
/// (lexicographically sorted for determinism).
LabelMap derive_labels(const std::vector<RelationInstance>& instances);

}  // namespace turngcn
