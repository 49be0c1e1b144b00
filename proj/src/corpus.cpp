#include "turngcn/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

namespace turngcn {

using nlohmann::json;

namespace {

std::string trimmed(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> sorted_unique(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

int LabelMap::add(const std::string& label) {
  auto it = index_.find(label);
  if (it != index_.end()) return it->second;
  const int id = static_cast<int>(labels_.size());
  labels_.push_back(label);
  index_[label] = id;
  return id;
}

int LabelMap::id(const std::string& label) const {
  auto it = index_.find(label);
  return it == index_.end() ? -1 : it->second;
}

const std::string& LabelMap::label(int id) const {
  if (id < 0 || id >= size()) throw ShapeError("label id out of range");
  return labels_[static_cast<std::size_t>(id)];
}

void LabelMap::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write label map: " + path);
  for (int i = 0; i < size(); ++i) out << i << '\t' << labels_[static_cast<std::size_t>(i)] << '\n';
}

LabelMap LabelMap::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open label map: " + path);
  LabelMap m;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trimmed(line).empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw DataError("label map line " + std::to_string(lineno) + " lacks a tab separator");
    const int id = std::stoi(line.substr(0, tab));
    const std::string label = line.substr(tab + 1);
    if (id != m.size())
      throw DataError("label map ids must be dense and ascending (line " +
                      std::to_string(lineno) + ")");
    m.add(label);
  }
  return m;
}

LabelMap LabelMap::from_labels(const std::vector<std::string>& labels) {
  LabelMap m;
  for (const std::string& l : labels) m.add(l);
  return m;
}

void RelationInstance::validate() const {
  if (!dialogue || dialogue->turns.empty()) throw DataError("instance without dialogue turns");
  if (subject.empty() || object.empty()) throw DataError("instance with empty argument");
  for (const Turn& t : dialogue->turns) {
    if (t.speaker_id.empty()) throw DataError("turn with empty speaker id");
    if (trimmed(t.text).empty()) throw DataError("turn with empty text");
  }
  if (label_space)
    for (const std::string& r : gold_relations)
      if (!label_space->has(r)) throw DataError("gold relation outside label space: " + r);
}

bool RelationInstance::same_values(const RelationInstance& o) const {
  return subject == o.subject && object == o.object && gold_relations == o.gold_relations &&
         dialogue && o.dialogue && *dialogue == *o.dialogue;
}

std::pair<Dialogue, std::vector<std::pair<std::string, std::string>>> anonymize_speakers(
    const Dialogue& dialogue) {
  Dialogue out;
  out.dialogue_id = dialogue.dialogue_id;
  std::vector<std::pair<std::string, std::string>> mapping;
  std::map<std::string, std::string> seen;
  for (const Turn& t : dialogue.turns) {
    auto it = seen.find(t.speaker_id);
    if (it == seen.end()) {
      const std::string name = "S" + std::to_string(mapping.size() + 1);
      it = seen.emplace(t.speaker_id, name).first;
      mapping.emplace_back(t.speaker_id, name);
    }
    out.turns.push_back(Turn{it->second, t.text});
  }
  return {std::move(out), std::move(mapping)};
}

std::vector<RelationInstance> erc_to_re(const std::vector<ErcUtteranceRecord>& conversation,
                                        std::shared_ptr<const LabelMap> emotions) {
  if (conversation.empty()) throw DataError("erc_to_re: empty conversation");
  Dialogue raw;
  for (const ErcUtteranceRecord& r : conversation) raw.turns.push_back(Turn{r.speaker, r.utterance});
  auto [anon, mapping] = anonymize_speakers(raw);
  (void)mapping;
  auto shared = std::make_shared<const Dialogue>(std::move(anon));

  std::vector<RelationInstance> out;
  out.reserve(conversation.size());
  for (std::size_t i = 0; i < conversation.size(); ++i) {
    RelationInstance inst;
    inst.dialogue = shared;
    inst.subject = shared->turns[i].speaker_id;
    inst.object = conversation[i].utterance;  // verbatim
    inst.gold_relations = {conversation[i].emotion};
    inst.label_space = emotions;
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<ErcUtteranceRecord> assign_alternating_speakers(
    std::vector<ErcUtteranceRecord> conversation) {
  for (std::size_t i = 0; i < conversation.size(); ++i)
    conversation[i].speaker = (i % 2 == 0) ? "S1" : "S2";
  return conversation;
}

namespace {

Turn parse_turn_string(const std::string& raw, int lineno) {
  const std::size_t sep = raw.find(": ");
  if (sep == std::string::npos)
    throw DataError("turn string without 'speaker: text' separator (entry " +
                    std::to_string(lineno) + "): " + raw);
  Turn t;
  t.speaker_id = trimmed(raw.substr(0, sep));  // compound "A, B" kept verbatim
  t.text = raw.substr(sep + 2);
  if (t.speaker_id.empty() || trimmed(t.text).empty())
    throw DataError("turn string with empty speaker or text (entry " + std::to_string(lineno) +
                    ")");
  return t;
}

}  // namespace

Dataset import_dialogre(const std::string& path, std::shared_ptr<const LabelMap> labels,
                        ImportStats* stats) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open DialogRE file: " + path);
  json root;
  try {
    in >> root;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed DialogRE JSON: ") + e.what());
  }
  if (!root.is_array()) throw DataError("DialogRE root must be an array");

  Dataset out;
  ImportStats st;
  std::vector<std::string> seen_labels;

  for (std::size_t di = 0; di < root.size(); ++di) {
    const json& item = root[di];
    if (!item.is_array() || item.size() < 2)
      throw DataError("DialogRE entry " + std::to_string(di) + " must be [turns, relations]");
    auto dialogue = std::make_shared<Dialogue>();
    dialogue->dialogue_id = "d" + std::to_string(di);
    for (const json& ts : item[0]) {
      if (!ts.is_string()) throw DataError("turn entries must be strings");
      dialogue->turns.push_back(parse_turn_string(ts.get<std::string>(), static_cast<int>(di)));
    }
    if (dialogue->turns.empty())
      throw DataError("DialogRE entry " + std::to_string(di) + " has no turns");
    auto shared = std::shared_ptr<const Dialogue>(dialogue);
    ++st.num_dialogues;

    for (const json& rel : item[1]) {
      RelationInstance inst;
      inst.dialogue = shared;
      inst.subject = rel.at("x").get<std::string>();
      inst.object = rel.at("y").get<std::string>();
      std::vector<std::string> rnames;
      if (rel.contains("r")) {
        for (const json& r : rel.at("r")) rnames.push_back(r.get<std::string>());
      } else if (rel.contains("rid")) {
        if (!labels)
          throw DataError("relation ids present but no label map given (entry " +
                          std::to_string(di) + ")");
        for (const json& r : rel.at("rid")) {
          const int rid = r.get<int>();
          if (rid < 0 || rid >= labels->size())
            throw DataError("unknown relation id " + std::to_string(rid));
          rnames.push_back(labels->label(rid));
        }
      } else {
        throw DataError("relation entry without 'r' or 'rid' (entry " + std::to_string(di) + ")");
      }
      inst.gold_relations = sorted_unique(std::move(rnames));
      if (labels)
        for (const std::string& r : inst.gold_relations)
          if (!labels->has(r)) throw DataError("unknown relation label: " + r);
      for (const char* key : {"x_type", "y_type"})
        if (rel.contains(key) && rel.at(key).is_string())
          inst.metadata[key] = rel.at(key).get<std::string>();
      for (const std::string& r : inst.gold_relations) seen_labels.push_back(r);
      out.instances.push_back(std::move(inst));
      ++st.num_triples;
    }
  }

  out.labels = labels ? labels
                      : std::make_shared<const LabelMap>(
                            LabelMap::from_labels(sorted_unique(std::move(seen_labels))));
  for (RelationInstance& inst : out.instances) {
    inst.label_space = out.labels;
    inst.validate();
  }
  if (stats) *stats = st;
  return out;
}

void save_canonical(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write dataset: " + path);
  for (const RelationInstance& inst : data.instances) {
    json turns = json::array();
    for (const Turn& t : inst.dialogue->turns)
      turns.push_back(json{{"speaker", t.speaker_id}, {"text", t.text}});
    json rec{{"dialogue_id", inst.dialogue->dialogue_id},
             {"turns", std::move(turns)},
             {"subject", inst.subject},
             {"object", inst.object},
             {"relations", inst.gold_relations}};
    if (!inst.metadata.empty()) rec["metadata"] = inst.metadata;
    out << rec.dump() << '\n';
  }
}

Dataset load_canonical(const std::string& path, std::shared_ptr<const LabelMap> labels) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset: " + path);
  Dataset out;
  std::vector<std::string> seen_labels;
  // Records with identical dialogue_id + turns share one Dialogue object.
  std::map<std::string, std::shared_ptr<const Dialogue>> dialogue_cache;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trimmed(line).empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError("dataset line " + std::to_string(lineno) + ": " + e.what());
    }
    Dialogue d;
    d.dialogue_id = rec.value("dialogue_id", "d" + std::to_string(lineno));
    for (const json& t : rec.at("turns"))
      d.turns.push_back(Turn{t.at("speaker").get<std::string>(), t.at("text").get<std::string>()});
    const std::string cache_key = d.dialogue_id;
    auto it = dialogue_cache.find(cache_key);
    std::shared_ptr<const Dialogue> shared;
    if (it != dialogue_cache.end() && *it->second == d) {
      shared = it->second;
    } else {
      shared = std::make_shared<const Dialogue>(std::move(d));
      dialogue_cache[cache_key] = shared;
    }
    RelationInstance inst;
    inst.dialogue = shared;
    inst.subject = rec.at("subject").get<std::string>();
    inst.object = rec.at("object").get<std::string>();
    inst.gold_relations = sorted_unique(rec.at("relations").get<std::vector<std::string>>());
    if (rec.contains("metadata"))
      inst.metadata = rec.at("metadata").get<std::map<std::string, std::string>>();
    for (const std::string& r : inst.gold_relations) seen_labels.push_back(r);
    out.instances.push_back(std::move(inst));
  }
  out.labels = labels ? labels
                      : std::make_shared<const LabelMap>(
                            LabelMap::from_labels(sorted_unique(std::move(seen_labels))));
  for (RelationInstance& inst : out.instances) {
    inst.label_space = out.labels;
    inst.validate();
  }
  return out;
}

std::vector<std::vector<ErcUtteranceRecord>> load_erc(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open ERC file: " + path);
  std::vector<std::vector<ErcUtteranceRecord>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trimmed(line).empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError("ERC line " + std::to_string(lineno) + ": " + e.what());
    }
    std::vector<ErcUtteranceRecord> conv;
    for (const json& u : rec.at("utterances")) {
      ErcUtteranceRecord r;
      r.speaker = u.value("speaker", "");
      r.utterance = u.at("utterance").get<std::string>();
      r.emotion = u.at("emotion").get<std::string>();
      conv.push_back(std::move(r));
    }
    if (conv.empty()) throw DataError("ERC conversation without utterances (line " +
                                      std::to_string(lineno) + ")");
    out.push_back(std::move(conv));
  }
  return out;
}

void save_erc(const std::vector<std::vector<ErcUtteranceRecord>>& conversations,
              const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write ERC file: " + path);
  for (const auto& conv : conversations) {
    json utts = json::array();
    for (const ErcUtteranceRecord& r : conv)
      utts.push_back(json{{"speaker", r.speaker}, {"utterance", r.utterance}, {"emotion", r.emotion}});
    out << json{{"utterances", std::move(utts)}}.dump() << '\n';
  }
}

LabelMap derive_labels(const std::vector<RelationInstance>& instances) {
  std::vector<std::string> all;
  for (const RelationInstance& inst : instances)
    for (const std::string& r : inst.gold_relations) all.push_back(r);
  return LabelMap::from_labels(sorted_unique(std::move(all)));
}

}  // namespace turngcn
