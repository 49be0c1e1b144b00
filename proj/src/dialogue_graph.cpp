#include "turngcn/dialogue_graph.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "turngcn/tokenizer.hpp"

namespace turngcn {

std::string to_string(EdgeType k) {
  switch (k) {
    case EdgeType::Dialogue: return "dialogue";
    case EdgeType::Argument: return "argument";
    case EdgeType::Speaker: return "speaker";
  }
  return "?";
}

int DialogueGraph::count(EdgeType k) const {
  int n = 0;
  for (const Edge& e : edges) n += e.type == k ? 1 : 0;
  return n;
}

Tensor DialogueGraph::adjacency(EdgeType k) const {
  Tensor a({num_nodes(), num_nodes()});
  for (const Edge& e : edges) {
    if (e.type != k) continue;
    a.at(e.u, e.v) = 1.0;
    a.at(e.v, e.u) = 1.0;
  }
  return a;
}

std::string DialogueGraph::to_debug_text() const {
  std::ostringstream os;
  os << "nodes " << num_nodes() << '\n';
  os << "  0 dialogue\n";
  for (int i = 0; i < num_turns; ++i) os << "  " << turn_node(i) << " turn " << (i + 1) << '\n';
  os << "  " << subject_node() << " subject\n";
  os << "  " << object_node() << " object\n";
  for (EdgeType k : {EdgeType::Dialogue, EdgeType::Argument, EdgeType::Speaker}) {
    os << "edges " << to_string(k) << '\n';
    for (const Edge& e : edges)
      if (e.type == k) os << "  (" << e.u << ", " << e.v << ")\n";
  }
  return os.str();
}

bool argument_mentioned(const Turn& turn, const std::string& argument) {
  if (turn.speaker_id == argument) return true;
  const std::vector<std::string> arg = split_words(argument);
  if (arg.empty()) return false;
  const std::vector<std::string> text = split_words(turn.text);
  if (text.size() < arg.size()) return false;
  for (std::size_t i = 0; i + arg.size() <= text.size(); ++i) {
    bool match = true;
    for (std::size_t j = 0; j < arg.size() && match; ++j) match = text[i + j] == arg[j];
    if (match) return true;
  }
  return false;
}

DialogueGraph build_graph(const InputSequence& input, const RelationInstance& instance) {
  DialogueGraph g;
  g.num_turns = input.turns_kept;
  if (g.num_turns <= 0 || g.num_turns > static_cast<int>(instance.dialogue->turns.size()))
    throw ShapeError("input spans inconsistent with the instance's dialogue");

  for (int i = 0; i < g.num_turns; ++i)
    g.edges.push_back({g.dialogue_node(), g.turn_node(i), EdgeType::Dialogue});

  for (int i = 0; i < g.num_turns; ++i) {
    const Turn& turn = instance.dialogue->turns[static_cast<std::size_t>(i)];
    if (argument_mentioned(turn, instance.subject))
      g.edges.push_back({g.turn_node(i), g.subject_node(), EdgeType::Argument});
    if (argument_mentioned(turn, instance.object))
      g.edges.push_back({g.turn_node(i), g.object_node(), EdgeType::Argument});
  }

  std::map<std::string, std::vector<int>> by_speaker;
  for (int i = 0; i < g.num_turns; ++i)
    by_speaker[instance.dialogue->turns[static_cast<std::size_t>(i)].speaker_id].push_back(i);
  for (const auto& [speaker, turns] : by_speaker) {
    (void)speaker;
    for (std::size_t a = 0; a < turns.size(); ++a)
      for (std::size_t b = a + 1; b < turns.size(); ++b)
        g.edges.push_back({g.turn_node(turns[a]), g.turn_node(turns[b]), EdgeType::Speaker});
  }

  std::sort(g.edges.begin(), g.edges.end());
  return g;
}

Var init_node_features(Tape& t, Var attended, const DialogueGraph& graph,
                       const InputSequence& input) {
  if (static_cast<int>(input.turn_spans.size()) != graph.num_turns)
    throw ShapeError("graph and input disagree on turn count");
  std::vector<Var> rows;
  rows.reserve(static_cast<std::size_t>(graph.num_nodes()));
  rows.push_back(t.slice_rows(attended, input.cls_index, input.cls_index + 1));
  for (const auto& [b, e] : input.turn_spans) rows.push_back(t.mean_rows(t.slice_rows(attended, b, e + 1)));
  const auto [sb, se] = input.subject_span;
  rows.push_back(t.mean_rows(t.slice_rows(attended, sb, se + 1)));
  const auto [ob, oe] = input.object_span;
  rows.push_back(t.mean_rows(t.slice_rows(attended, ob, oe + 1)));
  return t.concat_rows(rows);
}

}  // namespace turngcn
