#pragma once

#include <string>
#include <vector>

#include "turngcn/corpus.hpp"
#include "turngcn/input_encoding.hpp"

namespace turngcn {

enum class EdgeType { Dialogue, Argument, Speaker };

std::string to_string(EdgeType k);

/// Heterogeneous dialogue graph. Node ids: 0 = dialogue node, 1..M = turn
/// nodes, M+1 = subject, M+2 = object. Edges are undirected, typed, stored
/// once with u < v, no self-edges, no duplicates.
struct DialogueGraph {
  struct Edge {
    int u, v;
    EdgeType type;
    bool operator==(const Edge& o) const { return u == o.u && v == o.v && type == o.type; }
    bool operator<(const Edge& o) const {
      if (type != o.type) return static_cast<int>(type) < static_cast<int>(o.type);
      if (u != o.u) return u < o.u;
      return v < o.v;
    }
  };

  int num_turns = 0;
  std::vector<Edge> edges;

  int num_nodes() const { return num_turns + 3; }
  int dialogue_node() const { return 0; }
  int turn_node(int i) const { return 1 + i; }  // i is 0-based
  int subject_node() const { return num_turns + 1; }
  int object_node() const { return num_turns + 2; }

  int count(EdgeType k) const;
  /// Symmetric 0/1 adjacency of one edge type, (M+3) x (M+3).
  Tensor adjacency(EdgeType k) const;
  /// Structured-text listing: node types, then edge lists by type.
  std::string to_debug_text() const;
};

/// True when the argument is "mentioned" in the turn: it equals the turn's
/// speaker, or its token sequence occurs contiguously in the turn text
/// (case-insensitive, whole-token matching).
bool argument_mentioned(const Turn& turn, const std::string& argument);

/// Builds nodes and edges per the three rules: every turn connects to the
/// dialogue node; same-speaker turns form cliques; arguments connect to the
/// turns that mention them. Uses the kept turns of `input`.
DialogueGraph build_graph(const InputSequence& input, const RelationInstance& instance);

/// Initial node features from the turn-attention output: dialogue node reads
/// the [CLS] row, turn/subject/object nodes read span means.
Var init_node_features(Tape& tape, Var attended, const DialogueGraph& graph,
                       const InputSequence& input);

}  // namespace turngcn
