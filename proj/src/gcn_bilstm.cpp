#include "turngcn/gcn_bilstm.hpp"

namespace turngcn {

namespace {

struct LstmDirParams {
  Var w_ih, w_hh, b;
};

LstmDirParams lstm_params(ParamVars& p, const std::string& prefix) {
  return LstmDirParams{p[prefix + ".w_ih"], p[prefix + ".w_hh"], p[prefix + ".b"]};
}

// One LSTM direction over the rows of `x` (each row one timestep). Standard
// i/f/g/o gates, zero initial states, hidden size d. Returns the per-step
// hidden states aligned to the original row order.
Var lstm_direction(Tape& t, Var x, const LstmDirParams& p, int hidden, bool reverse) {
  const int steps = t.val(x).rows();
  Var h = t.constant(Tensor({1, hidden}));
  Var c = t.constant(Tensor({1, hidden}));
  std::vector<Var> outputs(static_cast<std::size_t>(steps));
  for (int s = 0; s < steps; ++s) {
    const int row = reverse ? steps - 1 - s : s;
    Var xt = t.slice_rows(x, row, row + 1);
    Var gates = t.add_rowbias(
        t.add(t.matmul(xt, p.w_ih, false, true), t.matmul(h, p.w_hh, false, true)), p.b);
    Var gi = t.sigmoid_act(t.slice_cols(gates, 0, hidden));
    Var gf = t.sigmoid_act(t.slice_cols(gates, hidden, 2 * hidden));
    Var gg = t.tanh_act(t.slice_cols(gates, 2 * hidden, 3 * hidden));
    Var go = t.sigmoid_act(t.slice_cols(gates, 3 * hidden, 4 * hidden));
    c = t.add(t.mul(gf, c), t.mul(gi, gg));
    h = t.mul(go, t.tanh_act(c));
    outputs[static_cast<std::size_t>(row)] = h;
  }
  return steps == 1 ? outputs[0] : t.concat_rows(outputs);
}

}  // namespace

Var bilstm_inject(Tape& t, ParamVars& p, Var node_features, int layer, const DialogueGraph& graph,
                  const TrainConfig& cfg, bool training, Rng* dropout_rng) {
  if (cfg.ablation.no_turn_bilstm) return node_features;  // Eq-level pass-through for all nodes

  const int m = graph.num_turns;
  const int d = t.val(node_features).cols();
  const std::string pre = "gcn." + std::to_string(layer) + ".lstm.";

  Var seq = t.slice_rows(node_features, 1, 1 + m);  // turn rows in turn order
  for (int depth = 0; depth < cfg.lstm_layers; ++depth) {
    const std::string dp = pre + std::to_string(depth);
    Var fw = lstm_direction(t, seq, lstm_params(p, dp + ".fw"), d, false);
    Var bw = lstm_direction(t, seq, lstm_params(p, dp + ".bw"), d, true);
    seq = t.concat_cols({fw, bw});
  }
  if (training && dropout_rng) seq = t.dropout(seq, cfg.dropout_lstm, *dropout_rng);
  Var projected = t.add_rowbias(
      t.matmul(seq, p["gcn." + std::to_string(layer) + ".w_alpha"], false, true),
      p["gcn." + std::to_string(layer) + ".b_alpha"]);

  // Dialogue/subject/object rows pass through unchanged.
  return t.concat_rows({t.slice_rows(node_features, 0, 1), projected,
                        t.slice_rows(node_features, 1 + m, graph.num_nodes())});
}

Var gcn_layer(Tape& t, ParamVars& p, Var injected, int layer, const DialogueGraph& graph,
              const TrainConfig& cfg, bool training, Rng* dropout_rng) {
  const std::string pre = "gcn." + std::to_string(layer) + ".edge.";
  Var total;
  for (const std::string& k : edge_type_names()) {
    // messages = A_k (H W_k^T + 1 b_k^T): the bias rides along per neighbor.
    Var msg = t.add_rowbias(t.matmul(injected, p[pre + k + ".w"], false, true), p[pre + k + ".b"]);
    EdgeType type = k == "dialogue" ? EdgeType::Dialogue
                    : k == "argument" ? EdgeType::Argument
                                      : EdgeType::Speaker;
    Var agg = t.matmul(t.constant(graph.adjacency(type)), msg);
    total = total.valid() ? t.add(total, agg) : agg;
  }
  Var out = t.relu(total);
  if (training && dropout_rng) out = t.dropout(out, cfg.dropout_gcn, *dropout_rng);
  return out;
}

LayerStates propagate(Tape& t, ParamVars& p, Var h0, const DialogueGraph& graph,
                      const TrainConfig& cfg, bool training, Rng* dropout_rng) {
  LayerStates states;
  states.h.push_back(h0);
  for (int l = 0; l < cfg.gcn_layers; ++l) {
    Var injected = bilstm_inject(t, p, states.h.back(), l, graph, cfg, training, dropout_rng);
    states.injected.push_back(injected);
    states.h.push_back(gcn_layer(t, p, injected, l, graph, cfg, training, dropout_rng));
  }
  return states;
}

}  // namespace turngcn
