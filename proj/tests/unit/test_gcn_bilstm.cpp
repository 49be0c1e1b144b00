#include <cmath>
#include <doctest.h>

#include "test_helpers.hpp"
#include "turngcn/classifier.hpp"
#include "turngcn/gcn_bilstm.hpp"

using namespace turngcn;
using namespace turngcn::testing;

namespace {

TrainConfig small_config(int d = 8, int lstm_depth = 1, int gcn = 2) {
  TrainConfig cfg = TrainConfig::desk_preset();
  cfg.d_model = d;
  cfg.encoder_heads = 1;  // heads are irrelevant to the graph-side tests
  cfg.turn_attention_heads = 1;
  cfg.lstm_layers = lstm_depth;
  cfg.gcn_layers = gcn;
  return cfg;
}

DialogueGraph chain_graph(int turns, const std::vector<std::pair<int, int>>& argument_edges,
                          const std::vector<std::pair<int, int>>& speaker_pairs) {
  DialogueGraph g;
  g.num_turns = turns;
  for (int i = 0; i < turns; ++i) g.edges.push_back({0, 1 + i, EdgeType::Dialogue});
  for (auto [t, node] : argument_edges) g.edges.push_back({1 + t, node, EdgeType::Argument});
  for (auto [a, b] : speaker_pairs) g.edges.push_back({1 + a, 1 + b, EdgeType::Speaker});
  return g;
}

// Scalar-loop LSTM reference over row sequences.
struct LstmOracle {
  Tensor w_ih, w_hh, b;  // [4h x in], [4h x h], [1 x 4h]

  static double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

  std::vector<std::vector<double>> run(const Tensor& x, bool reverse) const {
    const int h = w_hh.cols();
    const int steps = x.rows();
    std::vector<double> hs(static_cast<std::size_t>(h), 0.0), cs(static_cast<std::size_t>(h), 0.0);
    std::vector<std::vector<double>> out(static_cast<std::size_t>(steps));
    for (int s = 0; s < steps; ++s) {
      const int row = reverse ? steps - 1 - s : s;
      std::vector<double> gates(static_cast<std::size_t>(4 * h), 0.0);
      for (int g = 0; g < 4 * h; ++g) {
        double z = b.at(0, g);
        for (int j = 0; j < x.cols(); ++j) z += w_ih.at(g, j) * x.at(row, j);
        for (int j = 0; j < h; ++j) z += w_hh.at(g, j) * hs[static_cast<std::size_t>(j)];
        gates[static_cast<std::size_t>(g)] = z;
      }
      std::vector<double> nh(static_cast<std::size_t>(h)), nc(static_cast<std::size_t>(h));
      for (int j = 0; j < h; ++j) {
        const double gi = sig(gates[static_cast<std::size_t>(j)]);
        const double gf = sig(gates[static_cast<std::size_t>(h + j)]);
        const double gg = std::tanh(gates[static_cast<std::size_t>(2 * h + j)]);
        const double go = sig(gates[static_cast<std::size_t>(3 * h + j)]);
        nc[static_cast<std::size_t>(j)] = gf * cs[static_cast<std::size_t>(j)] + gi * gg;
        nh[static_cast<std::size_t>(j)] = go * std::tanh(nc[static_cast<std::size_t>(j)]);
      }
      hs = nh;
      cs = nc;
      out[static_cast<std::size_t>(row)] = hs;
    }
    return out;
  }
};

}  // namespace

TEST_SUITE("gcn_bilstm") {

TEST_CASE("bilstm_inject: non-turn nodes pass through bitwise") {
  TrainConfig cfg = small_config(8, 2);
  ParamStore params = init_params(ModelDims::from_config(cfg, 30, 4), 3);
  Rng rng(17);
  for (int trial = 0; trial < 25; ++trial) {
    const int m = 1 + rng.uniform_int(6);
    DialogueGraph g = chain_graph(m, {}, {});
    Tensor h = random_tensor({g.num_nodes(), 8}, rng);
    Tape tape;
    ParamVars pv(tape, params);
    const Tensor& out = tape.val(bilstm_inject(tape, pv, tape.constant(h), 0, g, cfg, false, nullptr));
    REQUIRE(out.rows() == g.num_nodes());
    for (int j = 0; j < 8; ++j) {
      CHECK(out.at(0, j) == h.at(0, j));  // dialogue node, bitwise
      CHECK(out.at(g.subject_node(), j) == h.at(g.subject_node(), j));
      CHECK(out.at(g.object_node(), j) == h.at(g.object_node(), j));
    }
    // turn rows are transformed (vanishingly unlikely to be equal)
    bool changed = false;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < 8; ++j) changed = changed || out.at(1 + i, j) != h.at(1 + i, j);
    CHECK(changed);
  }
}

TEST_CASE("bilstm_inject: single-turn sequence is finite and defined") {
  TrainConfig cfg = small_config(8, 2);
  ParamStore params = init_params(ModelDims::from_config(cfg, 30, 4), 3);
  DialogueGraph g = chain_graph(1, {}, {});
  Rng rng(9);
  Tensor h = random_tensor({g.num_nodes(), 8}, rng);
  Tape tape;
  ParamVars pv(tape, params);
  const Tensor& out = tape.val(bilstm_inject(tape, pv, tape.constant(h), 0, g, cfg, false, nullptr));
  CHECK(out.all_finite());
}

TEST_CASE("bilstm_inject matches a scalar-loop LSTM oracle (depth 1)") {
  TrainConfig cfg = small_config(6, 1);
  ParamStore params = init_params(ModelDims::from_config(cfg, 30, 4), 12);
  const int m = 5, d = 6;
  DialogueGraph g = chain_graph(m, {}, {});
  Rng rng(31);
  Tensor h = random_tensor({g.num_nodes(), d}, rng);

  Tape tape;
  ParamVars pv(tape, params);
  const Tensor& out = tape.val(bilstm_inject(tape, pv, tape.constant(h), 0, g, cfg, false, nullptr));

  LstmOracle fw{params.at("gcn.0.lstm.0.fw.w_ih"), params.at("gcn.0.lstm.0.fw.w_hh"),
                params.at("gcn.0.lstm.0.fw.b")};
  LstmOracle bw{params.at("gcn.0.lstm.0.bw.w_ih"), params.at("gcn.0.lstm.0.bw.w_hh"),
                params.at("gcn.0.lstm.0.bw.b")};
  Tensor turn_rows({m, d});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < d; ++j) turn_rows.at(i, j) = h.at(1 + i, j);
  const auto f_states = fw.run(turn_rows, false);
  const auto b_states = bw.run(turn_rows, true);
  const Tensor& w_alpha = params.at("gcn.0.w_alpha");
  const Tensor& b_alpha = params.at("gcn.0.b_alpha");
  for (int i = 0; i < m; ++i)
    for (int r = 0; r < d; ++r) {
      double z = b_alpha.at(0, r);
      for (int j = 0; j < d; ++j) {
        z += w_alpha.at(r, j) * f_states[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        z += w_alpha.at(r, d + j) * b_states[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      }
      CHECK(std::abs(out.at(1 + i, r) - z) < 1e-12);
    }

  SUBCASE("direction symmetry: reversed input under swapped parameters") {
    Tensor reversed({m, d});
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < d; ++j) reversed.at(i, j) = turn_rows.at(m - 1 - i, j);
    const auto fw_of_rev = fw.run(reversed, false);
    const auto bw_of_orig_with_fw_params = fw.run(turn_rows, true);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < d; ++j)
        CHECK(fw_of_rev[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] ==
              doctest::Approx(bw_of_orig_with_fw_params[static_cast<std::size_t>(m - 1 - i)]
                                                       [static_cast<std::size_t>(j)])
                  .epsilon(1e-12));
  }
}

TEST_CASE("gcn_layer: empty neighborhoods and single messages") {
  TrainConfig cfg = small_config(6, 1, 1);
  ParamStore params = init_params(ModelDims::from_config(cfg, 30, 4), 21);
  // one turn connected to the dialogue node; subject/object isolated
  DialogueGraph g = chain_graph(1, {}, {});
  Rng rng(4);
  Tensor h = random_tensor({g.num_nodes(), 6}, rng);
  Tape tape;
  ParamVars pv(tape, params);
  const Tensor& out = tape.val(gcn_layer(tape, pv, tape.constant(h), 0, g, cfg, false, nullptr));

  // isolated nodes aggregate an empty sum: exactly zero after ReLU
  for (int j = 0; j < 6; ++j) {
    CHECK(out.at(g.subject_node(), j) == 0.0);
    CHECK(out.at(g.object_node(), j) == 0.0);
  }
  // the dialogue node's single neighbor message is ReLU(W_dlg h_T1 + b_dlg)
  const Tensor& w = params.at("gcn.0.edge.dialogue.w");
  const Tensor& b = params.at("gcn.0.edge.dialogue.b");
  for (int r = 0; r < 6; ++r) {
    double z = b.at(0, r);
    for (int j = 0; j < 6; ++j) z += w.at(r, j) * h.at(1, j);
    CHECK(out.at(0, r) == doctest::Approx(std::max(z, 0.0)).epsilon(1e-12));
  }
}

TEST_CASE("gcn_layer matches a per-(edge-type, neighbor) scalar oracle") {
  TrainConfig cfg = small_config(7, 1, 1);
  ParamStore params = init_params(ModelDims::from_config(cfg, 30, 4), 22);
  Rng rng(90);
  for (int trial = 0; trial < 30; ++trial) {
    const int m = 1 + rng.uniform_int(5);
    std::vector<std::pair<int, int>> args, spk;
    DialogueGraph probe = chain_graph(m, {}, {});
    for (int i = 0; i < m; ++i) {
      if (rng.uniform() < 0.5) args.emplace_back(i, probe.subject_node());
      if (rng.uniform() < 0.5) args.emplace_back(i, probe.object_node());
      for (int j = i + 1; j < m; ++j)
        if (rng.uniform() < 0.4) spk.emplace_back(i, j);
    }
    DialogueGraph g = chain_graph(m, args, spk);
    Tensor h = random_tensor({g.num_nodes(), 7}, rng);

    Tape tape;
    ParamVars pv(tape, params);
    const Tensor& out = tape.val(gcn_layer(tape, pv, tape.constant(h), 0, g, cfg, false, nullptr));

    for (int u = 0; u < g.num_nodes(); ++u) {
      for (int r = 0; r < 7; ++r) {
        double z = 0.0;
        for (const std::string& key : {"dialogue", "argument", "speaker"}) {
          const EdgeType type = key == "dialogue" ? EdgeType::Dialogue
                                : key == "argument" ? EdgeType::Argument
                                                    : EdgeType::Speaker;
          const Tensor& w = params.at("gcn.0.edge." + key + ".w");
          const Tensor& b = params.at("gcn.0.edge." + key + ".b");
          for (const auto& e : g.edges) {
            if (e.type != type) continue;
            int v = -1;
            if (e.u == u) v = e.v;
            else if (e.v == u) v = e.u;
            else continue;
            z += b.at(0, r);
            for (int j = 0; j < 7; ++j) z += w.at(r, j) * h.at(v, j);
          }
        }
        CHECK(std::abs(out.at(u, r) - std::max(z, 0.0)) < 1e-10);
      }
    }
  }
}

TEST_CASE("propagate: layer bookkeeping and invariances") {
  TrainConfig cfg = small_config(8, 1, 2);
  ParamStore params = init_params(ModelDims::from_config(cfg, 30, 4), 33);
  DialogueGraph g = chain_graph(4, {{0, 5}, {2, 6}}, {{0, 2}, {1, 3}});
  Rng rng(3);
  Tensor h0 = random_tensor({g.num_nodes(), 8}, rng);

  SUBCASE("zero layers returns only h0") {
    TrainConfig cfg0 = cfg;
    cfg0.gcn_layers = 0;
    Tape tape;
    ParamVars pv(tape, params);
    LayerStates states = propagate(tape, pv, tape.constant(h0), g, cfg0, false, nullptr);
    CHECK(states.h.size() == 1);
    CHECK(states.injected.empty());
  }

  SUBCASE("outputs are nonnegative past layer 0 and edge order does not matter") {
    Tape tape;
    ParamVars pv(tape, params);
    LayerStates states = propagate(tape, pv, tape.constant(h0), g, cfg, false, nullptr);
    REQUIRE(states.h.size() == 3);
    for (std::size_t l = 1; l < states.h.size(); ++l) {
      const Tensor& h = tape.val(states.h[l]);
      for (std::size_t i = 0; i < h.size(); ++i) CHECK(h[i] >= 0.0);
    }

    DialogueGraph shuffled = g;
    Rng srng(8);
    srng.shuffle(shuffled.edges);
    Tape tape2;
    ParamVars pv2(tape2, params);
    LayerStates states2 = propagate(tape2, pv2, tape2.constant(h0), shuffled, cfg, false, nullptr);
    for (std::size_t l = 0; l < states.h.size(); ++l)
      CHECK(max_abs_diff(tape.val(states.h[l]), tape2.val(states2.h[l])) == 0.0);
  }

  SUBCASE("zeroing one edge type equals deleting its edges") {
    ParamStore zeroed = init_params(ModelDims::from_config(cfg, 30, 4), 33);
    for (const char* name : {"gcn.0.edge.speaker.w", "gcn.0.edge.speaker.b",
                             "gcn.1.edge.speaker.w", "gcn.1.edge.speaker.b"}) {
      Tensor& t = zeroed.at(name);
      for (std::size_t i = 0; i < t.size(); ++i) t[i] = 0.0;
    }
    DialogueGraph stripped = g;
    stripped.edges.erase(
        std::remove_if(stripped.edges.begin(), stripped.edges.end(),
                       [](const DialogueGraph::Edge& e) { return e.type == EdgeType::Speaker; }),
        stripped.edges.end());

    Tape ta;
    ParamVars pa(ta, zeroed);
    LayerStates sa = propagate(ta, pa, ta.constant(h0), g, cfg, false, nullptr);
    Tape tb;
    ParamVars pb(tb, zeroed);
    LayerStates sb = propagate(tb, pb, tb.constant(h0), stripped, cfg, false, nullptr);
    for (std::size_t l = 0; l < sa.h.size(); ++l)
      CHECK(max_abs_diff(ta.val(sa.h[l]), tb.val(sb.h[l])) == 0.0);
  }
}

TEST_CASE("propagate: end-to-end gradient vs finite differences") {
  TrainConfig cfg = small_config(8, 2, 2);
  ParamStore params = init_params(ModelDims::from_config(cfg, 30, 4), 44);
  DialogueGraph g = chain_graph(3, {{0, 4}, {1, 5}}, {{0, 2}});
  Rng rng(6);
  Tensor h0 = random_tensor({g.num_nodes(), 8}, rng);
  LossFn loss = [&](Tape& tape, ParamVars& pv) {
    LayerStates states = propagate(tape, pv, tape.constant(h0), g, cfg, false, nullptr);
    Var feature = build_feature(tape, states, g);
    return tape.mean_all(feature);
  };
  GradReport rep = grad_check(loss, params, 120, 1e-5, 5);
  CHECK(rep.max_rel_err < 1e-4);
}

}  // TEST_SUITE
