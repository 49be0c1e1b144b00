#pragma once

#include "turngcn/config.hpp"
#include "turngcn/dialogue_graph.hpp"
#include "turngcn/grad_check.hpp"

namespace turngcn {

/// Node states across propagation: h[l] for l = 0..G, plus the
/// sequence-injected states ĥ[l] for l = 0..G-1.
struct LayerStates {
  std::vector<Var> h;
  std::vector<Var> injected;
};

/// Injects turn order into the turn nodes at layer `layer`: a stacked BiLSTM
/// runs over the turn-node features in turn order, the concatenated
/// directions are projected back to width d, and every non-turn node passes
/// through unchanged. With no_turn_bilstm the whole op is the identity.
Var bilstm_inject(Tape& tape, ParamVars& params, Var node_features, int layer,
                  const DialogueGraph& graph, const TrainConfig& cfg, bool training,
                  Rng* dropout_rng);

/// One edge-type-separated graph convolution:
/// h'_u = ReLU(sum over edge types k, neighbors v of W_k ĥ_v + b_k),
/// no self-loop, no degree normalization; the bias is added once per
/// neighbor message, so a node's pre-activation scales with its typed degree.
Var gcn_layer(Tape& tape, ParamVars& params, Var injected, int layer, const DialogueGraph& graph,
              const TrainConfig& cfg, bool training, Rng* dropout_rng);

/// Runs G alternating inject/convolve rounds, retaining every layer state.
LayerStates propagate(Tape& tape, ParamVars& params, Var h0, const DialogueGraph& graph,
                      const TrainConfig& cfg, bool training, Rng* dropout_rng);

}  // namespace turngcn
