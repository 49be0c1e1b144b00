#pragma once

#include "turngcn/classifier.hpp"
#include "turngcn/turn_attention.hpp"

namespace turngcn {

/// Everything one forward pass produces, with handles into the tape.
struct ForwardOutput {
  Var encoded;    // encoder output, N x d
  Var attended;   // turn-attention output (== encoded under no_turn_attention)
  LayerStates states;
  Var feature;    // 1 x 3(G+1)d
  Var logits;     // 1 x |labels|
};

/// Full pipeline: embed -> encode -> turn attention -> graph features ->
/// BiLSTM-injected graph convolutions -> classifier feature -> logits.
/// Ablation flags on `cfg` reroute the affected stages.
ForwardOutput model_forward(Tape& tape, ParamVars& params, const InputSequence& input,
                            const DialogueGraph& graph, const TrainConfig& cfg, bool training,
                            Rng* dropout_rng);

/// Gold indicator vector [1 x labels] for a loss target.
Tensor gold_targets(const RelationInstance& instance, const LabelMap& labels);

}  // namespace turngcn
