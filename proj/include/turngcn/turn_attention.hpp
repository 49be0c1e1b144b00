#pragma once

#include "turngcn/config.hpp"
#include "turngcn/grad_check.hpp"
#include "turngcn/input_encoding.hpp"
#include "turngcn/mask.hpp"

namespace turngcn {

/// Surrounding-turn mask: a dialogue token may attend to tokens of turns
/// within `window` turns of its own; non-dialogue tokens attend only to
/// themselves. Throws on overlapping turn spans.
SurroundMask build_surround_mask(const InputSequence& input, int window);

/// One masked multi-head self-attention block over the encoder output,
/// followed by a residual connection and layer normalization.
Var turn_attend(Tape& tape, ParamVars& params, Var x, const SurroundMask& mask,
                const TrainConfig& cfg, bool training, Rng* dropout_rng);

}  // namespace turngcn
