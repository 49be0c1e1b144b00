#pragma once

#include <string>
#include <utility>
#include <vector>

#include "turngcn/config.hpp"
#include "turngcn/grad_check.hpp"
#include "turngcn/tokenizer.hpp"

namespace turngcn {

/// Speaker-table row indices. Rows 0..2 are fixed identities; per-dialogue
/// speakers occupy the remaining slots in order of first appearance.
struct SpeakerRows {
  static constexpr int kNone = 0;     // the "no speaker" row
  static constexpr int kMarker1 = 1;  // the [S1] identity
  static constexpr int kMarker2 = 2;  // the [S2] identity
  static int ordinal(int first_appearance_index, int slots) {
    return 3 + (first_appearance_index % slots);
  }
};

/// Tokenized [CLS] dialogue [SEP] arg1 [SEP] arg2 [SEP] sequence with all
/// per-token index streams and span bookkeeping. Spans are inclusive.
struct InputSequence {
  std::vector<int> tokens;
  std::vector<int> segment_ids;   // 0 for [CLS] d [SEP], 1 for the argument tail
  std::vector<int> position_ids;  // 0..N-1
  std::vector<int> speaker_ids;   // rows of the speaker table
  std::vector<std::string> token_text;  // normalized surface forms

  std::vector<std::pair<int, int>> turn_spans;  // one per kept turn
  std::pair<int, int> subject_span{-1, -1};
  std::pair<int, int> object_span{-1, -1};
  int cls_index = 0;

  bool subject_is_marker = false;  // arg1 rendered as [S1]
  bool object_is_marker = false;   // arg2 rendered as [S2]
  bool degenerate_arguments = false;  // subject == object; subject branch won
  int turns_kept = 0;
  int turns_dropped = 0;  // truncated from the dialogue's end

  int length() const { return static_cast<int>(tokens.size()); }
};

/// Builds the speaker-marked input sequence: speakers equal to an argument
/// are rendered as [S1]/[S2], arguments that name a speaker collapse to the
/// marker token, and the dialogue is truncated turn-by-turn from the end
/// when the assembled sequence would exceed max_len (arguments and
/// separators are always retained).
InputSequence build_input(const RelationInstance& instance, const Tokenizer& tokenizer,
                          int max_len, int speaker_slots);

/// Four-way embedding sum: token + segment + position + speaker rows.
/// With no_speaker_embedding the speaker term is dropped entirely.
Var embed(Tape& tape, ParamVars& params, const InputSequence& input,
          bool no_speaker_embedding = false);

/// Compact transformer encoder stack (post-norm blocks). Zero configured
/// layers yields the input unchanged.
Var encode(Tape& tape, ParamVars& params, Var reps, const TrainConfig& cfg, bool training,
           Rng* dropout_rng);

}  // namespace turngcn
