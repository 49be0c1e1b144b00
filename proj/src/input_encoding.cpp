#include "turngcn/input_encoding.hpp"

#include <map>

#include "turngcn/attention.hpp"

namespace turngcn {

namespace {

struct TurnTokens {
  std::vector<int> ids;
  std::vector<std::string> texts;
  int speaker_row = SpeakerRows::kNone;
};

AttentionParams attention_params(ParamVars& p, const std::string& prefix) {
  return AttentionParams{p[prefix + ".q.w"], p[prefix + ".q.b"], p[prefix + ".k.w"],
                         p[prefix + ".k.b"], p[prefix + ".v.w"], p[prefix + ".v.b"],
                         p[prefix + ".o.w"], p[prefix + ".o.b"]};
}

}  // namespace

InputSequence build_input(const RelationInstance& instance, const Tokenizer& tokenizer,
                          int max_len, int speaker_slots) {
  instance.validate();
  const Dialogue& dialogue = *instance.dialogue;
  const Vocab& vocab = tokenizer.vocab();
  const int colon_id = vocab.id(":");

  InputSequence seq;
  seq.degenerate_arguments = instance.subject == instance.object;

  // Marker decisions cover the full dialogue, before any truncation.
  bool subject_speaks = false, object_speaks = false;
  std::map<std::string, int> first_appearance;
  for (const Turn& t : dialogue.turns) {
    subject_speaks = subject_speaks || t.speaker_id == instance.subject;
    object_speaks = object_speaks || t.speaker_id == instance.object;
    first_appearance.emplace(t.speaker_id, static_cast<int>(first_appearance.size()));
  }
  seq.subject_is_marker = subject_speaks;
  seq.object_is_marker = object_speaks;

  std::vector<TurnTokens> turns;
  turns.reserve(dialogue.turns.size());
  for (const Turn& t : dialogue.turns) {
    TurnTokens tt;
    if (t.speaker_id == instance.subject) {  // subject branch wins when degenerate
      tt.ids.push_back(Vocab::kS1);
      tt.texts.push_back("[S1]");
      tt.speaker_row = SpeakerRows::kMarker1;
    } else if (t.speaker_id == instance.object) {
      tt.ids.push_back(Vocab::kS2);
      tt.texts.push_back("[S2]");
      tt.speaker_row = SpeakerRows::kMarker2;
    } else {
      for (const std::string& w : split_words(t.speaker_id)) {
        tt.ids.push_back(vocab.id(w));
        tt.texts.push_back(w);
      }
      tt.speaker_row = SpeakerRows::ordinal(first_appearance.at(t.speaker_id), speaker_slots);
    }
    tt.ids.push_back(colon_id);
    tt.texts.push_back(":");
    for (const std::string& w : split_words(t.text)) {
      tt.ids.push_back(vocab.id(w));
      tt.texts.push_back(w);
    }
    turns.push_back(std::move(tt));
  }

  auto argument_tokens = [&](const std::string& arg, bool marker, int marker_id,
                             const char* marker_text) {
    TurnTokens tt;
    if (marker) {
      tt.ids.push_back(marker_id);
      tt.texts.push_back(marker_text);
    } else {
      for (const std::string& w : split_words(arg)) {
        tt.ids.push_back(vocab.id(w));
        tt.texts.push_back(w);
      }
      if (tt.ids.empty()) throw DataError("argument tokenizes to empty: '" + arg + "'");
    }
    return tt;
  };
  const TurnTokens arg1 = argument_tokens(instance.subject, subject_speaks, Vocab::kS1, "[S1]");
  const TurnTokens arg2 = argument_tokens(instance.object, object_speaks, Vocab::kS2, "[S2]");

  // Whole-turn truncation from the end; [CLS], separators, and both argument
  // spans are always retained.
  const int tail = 4 + static_cast<int>(arg1.ids.size() + arg2.ids.size());
  int kept = static_cast<int>(turns.size());
  auto total_len = [&](int k) {
    int n = tail;
    for (int i = 0; i < k; ++i) n += static_cast<int>(turns[static_cast<std::size_t>(i)].ids.size());
    return n;
  };
  while (kept > 1 && total_len(kept) > max_len) --kept;
  if (total_len(kept) > max_len)
    throw DataError("sequence cannot fit even one turn within max_len=" + std::to_string(max_len));
  seq.turns_kept = kept;
  seq.turns_dropped = static_cast<int>(turns.size()) - kept;

  auto push = [&](int id, const std::string& text, int segment, int speaker_row) {
    seq.tokens.push_back(id);
    seq.token_text.push_back(text);
    seq.segment_ids.push_back(segment);
    seq.speaker_ids.push_back(speaker_row);
  };

  push(Vocab::kCls, "[CLS]", 0, SpeakerRows::kNone);
  for (int i = 0; i < kept; ++i) {
    const TurnTokens& tt = turns[static_cast<std::size_t>(i)];
    const int begin = seq.length();
    for (std::size_t j = 0; j < tt.ids.size(); ++j) push(tt.ids[j], tt.texts[j], 0, tt.speaker_row);
    seq.turn_spans.emplace_back(begin, seq.length() - 1);
  }
  push(Vocab::kSep, "[SEP]", 0, SpeakerRows::kNone);

  const int a1_row = subject_speaks ? SpeakerRows::kMarker1 : SpeakerRows::kNone;
  const int a1_begin = seq.length();
  for (std::size_t j = 0; j < arg1.ids.size(); ++j) push(arg1.ids[j], arg1.texts[j], 1, a1_row);
  seq.subject_span = {a1_begin, seq.length() - 1};
  push(Vocab::kSep, "[SEP]", 1, SpeakerRows::kNone);

  const int a2_row = object_speaks ? SpeakerRows::kMarker2 : SpeakerRows::kNone;
  const int a2_begin = seq.length();
  for (std::size_t j = 0; j < arg2.ids.size(); ++j) push(arg2.ids[j], arg2.texts[j], 1, a2_row);
  seq.object_span = {a2_begin, seq.length() - 1};
  push(Vocab::kSep, "[SEP]", 1, SpeakerRows::kNone);

  seq.position_ids.resize(static_cast<std::size_t>(seq.length()));
  for (int i = 0; i < seq.length(); ++i) seq.position_ids[static_cast<std::size_t>(i)] = i;
  seq.cls_index = 0;
  return seq;
}

Var embed(Tape& t, ParamVars& p, const InputSequence& input, bool no_speaker_embedding) {
  Var x = t.gather_rows(p["embed.token"], input.tokens);
  x = t.add(x, t.gather_rows(p["embed.segment"], input.segment_ids));
  x = t.add(x, t.gather_rows(p["embed.position"], input.position_ids));
  if (!no_speaker_embedding)
    x = t.add(x, t.gather_rows(p["embed.speaker"], input.speaker_ids));
  return x;
}

Var encode(Tape& t, ParamVars& p, Var reps, const TrainConfig& cfg, bool training,
           Rng* dropout_rng) {
  Var x = reps;
  for (int l = 0; l < cfg.encoder_layers; ++l) {
    const std::string pre = "enc." + std::to_string(l);
    Var a = multi_head_attention(t, x, attention_params(p, pre + ".attn"), nullptr,
                                 cfg.encoder_heads, cfg.dropout_encoder, training, dropout_rng);
    if (training && dropout_rng) a = t.dropout(a, cfg.dropout_encoder, *dropout_rng);
    x = t.layer_norm_rows(t.add(x, a), p[pre + ".ln1.gain"], p[pre + ".ln1.bias"]);
    Var f = t.add_rowbias(t.matmul(x, p[pre + ".ff1.w"], false, true), p[pre + ".ff1.b"]);
    f = t.gelu(f);
    f = t.add_rowbias(t.matmul(f, p[pre + ".ff2.w"], false, true), p[pre + ".ff2.b"]);
    if (training && dropout_rng) f = t.dropout(f, cfg.dropout_encoder, *dropout_rng);
    x = t.layer_norm_rows(t.add(x, f), p[pre + ".ln2.gain"], p[pre + ".ln2.bias"]);
  }
  return x;
}

}  // namespace turngcn
