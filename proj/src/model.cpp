#include "turngcn/model.hpp"

namespace turngcn {

ForwardOutput model_forward(Tape& t, ParamVars& p, const InputSequence& input,
                            const DialogueGraph& graph, const TrainConfig& cfg, bool training,
                            Rng* dropout_rng) {
  ForwardOutput out;
  Var x = embed(t, p, input, cfg.ablation.no_speaker_embedding);
  out.encoded = encode(t, p, x, cfg, training, dropout_rng);
  if (cfg.ablation.no_turn_attention) {
    out.attended = out.encoded;
  } else {
    const SurroundMask mask = build_surround_mask(input, cfg.surround_window);
    out.attended = turn_attend(t, p, out.encoded, mask, cfg, training, dropout_rng);
  }
  Var h0 = init_node_features(t, out.attended, graph, input);
  out.states = propagate(t, p, h0, graph, cfg, training, dropout_rng);
  out.feature = build_feature(t, out.states, graph);
  out.logits = class_logits(t, p, out.feature);
  return out;
}

Tensor gold_targets(const RelationInstance& instance, const LabelMap& labels) {
  Tensor y({1, labels.size()});
  for (const std::string& r : instance.gold_relations) {
    const int id = labels.id(r);
    if (id < 0) throw DataError("gold relation outside label space: " + r);
    y.at(0, id) = 1.0;
  }
  return y;
}

}  // namespace turngcn
