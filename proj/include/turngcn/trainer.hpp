#pragma once

#include "turngcn/checkpoint.hpp"
#include "turngcn/metrics.hpp"
#include "turngcn/model.hpp"

namespace turngcn {

/// Adam with decoupled weight decay: the decay term is applied to the
/// weights directly, never folded into the moment estimates, so
/// weight_decay = 0 reproduces plain Adam exactly.
class AdamOptimizer {
 public:
  AdamOptimizer(const ParamStore& params, double lr, double beta1, double beta2, double eps,
                double weight_decay);
  void step(ParamStore& params, const std::vector<Tensor>& grads);
  int steps_taken() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_, weight_decay_;
  int t_ = 0;
  std::vector<Tensor> m_, v_;
};

/// Which metrics evaluate() computes.
struct MetricsSelection {
  bool f1 = false;
  bool f1c = false;
  bool weighted_f1 = false;
  bool micro_f1_excl = false;
  std::string excluded_label = "Neutral";

  static MetricsSelection defaults_for(TaskMode task);
  static MetricsSelection parse(const std::string& csv, TaskMode task);
};

struct TrainResult {
  Checkpoint best;            // best dev metric seen
  Checkpoint last;            // final parameters
  std::vector<double> loss_curve;  // one mean loss per optimizer step
  double best_dev_metric = 0.0;
};

/// End-to-end training: canonical-order shuffles derived only from the seed,
/// mean batch loss, AdamW updates, per-epoch dev evaluation with best-dev
/// retention. Deterministic for a fixed seed; a NaN loss aborts with
/// NumericError.
TrainResult train(const TrainConfig& config, const Dataset& train_data, const Dataset& dev_data);

/// Runs inference (dropout disabled) and computes the selected metrics.
/// Throws DataError on empty data, ShapeError on label-space mismatch.
MetricsReport evaluate(const Checkpoint& ckpt, const Dataset& data,
                       const MetricsSelection& selection);

/// Predicted label set for one instance (dropout disabled).
LabelSet predict_instance(const Checkpoint& ckpt, const RelationInstance& instance);

/// Relation probabilities for one instance.
RelationScores predict_scores(const Checkpoint& ckpt, const RelationInstance& instance);

/// Predictor over dialogue prefixes, for F1_c scoring.
PrefixPredictor make_prefix_predictor(const Checkpoint& ckpt);

/// Copies `flags` onto the config, returning the modified pipeline config.
/// The forward pass reads these flags: no_speaker_embedding drops the
/// speaker term of the embedding sum, no_turn_attention feeds the encoder
/// output straight to graph-node initialization, and no_turn_bilstm turns
/// the sequence injection into the identity.
TrainConfig apply_ablation(TrainConfig config, const AblationFlags& flags);

}  // namespace turngcn
