#include "turngcn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace turngcn {

AdamOptimizer::AdamOptimizer(const ParamStore& params, double lr, double beta1, double beta2,
                             double eps, double weight_decay)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), weight_decay_(weight_decay) {
  m_.reserve(params.count());
  v_.reserve(params.count());
  for (std::size_t i = 0; i < params.count(); ++i) {
    m_.push_back(Tensor::zeros(params.at(i).shape()));
    v_.push_back(Tensor::zeros(params.at(i).shape()));
  }
}

void AdamOptimizer::step(ParamStore& params, const std::vector<Tensor>& grads) {
  if (grads.size() != params.count()) throw ShapeError("optimizer/parameter count mismatch");
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, t_);
  const double bc2 = 1.0 - std::pow(beta2_, t_);
  for (std::size_t i = 0; i < params.count(); ++i) {
    Tensor& w = params.at(i);
    const Tensor& g = grads[i];
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
      v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      w[j] -= lr_ * (mhat / (std::sqrt(vhat) + eps_) + weight_decay_ * w[j]);
    }
  }
}

MetricsSelection MetricsSelection::defaults_for(TaskMode task) {
  MetricsSelection s;
  if (task == TaskMode::DialogRE) {
    s.f1 = true;
    s.f1c = true;
  } else {
    s.weighted_f1 = true;
    s.micro_f1_excl = true;
  }
  return s;
}

MetricsSelection MetricsSelection::parse(const std::string& csv, TaskMode task) {
  if (csv.empty()) return defaults_for(task);
  MetricsSelection s;
  std::istringstream is(csv);
  std::string item;
  while (std::getline(is, item, ',')) {
    if (item == "f1") s.f1 = true;
    else if (item == "f1c") s.f1c = true;
    else if (item == "weighted_f1") s.weighted_f1 = true;
    else if (item == "micro_f1_excl") s.micro_f1_excl = true;
    else throw ShapeError("unknown metric: " + item);
  }
  return s;
}

TrainConfig apply_ablation(TrainConfig config, const AblationFlags& flags) {
  config.ablation = flags;
  return config;
}

namespace {

// Canonical instance key: training order depends only on the seed, never on
// on-disk record order.
std::string canonical_key(const RelationInstance& inst) {
  std::string key = inst.dialogue->dialogue_id;
  key += '\x1f';
  key += inst.subject;
  key += '\x1f';
  key += inst.object;
  for (const std::string& r : inst.gold_relations) {
    key += '\x1f';
    key += r;
  }
  for (const Turn& t : inst.dialogue->turns) {
    key += '\x1e';
    key += t.speaker_id;
    key += ':';
    key += t.text;
  }
  return key;
}

std::vector<std::size_t> canonical_order(const std::vector<RelationInstance>& instances) {
  std::vector<std::size_t> order(instances.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::string> keys(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) keys[i] = canonical_key(instances[i]);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  return order;
}

struct EncodedInstance {
  InputSequence input;
  DialogueGraph graph;
  Tensor targets;
};

EncodedInstance encode_instance(const RelationInstance& inst, const Tokenizer& tok,
                                const TrainConfig& cfg, const LabelMap& labels) {
  EncodedInstance e;
  e.input = build_input(inst, tok, cfg.max_len, cfg.speaker_slots);
  e.graph = build_graph(e.input, inst);
  e.targets = gold_targets(inst, labels);
  return e;
}

double dev_metric_value(const MetricsReport& rep, TaskMode task) {
  if (task == TaskMode::DialogRE) return rep.f1;
  return rep.weighted_f1 ? *rep.weighted_f1 : rep.f1;
}

LabelSet decode_to_labels(const RelationScores& scores, const LabelMap& labels, TaskMode task) {
  const DecodeMode mode =
      task == TaskMode::DialogRE ? DecodeMode::MultiLabel : DecodeMode::SingleLabel;
  LabelSet out;
  for (int id : decide_labels(scores, mode)) out.insert(labels.label(id));
  return out;
}

RelationScores forward_scores(const ParamStore& params, const TrainConfig& cfg,
                              const Tokenizer& tok, const RelationInstance& inst) {
  Tape tape;
  ParamVars pv(tape, params);
  const InputSequence input = build_input(inst, tok, cfg.max_len, cfg.speaker_slots);
  const DialogueGraph graph = build_graph(input, inst);
  ForwardOutput out = model_forward(tape, pv, input, graph, cfg, /*training=*/false, nullptr);
  const Tensor& z = tape.val(out.logits);
  return RelationScores::from_logits(std::vector<double>(z.data(), z.data() + z.size()));
}

}  // namespace

TrainResult train(const TrainConfig& config, const Dataset& train_data, const Dataset& dev_data) {
  config.validate();
  if (train_data.empty()) throw DataError("train: empty training set");
  if (!train_data.labels) throw DataError("train: dataset without label space");

  const LabelMap& labels = *train_data.labels;

  // Canonical instance order first: the vocabulary, the parameter layout,
  // and the batch sequence must not depend on on-disk record order.
  Dataset ordered;
  ordered.labels = train_data.labels;
  for (std::size_t idx : canonical_order(train_data.instances))
    ordered.instances.push_back(train_data.instances[idx]);

  auto vocab = std::make_shared<const Vocab>(build_vocab(ordered));
  Tokenizer tok(vocab);

  const ModelDims dims = ModelDims::from_config(config, vocab->size(), labels.size());
  ParamStore params = init_params(dims, config.seed);
  AdamOptimizer adam(params, config.learning_rate, config.adam_beta1, config.adam_beta2,
                     config.adam_eps, config.weight_decay);

  // Pre-encode once; forward passes reuse the encodings.
  std::vector<EncodedInstance> encoded;
  encoded.reserve(ordered.size());
  for (const RelationInstance& inst : ordered.instances)
    encoded.push_back(encode_instance(inst, tok, config, labels));

  TrainResult result;
  Rng order_rng(config.seed ^ 0x5eed00f5ULL);
  int step = 0;
  bool stop = false;

  Checkpoint current;
  current.config = config;
  current.vocab = *vocab;
  current.labels = labels;

  auto snapshot = [&](const ParamStore& src) {
    ParamStore copy;
    for (std::size_t i = 0; i < src.count(); ++i) copy.add(src.names()[i], src.at(i));
    return copy;
  };

  double best_metric = -1.0;
  for (int epoch = 0; epoch < config.epochs && !stop; ++epoch) {
    std::vector<std::size_t> order(encoded.size());
    std::iota(order.begin(), order.end(), 0);
    order_rng.shuffle(order);

    for (std::size_t start = 0; start < order.size() && !stop; start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      // Canonical within-batch order keeps the gradient independent of the
      // shuffle's internal arrangement of the same batch.
      std::vector<std::size_t> batch(order.begin() + start, order.begin() + end);
      std::sort(batch.begin(), batch.end());

      Tape tape;
      ParamVars pv(tape, params);
      Rng dropout_rng(config.seed * 0x9e3779b97f4a7c15ULL + static_cast<uint64_t>(step));
      Var loss;
      for (std::size_t bi : batch) {
        const EncodedInstance& e = encoded[bi];
        ForwardOutput out =
            model_forward(tape, pv, e.input, e.graph, config, /*training=*/true, &dropout_rng);
        Var item_loss = tape.bce_with_logits(out.logits, e.targets);
        loss = loss.valid() ? tape.add(loss, item_loss) : item_loss;
      }
      loss = tape.scale(loss, 1.0 / static_cast<double>(batch.size()));
      const double loss_value = tape.val(loss)[0];
      if (!std::isfinite(loss_value))
        throw NumericError("training diverged: loss is not finite at step " + std::to_string(step));
      tape.backward(loss);
      adam.step(params, pv.collect_grads());
      result.loss_curve.push_back(loss_value);
      ++step;
      if (config.max_steps > 0 && step >= config.max_steps) stop = true;
    }

    // Per-epoch dev evaluation with best checkpoint retention.
    current.params = snapshot(params);
    current.step = step;
    double dev_metric = 0.0;
    if (!dev_data.empty()) {
      MetricsReport rep =
          evaluate(current, dev_data, MetricsSelection::defaults_for(config.task));
      dev_metric = dev_metric_value(rep, config.task);
    }
    current.history.push_back(
        {epoch, step, result.loss_curve.empty() ? 0.0 : result.loss_curve.back(), dev_metric});
    if (dev_metric > best_metric) {
      best_metric = dev_metric;
      result.best = current;
    }
  }

  current.params = snapshot(params);
  current.step = step;
  result.last = current;
  if (best_metric < 0.0 || dev_data.empty()) result.best = result.last;
  result.best_dev_metric = std::max(0.0, best_metric);
  return result;
}

MetricsReport evaluate(const Checkpoint& ckpt, const Dataset& data,
                       const MetricsSelection& selection) {
  if (data.empty()) throw DataError("evaluate: empty dataset");
  if (data.labels && !(*data.labels == ckpt.labels))
    throw ShapeError("evaluate: dataset label space differs from the checkpoint's");
  auto vocab = std::make_shared<const Vocab>(ckpt.vocab);
  Tokenizer tok(vocab);

  std::vector<LabelSet> preds, golds;
  preds.reserve(data.size());
  golds.reserve(data.size());
  for (const RelationInstance& inst : data.instances) {
    const RelationScores scores = forward_scores(ckpt.params, ckpt.config, tok, inst);
    preds.push_back(decode_to_labels(scores, ckpt.labels, ckpt.config.task));
    golds.emplace_back(inst.gold_relations.begin(), inst.gold_relations.end());
  }

  MetricsReport rep = score_triples(preds, golds);
  if (selection.f1c) {
    MetricsReport prefix_rep = score_f1c(make_prefix_predictor(ckpt), data.instances);
    rep.f1c = prefix_rep.f1c;
  }
  if (selection.weighted_f1) rep.weighted_f1 = score_weighted_f1(preds, golds);
  if (selection.micro_f1_excl)
    rep.micro_f1_excl = score_micro_f1_excl(preds, golds, selection.excluded_label, &rep.warnings);
  return rep;
}

LabelSet predict_instance(const Checkpoint& ckpt, const RelationInstance& instance) {
  return decode_to_labels(predict_scores(ckpt, instance), ckpt.labels, ckpt.config.task);
}

RelationScores predict_scores(const Checkpoint& ckpt, const RelationInstance& instance) {
  auto vocab = std::make_shared<const Vocab>(ckpt.vocab);
  Tokenizer tok(vocab);
  return forward_scores(ckpt.params, ckpt.config, tok, instance);
}

PrefixPredictor make_prefix_predictor(const Checkpoint& ckpt) {
  return [&ckpt](const RelationInstance& inst, int prefix_turns) {
    if (prefix_turns < 1) prefix_turns = 1;
    auto truncated = std::make_shared<Dialogue>();
    truncated->dialogue_id = inst.dialogue->dialogue_id;
    truncated->turns.assign(inst.dialogue->turns.begin(),
                            inst.dialogue->turns.begin() + prefix_turns);
    RelationInstance prefix_inst = inst;
    prefix_inst.dialogue = truncated;
    return predict_instance(ckpt, prefix_inst);
  };
}

}  // namespace turngcn
