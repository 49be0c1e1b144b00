// Command-line surface: dataset conversion, import, synthesis, training,
// evaluation, prediction, gradient checking, and graph export.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "turngcn/grad_check.hpp"
#include "turngcn/synthetic.hpp"
#include "turngcn/trainer.hpp"

using namespace turngcn;

namespace {

struct CommonOpts {
  std::string config_path;
  uint64_t seed = 0;
  bool seed_set = false;
  std::string task;
  std::string ablate;
};

AblationFlags parse_ablation(const std::string& csv) {
  AblationFlags flags;
  std::istringstream is(csv);
  std::string item;
  while (std::getline(is, item, ',')) {
    if (item.empty()) continue;
    if (item == "no_speaker_embedding") flags.no_speaker_embedding = true;
    else if (item == "no_turn_attention") flags.no_turn_attention = true;
    else if (item == "no_turn_bilstm") flags.no_turn_bilstm = true;
    else throw ShapeError("unknown ablation flag: " + item);
  }
  return flags;
}

TrainConfig resolve_config(const CommonOpts& opts) {
  TrainConfig cfg =
      opts.config_path.empty() ? TrainConfig::desk_preset() : TrainConfig::from_json_file(opts.config_path);
  if (opts.seed_set) cfg.seed = opts.seed;
  if (!opts.task.empty()) cfg.task = task_mode_from_string(opts.task);
  if (!opts.ablate.empty()) cfg = apply_ablation(cfg, parse_ablation(opts.ablate));
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_model_opts) {
  cmd->add_option("--config", opts.config_path, "JSON config file (desk preset when omitted)");
  cmd->add_option("--seed", opts.seed, "Seed override")->each([&](const std::string&) {
    opts.seed_set = true;
  });
  if (with_model_opts) {
    cmd->add_option("--task", opts.task, "Task mode: dialog_re or erc")
        ->check(CLI::IsMember({"dialog_re", "erc"}));
    cmd->add_option("--ablate", opts.ablate,
                    "Comma list of no_speaker_embedding,no_turn_attention,no_turn_bilstm");
  }
}

std::shared_ptr<const LabelMap> load_labels_opt(const std::string& path) {
  if (path.empty()) return nullptr;
  return std::make_shared<const LabelMap>(LabelMap::load(path));
}

int run(int argc, char** argv) {
  CLI::App app{"Dialogue relation extraction with a turn-aware graph convolutional model"};
  app.require_subcommand(1);

  // ---- convert ----
  auto* convert = app.add_subcommand("convert", "ERC conversations -> relation instances");
  std::string conv_in, conv_out, conv_labels_out;
  bool conv_alternate = false;
  convert->add_option("--in", conv_in, "ERC JSONL file")->required();
  convert->add_option("--out", conv_out, "Canonical dataset JSONL")->required();
  convert->add_option("--labels-out", conv_labels_out, "Write the emotion label map here");
  convert->add_flag("--alternate-speakers", conv_alternate,
                    "Assign S1/S2 by position (corpora without speaker annotation)");

  // ---- import-dialogre ----
  auto* import_cmd = app.add_subcommand("import-dialogre", "DialogRE JSON -> canonical dataset");
  std::vector<std::string> imp_in;
  std::string imp_out, imp_labels, imp_labels_out;
  import_cmd->add_option("--in", imp_in, "DialogRE JSON file(s)")->required()->expected(-1);
  import_cmd->add_option("--out", imp_out, "Canonical dataset JSONL")->required();
  import_cmd->add_option("--labels", imp_labels, "Label map to validate against");
  import_cmd->add_option("--labels-out", imp_labels_out, "Write the derived label map here");

  // ---- synth ----
  auto* synth = app.add_subcommand("synth", "Generate a planted-rule synthetic dataset");
  std::string synth_out, synth_labels_out;
  int synth_n = 64, synth_speakers = 3;
  uint64_t synth_seed = 7;
  synth->add_option("--out", synth_out, "Canonical dataset JSONL")->required();
  synth->add_option("--num-instances", synth_n, "Instance count");
  synth->add_option("--num-speakers", synth_speakers, "Speakers per dialogue");
  synth->add_option("--seed", synth_seed, "Generator seed");
  synth->add_option("--labels-out", synth_labels_out, "Write the label map here");

  // ---- train ----
  auto* train_cmd = app.add_subcommand("train", "Train a model");
  CommonOpts train_opts;
  std::string tr_train, tr_dev, tr_out, tr_labels, tr_vocab_out;
  add_common(train_cmd, train_opts, true);
  train_cmd->add_option("--train", tr_train, "Training dataset JSONL")->required();
  train_cmd->add_option("--dev", tr_dev, "Dev dataset JSONL (best-metric retention)");
  train_cmd->add_option("--out", tr_out, "Checkpoint output path")->required();
  train_cmd->add_option("--labels", tr_labels, "Label map file (derived from data when omitted)");
  train_cmd->add_option("--vocab-out", tr_vocab_out, "Write the training vocabulary here");

  // ---- eval ----
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  std::string ev_ckpt, ev_data, ev_metrics, ev_excluded = "Neutral", ev_report;
  eval_cmd->add_option("--ckpt", ev_ckpt, "Checkpoint path")->required();
  eval_cmd->add_option("--data", ev_data, "Dataset JSONL")->required();
  eval_cmd->add_option("--metrics", ev_metrics, "Comma list of f1,f1c,weighted_f1,micro_f1_excl");
  eval_cmd->add_option("--excluded-label", ev_excluded, "Label excluded from micro_f1_excl");
  eval_cmd->add_option("--report-out", ev_report, "Also write a key/value report file");

  // ---- predict ----
  auto* predict_cmd = app.add_subcommand("predict", "Predict relations for a dataset");
  std::string pr_ckpt, pr_data, pr_out;
  predict_cmd->add_option("--ckpt", pr_ckpt, "Checkpoint path")->required();
  predict_cmd->add_option("--data", pr_data, "Dataset JSONL")->required();
  predict_cmd->add_option("--out", pr_out, "Predictions JSONL (stdout when omitted)");

  // ---- gradcheck ----
  auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference check of the full model");
  int gc_dim = 16, gc_samples = 200;
  double gc_eps = 1e-5, gc_tol = 1e-4;
  uint64_t gc_seed = 11;
  gc_cmd->add_option("--dim", gc_dim, "Model width d");
  gc_cmd->add_option("--samples", gc_samples, "Sampled scalar parameters");
  gc_cmd->add_option("--eps", gc_eps, "Central-difference step");
  gc_cmd->add_option("--tol", gc_tol, "Max relative error accepted");
  gc_cmd->add_option("--seed", gc_seed, "Seed");

  // ---- export-graph ----
  auto* export_cmd = app.add_subcommand("export-graph", "Debug dump of a dialogue graph");
  std::string ex_data, ex_out;
  int ex_index = 0;
  export_cmd->add_option("--data", ex_data, "Dataset JSONL")->required();
  export_cmd->add_option("--index", ex_index, "Instance index");
  export_cmd->add_option("--out", ex_out, "Output path (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints the message or requested help
    return code == 0 ? 0 : 1;     // all usage errors collapse to exit 1
  }

  if (convert->parsed()) {
    auto conversations = load_erc(conv_in);
    LabelMap emotions;
    Dataset data;
    std::vector<RelationInstance> all;
    int conv_id = 0;
    for (auto& conv : conversations) {
      bool missing_speakers = false;
      for (const auto& r : conv) missing_speakers = missing_speakers || r.speaker.empty();
      if (conv_alternate || missing_speakers) conv = assign_alternating_speakers(std::move(conv));
      for (const auto& r : conv) emotions.add(r.emotion);
      auto instances = erc_to_re(conv);
      auto renamed = std::make_shared<Dialogue>(*instances.front().dialogue);
      renamed->dialogue_id = "c" + std::to_string(conv_id++);
      const std::shared_ptr<const Dialogue> shared = renamed;
      for (RelationInstance& inst : instances) inst.dialogue = shared;
      all.insert(all.end(), instances.begin(), instances.end());
    }
    data.instances = std::move(all);
    data.labels = std::make_shared<const LabelMap>(emotions);
    for (RelationInstance& inst : data.instances) inst.label_space = data.labels;
    save_canonical(data, conv_out);
    if (!conv_labels_out.empty()) emotions.save(conv_labels_out);
    std::cout << "conversations " << conversations.size() << "\ninstances " << data.size()
              << "\nlabels " << emotions.size() << '\n';
    return 0;
  }

  if (import_cmd->parsed()) {
    auto labels = load_labels_opt(imp_labels);
    Dataset merged;
    ImportStats total;
    for (const std::string& path : imp_in) {
      ImportStats st;
      Dataset part = import_dialogre(path, labels, &st);
      if (!merged.labels) merged.labels = part.labels;
      if (!labels && !(*merged.labels == *part.labels)) {
        // re-derive a joint inventory below
      }
      merged.instances.insert(merged.instances.end(), part.instances.begin(),
                              part.instances.end());
      total.num_dialogues += st.num_dialogues;
      total.num_triples += st.num_triples;
    }
    if (!labels) {
      merged.labels = std::make_shared<const LabelMap>(derive_labels(merged.instances));
      for (RelationInstance& inst : merged.instances) inst.label_space = merged.labels;
    }
    save_canonical(merged, imp_out);
    if (!imp_labels_out.empty()) merged.labels->save(imp_labels_out);
    std::cout << "dialogues " << total.num_dialogues << "\ntriples " << total.num_triples
              << "\nlabels " << merged.labels->size() << '\n';
    return 0;
  }

  if (synth->parsed()) {
    SyntheticConfig cfg = SyntheticConfig::standard();
    cfg.num_instances = synth_n;
    cfg.num_speakers = synth_speakers;
    Dataset data = gen_synthetic(cfg, synth_seed);
    save_canonical(data, synth_out);
    if (!synth_labels_out.empty()) data.labels->save(synth_labels_out);
    std::cout << "instances " << data.size() << "\nlabels " << data.labels->size() << '\n';
    return 0;
  }

  if (train_cmd->parsed()) {
    TrainConfig cfg = resolve_config(train_opts);
    auto labels = load_labels_opt(tr_labels);
    Dataset train_data = load_canonical(tr_train, labels);
    Dataset dev_data;
    if (!tr_dev.empty()) dev_data = load_canonical(tr_dev, train_data.labels);
    if (train_data.empty()) throw DataError("training dataset is empty");
    TrainResult result = train(cfg, train_data, dev_data);
    result.best.save(tr_out);
    if (!tr_vocab_out.empty()) result.best.vocab.save(tr_vocab_out);
    std::cout << "steps " << result.last.step << "\nfinal_loss "
              << (result.loss_curve.empty() ? 0.0 : result.loss_curve.back())
              << "\nbest_dev_metric " << result.best_dev_metric << "\ncheckpoint " << tr_out
              << '\n';
    return 0;
  }

  if (eval_cmd->parsed()) {
    Checkpoint ckpt = Checkpoint::load(ev_ckpt);
    auto labels = std::make_shared<const LabelMap>(ckpt.labels);
    Dataset data = load_canonical(ev_data, labels);
    MetricsSelection selection = MetricsSelection::parse(ev_metrics, ckpt.config.task);
    selection.excluded_label = ev_excluded;
    MetricsReport rep = evaluate(ckpt, data, selection);
    std::cout << rep.to_text();
    if (!ev_report.empty()) {
      std::ofstream out(ev_report);
      out << rep.to_kv();
    }
    return 0;
  }

  if (predict_cmd->parsed()) {
    Checkpoint ckpt = Checkpoint::load(pr_ckpt);
    auto labels = std::make_shared<const LabelMap>(ckpt.labels);
    Dataset data = load_canonical(pr_data, labels);
    std::ofstream file;
    if (!pr_out.empty()) {
      file.open(pr_out);
      if (!file) throw DataError("cannot write predictions: " + pr_out);
    }
    std::ostream& out = pr_out.empty() ? std::cout : file;
    for (const RelationInstance& inst : data.instances) {
      RelationScores scores = predict_scores(ckpt, inst);
      const DecodeMode mode = ckpt.config.task == TaskMode::DialogRE ? DecodeMode::MultiLabel
                                                                     : DecodeMode::SingleLabel;
      nlohmann::json probs;
      for (int i = 0; i < scores.size(); ++i)
        probs[ckpt.labels.label(i)] = scores.probs[static_cast<std::size_t>(i)];
      nlohmann::json rec{{"dialogue_id", inst.dialogue->dialogue_id},
                         {"subject", inst.subject},
                         {"object", inst.object}};
      nlohmann::json preds = nlohmann::json::array();
      for (int id : decide_labels(scores, mode)) preds.push_back(ckpt.labels.label(id));
      rec["predicted"] = std::move(preds);
      rec["probs"] = std::move(probs);
      out << rec.dump() << '\n';
    }
    return 0;
  }

  if (gc_cmd->parsed()) {
    TrainConfig cfg = TrainConfig::desk_preset();
    cfg.d_model = gc_dim;
    cfg.encoder_heads = 4;
    cfg.turn_attention_heads = 4;
    cfg.seed = gc_seed;
    SyntheticConfig scfg = SyntheticConfig::standard();
    scfg.num_instances = 1;
    Dataset data = gen_synthetic(scfg, gc_seed);
    auto vocab = std::make_shared<const Vocab>(build_vocab(data));
    Tokenizer tok(vocab);
    const RelationInstance& inst = data.instances.front();
    const InputSequence input = build_input(inst, tok, cfg.max_len, cfg.speaker_slots);
    const DialogueGraph graph = build_graph(input, inst);
    const Tensor targets = gold_targets(inst, *data.labels);
    ParamStore params =
        init_params(ModelDims::from_config(cfg, vocab->size(), data.labels->size()), gc_seed);
    LossFn loss = [&](Tape& tape, ParamVars& pv) {
      ForwardOutput out = model_forward(tape, pv, input, graph, cfg, false, nullptr);
      return tape.bce_with_logits(out.logits, targets);
    };
    GradReport rep = grad_check(loss, params, gc_samples, gc_eps, gc_seed);
    std::cout << "samples " << rep.samples.size() << "\nmax_rel_err " << rep.max_rel_err << '\n';
    if (!rep.pass(gc_tol)) {
      for (const GradCheckSample& s : rep.samples)
        if (s.rel_err >= gc_tol)
          std::cerr << "  " << s.param << "[" << s.index << "] analytic " << s.analytic
                    << " numeric " << s.numeric << " rel_err " << s.rel_err << '\n';
      throw NumericError("gradient check failed (tol " + std::to_string(gc_tol) + ")");
    }
    std::cout << "pass\n";
    return 0;
  }

  if (export_cmd->parsed()) {
    Dataset data = load_canonical(ex_data);
    if (ex_index < 0 || ex_index >= static_cast<int>(data.size()))
      throw DataError("instance index out of range");
    const RelationInstance& inst = data.instances[static_cast<std::size_t>(ex_index)];
    auto vocab = std::make_shared<const Vocab>(build_vocab(data));
    Tokenizer tok(vocab);
    TrainConfig cfg = TrainConfig::desk_preset();
    const InputSequence input = build_input(inst, tok, cfg.max_len, cfg.speaker_slots);
    const DialogueGraph graph = build_graph(input, inst);
    if (ex_out.empty()) {
      std::cout << graph.to_debug_text();
    } else {
      std::ofstream out(ex_out);
      if (!out) throw DataError("cannot write graph export: " + ex_out);
      out << graph.to_debug_text();
    }
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
