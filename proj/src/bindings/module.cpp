#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "turngcn/checkpoint.hpp"
#include "turngcn/grad_check.hpp"
#include "turngcn/metrics.hpp"
#include "turngcn/model.hpp"
#include "turngcn/synthetic.hpp"
#include "turngcn/trainer.hpp"

namespace py = pybind11;
using namespace turngcn;

namespace {

Dialogue dialogue_from_pairs(const std::vector<std::pair<std::string, std::string>>& turns) {
  Dialogue d;
  for (const auto& [speaker, text] : turns) d.turns.push_back(Turn{speaker, text});
  return d;
}

std::vector<ErcUtteranceRecord> conversation_from_triples(
    const std::vector<std::tuple<std::string, std::string, std::string>>& records) {
  std::vector<ErcUtteranceRecord> conv;
  for (const auto& [speaker, utterance, emotion] : records)
    conv.push_back(ErcUtteranceRecord{speaker, utterance, emotion});
  return conv;
}

SurroundMask mask_from_spans(int length, const std::vector<std::pair<int, int>>& turn_spans,
                             int window) {
  InputSequence seq;
  seq.tokens.assign(static_cast<std::size_t>(length), 0);
  seq.turn_spans = turn_spans;
  return build_surround_mask(seq, window);
}

std::vector<std::vector<bool>> mask_to_rows(const SurroundMask& m) {
  std::vector<std::vector<bool>> rows(static_cast<std::size_t>(m.n));
  for (int r = 0; r < m.n; ++r) {
    rows[static_cast<std::size_t>(r)].resize(static_cast<std::size_t>(m.n));
    for (int c = 0; c < m.n; ++c) rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = m.is_allowed(r, c);
  }
  return rows;
}

py::dict report_to_dict(const MetricsReport& rep) {
  py::dict d;
  d["precision"] = rep.precision;
  d["recall"] = rep.recall;
  d["f1"] = rep.f1;
  if (rep.f1c) d["f1c"] = *rep.f1c;
  if (rep.weighted_f1) d["weighted_f1"] = *rep.weighted_f1;
  if (rep.micro_f1_excl) d["micro_f1_excl"] = *rep.micro_f1_excl;
  py::dict per_class;
  for (const ClassScore& c : rep.per_class) per_class[py::str(c.label)] = c.f1;
  d["per_class_f1"] = per_class;
  return d;
}

std::vector<LabelSet> to_label_sets(const std::vector<std::vector<std::string>>& lists) {
  std::vector<LabelSet> out;
  out.reserve(lists.size());
  for (const auto& l : lists) out.emplace_back(l.begin(), l.end());
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Dialogue relation extraction with a turn-aware graph convolutional model";

  py::register_exception<DataError>(m, "DataError");
  py::register_exception<NumericError>(m, "NumericError");

  m.def("split_words", &split_words, py::arg("text"),
        "Lowercase whitespace-and-punctuation tokenization");

  m.def(
      "anonymize_speakers",
      [](const std::vector<std::pair<std::string, std::string>>& turns) {
        auto [dialogue, mapping] = anonymize_speakers(dialogue_from_pairs(turns));
        std::vector<std::pair<std::string, std::string>> out;
        for (const Turn& t : dialogue.turns) out.emplace_back(t.speaker_id, t.text);
        return py::make_tuple(out, mapping);
      },
      py::arg("turns"), "Rename speakers to S1, S2, ... in order of first appearance");

  m.def(
      "erc_to_re",
      [](const std::vector<std::tuple<std::string, std::string, std::string>>& records) {
        std::vector<py::dict> out;
        for (const RelationInstance& inst : erc_to_re(conversation_from_triples(records))) {
          py::dict d;
          d["subject"] = inst.subject;
          d["object"] = inst.object;
          d["relation"] = inst.gold_relations.front();
          out.push_back(std::move(d));
        }
        return out;
      },
      py::arg("records"),
      "Convert (speaker, utterance, emotion) records to relation triples");

  m.def("surround_mask",
        [](int length, const std::vector<std::pair<int, int>>& turn_spans, int window) {
          return mask_to_rows(mask_from_spans(length, turn_spans, window));
        },
        py::arg("length"), py::arg("turn_spans"), py::arg("window"),
        "Boolean allowed-matrix of the surrounding-turn mask");

  m.def(
      "masked_softmax",
      [](const std::vector<std::vector<double>>& scores,
         const std::vector<std::vector<bool>>& allowed) {
        const int n = static_cast<int>(scores.size());
        Tensor s({n, n});
        SurroundMask mask(n, 0);
        for (int i = 0; i < n; ++i) {
          if (static_cast<int>(scores[static_cast<std::size_t>(i)].size()) != n ||
              static_cast<int>(allowed[static_cast<std::size_t>(i)].size()) != n)
            throw ShapeError("masked_softmax expects square inputs");
          for (int j = 0; j < n; ++j) {
            s.at(i, j) = scores[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            mask.set(i, j, allowed[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
          }
        }
        Tensor p = masked_softmax(s, mask);
        std::vector<std::vector<double>> out(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
          out[static_cast<std::size_t>(i)] =
              std::vector<double>(p.data() + static_cast<std::size_t>(i) * n,
                                  p.data() + static_cast<std::size_t>(i + 1) * n);
        return out;
      },
      py::arg("scores"), py::arg("allowed"));

  m.def(
      "score_triples",
      [](const std::vector<std::vector<std::string>>& preds,
         const std::vector<std::vector<std::string>>& golds) {
        return report_to_dict(score_triples(to_label_sets(preds), to_label_sets(golds)));
      },
      py::arg("preds"), py::arg("golds"));

  m.def(
      "weighted_f1",
      [](const std::vector<std::vector<std::string>>& preds,
         const std::vector<std::vector<std::string>>& golds) {
        return score_weighted_f1(to_label_sets(preds), to_label_sets(golds));
      },
      py::arg("preds"), py::arg("golds"));

  m.def(
      "micro_f1_excl",
      [](const std::vector<std::vector<std::string>>& preds,
         const std::vector<std::vector<std::string>>& golds, const std::string& excluded) {
        return score_micro_f1_excl(to_label_sets(preds), to_label_sets(golds), excluded);
      },
      py::arg("preds"), py::arg("golds"), py::arg("excluded"));

  m.def(
      "gen_synthetic",
      [](int num_instances, uint64_t seed, const std::string& out_path) {
        SyntheticConfig cfg = SyntheticConfig::standard();
        cfg.num_instances = num_instances;
        Dataset data = gen_synthetic(cfg, seed);
        save_canonical(data, out_path);
        return static_cast<int>(data.size());
      },
      py::arg("num_instances"), py::arg("seed"), py::arg("out_path"),
      "Write a planted-rule synthetic dataset (canonical JSONL)");

  m.def(
      "train_file",
      [](const std::string& train_path, const std::string& ckpt_path,
         const std::string& config_json, uint64_t seed) {
        TrainConfig cfg =
            config_json.empty() ? TrainConfig::desk_preset() : TrainConfig::from_json_string(config_json);
        cfg.seed = seed;
        Dataset data = load_canonical(train_path);
        TrainResult result = train(cfg, data, Dataset{});
        result.best.save(ckpt_path);
        return result.loss_curve;
      },
      py::arg("train_path"), py::arg("ckpt_path"), py::arg("config_json") = std::string(),
      py::arg("seed") = static_cast<uint64_t>(7),
      "Train on a canonical JSONL dataset, save the checkpoint, return the loss curve");

  m.def(
      "evaluate_file",
      [](const std::string& ckpt_path, const std::string& data_path, const std::string& metrics) {
        Checkpoint ckpt = Checkpoint::load(ckpt_path);
        auto labels = std::make_shared<const LabelMap>(ckpt.labels);
        Dataset data = load_canonical(data_path, labels);
        return report_to_dict(
            evaluate(ckpt, data, MetricsSelection::parse(metrics, ckpt.config.task)));
      },
      py::arg("ckpt_path"), py::arg("data_path"), py::arg("metrics") = std::string());

  m.def(
      "grad_check_quadratic",
      [](double theta, double eps) {
        ParamStore params;
        Tensor t({1, 1}, {theta});
        params.add("theta", std::move(t));
        LossFn loss = [](Tape& tape, ParamVars& pv) {
          Var th = pv["theta"];
          return tape.scale(tape.mul(th, th), 0.5);
        };
        GradReport rep = grad_check(loss, params, 1, eps, 1);
        py::dict d;
        d["analytic"] = rep.samples[0].analytic;
        d["numeric"] = rep.samples[0].numeric;
        d["max_rel_err"] = rep.max_rel_err;
        return d;
      },
      py::arg("theta") = 3.0, py::arg("eps") = 1e-5);
}
