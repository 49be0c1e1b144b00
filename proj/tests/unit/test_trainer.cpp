#include <cmath>
#include <doctest.h>
#include <filesystem>
#include <fstream>

#include "test_helpers.hpp"
#include "turngcn/synthetic.hpp"
#include "turngcn/trainer.hpp"

using namespace turngcn;
using namespace turngcn::testing;

namespace {

TrainConfig micro_config(int steps) {
  TrainConfig cfg = TrainConfig::desk_preset();
  cfg.d_model = 16;
  cfg.encoder_layers = 1;
  cfg.encoder_heads = 2;
  cfg.turn_attention_heads = 2;
  cfg.epochs = 1000;
  cfg.max_steps = steps;
  cfg.batch_size = 4;
  cfg.seed = 13;
  return cfg;
}

Dataset tiny_dataset(int n = 16, uint64_t seed = 5) {
  SyntheticConfig scfg = SyntheticConfig::standard();
  scfg.num_instances = n;
  return gen_synthetic(scfg, seed);
}

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("adam: weight_decay 0 reproduces plain Adam; decay is decoupled") {
  ParamStore p1;
  p1.add("w", Tensor({1, 2}, {0.5, -0.8}));
  ParamStore p2;
  p2.add("w", Tensor({1, 2}, {0.5, -0.8}));
  std::vector<Tensor> grads{Tensor({1, 2}, {0.1, -0.2})};

  AdamOptimizer plain(p1, 0.01, 0.9, 0.999, 1e-8, 0.0);
  plain.step(p1, grads);
  // hand-computed plain Adam step 1: mhat = g, vhat = g^2 => update = lr * g/(|g|+eps)
  CHECK(p1.at("w").at(0, 0) ==
        doctest::Approx(0.5 - 0.01 * (0.1 / (std::sqrt(0.1 * 0.1) + 1e-8))).epsilon(1e-12));
  CHECK(p1.at("w").at(0, 1) ==
        doctest::Approx(-0.8 - 0.01 * (-0.2 / (std::sqrt(0.2 * 0.2) + 1e-8))).epsilon(1e-12));

  AdamOptimizer decayed(p2, 0.01, 0.9, 0.999, 1e-8, 0.1);
  decayed.step(p2, grads);
  // decoupled decay subtracts lr * wd * w on top of the plain update
  CHECK(p2.at("w").at(0, 0) ==
        doctest::Approx(p1.at("w").at(0, 0) - 0.01 * 0.1 * 0.5).epsilon(1e-12));
  CHECK(p2.at("w").at(0, 1) ==
        doctest::Approx(p1.at("w").at(0, 1) - 0.01 * 0.1 * (-0.8)).epsilon(1e-12));
}

TEST_CASE("train: loss descends and runs are seed-deterministic") {
  Dataset data = tiny_dataset(16);
  TrainConfig cfg = micro_config(12);
  TrainResult a = train(cfg, data, Dataset{});
  TrainResult b = train(cfg, data, Dataset{});
  REQUIRE(a.loss_curve.size() == 12);
  CHECK(a.loss_curve == b.loss_curve);  // bit-identical curves
  CHECK(a.loss_curve.back() < a.loss_curve.front());

  TrainConfig other = cfg;
  other.seed = 14;
  TrainResult c = train(other, data, Dataset{});
  CHECK(c.loss_curve != a.loss_curve);
}

TEST_CASE("train: gradient sequence ignores on-disk record order") {
  Dataset data = tiny_dataset(12);
  Dataset permuted = data;
  Rng rng(100);
  rng.shuffle(permuted.instances);
  TrainConfig cfg = micro_config(6);
  TrainResult a = train(cfg, data, Dataset{});
  TrainResult b = train(cfg, permuted, Dataset{});
  CHECK(a.loss_curve == b.loss_curve);
}

TEST_CASE("train: empty dataset and divergence are loud errors") {
  CHECK_THROWS_AS(train(micro_config(1), Dataset{}, Dataset{}), DataError);
  Dataset data = tiny_dataset(8);
  TrainConfig cfg = micro_config(40);
  cfg.learning_rate = 1e6;  // drives the forward pass to overflow
  CHECK_THROWS_AS(train(cfg, data, Dataset{}), NumericError);
}

TEST_CASE("evaluate: empty data is an error, not a zero report") {
  Dataset data = tiny_dataset(8);
  TrainConfig cfg = micro_config(2);
  TrainResult r = train(cfg, data, Dataset{});
  Dataset empty;
  empty.labels = data.labels;
  CHECK_THROWS_AS(evaluate(r.best, empty, MetricsSelection::defaults_for(cfg.task)), DataError);
}

TEST_CASE("evaluate: random model stays in the chance band on a balanced binary set") {
  SyntheticConfig scfg = SyntheticConfig::standard();
  scfg.rules = {scfg.rules.front()};  // one rule: two balanced labels
  scfg.num_instances = 32;
  Dataset data = gen_synthetic(scfg, 9);
  TrainConfig cfg = micro_config(1);
  cfg.learning_rate = 1e-9;  // effectively untrained
  TrainResult r = train(cfg, data, Dataset{});
  MetricsSelection sel;
  sel.f1 = true;
  MetricsReport rep = evaluate(r.last, data, sel);
  CHECK(rep.f1 >= 0.2);
  CHECK(rep.f1 <= 0.8);
}

TEST_CASE("evaluate: label-space mismatch is rejected") {
  Dataset data = tiny_dataset(8);
  TrainConfig cfg = micro_config(2);
  TrainResult r = train(cfg, data, Dataset{});
  Dataset other = data;
  other.labels = std::make_shared<const LabelMap>(LabelMap::from_labels({"different"}));
  CHECK_THROWS_AS(evaluate(r.best, other, MetricsSelection::defaults_for(cfg.task)), ShapeError);
}

TEST_CASE("checkpoint: save/load round-trip is metric- and byte-identical") {
  Dataset data = tiny_dataset(10);
  TrainConfig cfg = micro_config(4);
  TrainResult r = train(cfg, data, Dataset{});

  MetricsReport before = evaluate(r.best, data, MetricsSelection::defaults_for(cfg.task));
  const std::string path = temp_path("roundtrip.ckpt");
  r.best.save(path);
  Checkpoint loaded = Checkpoint::load(path);
  MetricsReport after = evaluate(loaded, data, MetricsSelection::defaults_for(cfg.task));
  CHECK(before.f1 == after.f1);
  CHECK(before.precision == after.precision);
  CHECK(before.recall == after.recall);
  REQUIRE(before.f1c.has_value());
  CHECK(*before.f1c == *after.f1c);

  // parameters survive bit-for-bit
  REQUIRE(loaded.params.count() == r.best.params.count());
  for (std::size_t i = 0; i < loaded.params.count(); ++i)
    CHECK(loaded.params.at(i) == r.best.params.at(i));

  // canonical rewrite is byte-identical
  const std::string path2 = temp_path("roundtrip2.ckpt");
  loaded.save(path2);
  std::ifstream f1(path), f2(path2);
  std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(s1 == s2);
}

TEST_CASE("ablations: each flag reroutes the forward pipeline") {
  Dataset data = tiny_dataset(6);
  TrainConfig cfg = micro_config(1);
  auto vocab = std::make_shared<const Vocab>(build_vocab(data));
  Tokenizer tok(vocab);
  ParamStore params =
      init_params(ModelDims::from_config(cfg, vocab->size(), data.labels->size()), 77);
  const RelationInstance& inst = data.instances.front();
  const InputSequence input = build_input(inst, tok, cfg.max_len, cfg.speaker_slots);
  const DialogueGraph graph = build_graph(input, inst);

  auto forward_with = [&](const AblationFlags& flags, Tape& tape) {
    TrainConfig c = apply_ablation(cfg, flags);
    ParamVars pv(tape, params);
    return model_forward(tape, pv, input, graph, c, false, nullptr);
  };

  SUBCASE("no_turn_bilstm forces the injection to the identity") {
    Tape tape;
    TrainConfig c = apply_ablation(cfg, {.no_turn_bilstm = true});
    ParamVars pv(tape, params);
    Rng rng(4);
    Var h = tape.constant(random_tensor({graph.num_nodes(), cfg.d_model}, rng));
    Var injected = bilstm_inject(tape, pv, h, 0, graph, c, false, nullptr);
    CHECK(injected.id == h.id);
  }

  SUBCASE("no_turn_attention feeds encoder output straight to the node means") {
    Tape tape;
    ForwardOutput out = forward_with({.no_turn_attention = true}, tape);
    CHECK(out.attended.id == out.encoded.id);
    Var ref = init_node_features(tape, out.encoded, graph, input);
    CHECK(max_abs_diff(tape.val(out.states.h[0]), tape.val(ref)) == 0.0);
  }

  SUBCASE("no_speaker_embedding drops the speaker term") {
    Tape tape;
    TrainConfig c = apply_ablation(cfg, {.no_speaker_embedding = true});
    ParamVars pv(tape, params);
    const Tensor& without = tape.val(embed(tape, pv, input, true));
    Var tok_v = tape.gather_rows(pv["embed.token"], input.tokens);
    Var seg_v = tape.gather_rows(pv["embed.segment"], input.segment_ids);
    Var pos_v = tape.gather_rows(pv["embed.position"], input.position_ids);
    const Tensor& expected = tape.val(tape.add(tape.add(tok_v, seg_v), pos_v));
    CHECK(max_abs_diff(without, expected) == 0.0);
    (void)c;
  }

  SUBCASE("all three flags together still differ from the full model") {
    Tape ta;
    ForwardOutput full = forward_with({}, ta);
    Tape tb;
    ForwardOutput ablated = forward_with(
        {.no_speaker_embedding = true, .no_turn_attention = true, .no_turn_bilstm = true}, tb);
    CHECK(max_abs_diff(ta.val(full.logits), tb.val(ablated.logits)) > 1e-9);
  }
}

TEST_CASE("train: dev retention keeps the best epoch") {
  Dataset data = tiny_dataset(12, 3);
  TrainConfig cfg = micro_config(10);
  cfg.batch_size = 6;
  TrainResult r = train(cfg, data, data);  // dev = train for the smoke check
  CHECK(r.best_dev_metric >= 0.0);
  CHECK(r.best.step <= r.last.step);
  CHECK_FALSE(r.best.history.empty());
}

TEST_CASE("metrics selection parsing") {
  MetricsSelection s = MetricsSelection::parse("f1,micro_f1_excl", TaskMode::DialogRE);
  CHECK(s.f1);
  CHECK(s.micro_f1_excl);
  CHECK_FALSE(s.f1c);
  CHECK_THROWS_AS(MetricsSelection::parse("nope", TaskMode::Erc), ShapeError);
  MetricsSelection d = MetricsSelection::defaults_for(TaskMode::Erc);
  CHECK(d.weighted_f1);
}

}  // TEST_SUITE
