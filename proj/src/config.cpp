#include "turngcn/config.hpp"

#include <fstream>
#include <json.hpp>

#include "turngcn/tensor.hpp"

namespace turngcn {

using nlohmann::json;

std::string to_string(TaskMode mode) {
  return mode == TaskMode::DialogRE ? "dialog_re" : "erc";
}

TaskMode task_mode_from_string(const std::string& s) {
  if (s == "dialog_re") return TaskMode::DialogRE;
  if (s == "erc") return TaskMode::Erc;
  throw ShapeError("unknown task mode: " + s);
}

TrainConfig TrainConfig::desk_preset() {
  TrainConfig c;
  c.d_model = 64;
  c.encoder_layers = 2;
  c.encoder_heads = 4;
  c.turn_attention_heads = 4;
  c.max_len = 128;
  c.batch_size = 8;
  c.learning_rate = 1e-3;
  c.epochs = 10;
  return c;
}

void TrainConfig::validate() const {
  auto rate_ok = [](double r) { return r >= 0.0 && r < 1.0; };
  if (!rate_ok(dropout_attention) || !rate_ok(dropout_encoder) || !rate_ok(dropout_lstm) ||
      !rate_ok(dropout_gcn))
    throw ShapeError("dropout rates must lie in [0, 1)");
  if (epochs < 0 || batch_size <= 0 || max_len <= 0 || surround_window < 0)
    throw ShapeError("schedule values must be positive (surround_window may be 0)");
  if (d_model <= 0 || encoder_layers < 0 || encoder_heads <= 0 || ff_mult <= 0 ||
      turn_attention_heads <= 0 || lstm_layers <= 0 || gcn_layers < 0 || speaker_slots <= 0)
    throw ShapeError("model dimensions must be positive");
  if (d_model % encoder_heads != 0)
    throw ShapeError("d_model must be divisible by encoder_heads");
  if (d_model % turn_attention_heads != 0)
    throw ShapeError("d_model must be divisible by turn_attention_heads");
  if (learning_rate <= 0.0 || weight_decay < 0.0)
    throw ShapeError("learning_rate must be > 0 and weight_decay >= 0");
}

namespace {

json ablation_to_json(const AblationFlags& a) {
  return json{{"no_speaker_embedding", a.no_speaker_embedding},
              {"no_turn_attention", a.no_turn_attention},
              {"no_turn_bilstm", a.no_turn_bilstm}};
}

}  // namespace

std::string TrainConfig::to_json_string() const {
  json j;
  j["epochs"] = epochs;
  j["batch_size"] = batch_size;
  j["learning_rate"] = learning_rate;
  j["weight_decay"] = weight_decay;
  j["max_len"] = max_len;
  j["surround_window"] = surround_window;
  j["d_model"] = d_model;
  j["encoder_layers"] = encoder_layers;
  j["encoder_heads"] = encoder_heads;
  j["ff_mult"] = ff_mult;
  j["turn_attention_heads"] = turn_attention_heads;
  j["lstm_layers"] = lstm_layers;
  j["gcn_layers"] = gcn_layers;
  j["dropout_attention"] = dropout_attention;
  j["dropout_encoder"] = dropout_encoder;
  j["dropout_lstm"] = dropout_lstm;
  j["dropout_gcn"] = dropout_gcn;
  j["seed"] = seed;
  j["max_steps"] = max_steps;
  j["speaker_slots"] = speaker_slots;
  j["adam_beta1"] = adam_beta1;
  j["adam_beta2"] = adam_beta2;
  j["adam_eps"] = adam_eps;
  j["ablation"] = ablation_to_json(ablation);
  j["task"] = to_string(task);
  return j.dump();  // keys serialized in sorted order: canonical
}

TrainConfig TrainConfig::from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("config parse error: ") + e.what());
  }
  TrainConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("epochs", c.epochs);
  get("batch_size", c.batch_size);
  get("learning_rate", c.learning_rate);
  get("weight_decay", c.weight_decay);
  get("max_len", c.max_len);
  get("surround_window", c.surround_window);
  get("d_model", c.d_model);
  get("encoder_layers", c.encoder_layers);
  get("encoder_heads", c.encoder_heads);
  get("ff_mult", c.ff_mult);
  get("turn_attention_heads", c.turn_attention_heads);
  get("lstm_layers", c.lstm_layers);
  get("gcn_layers", c.gcn_layers);
  get("dropout_attention", c.dropout_attention);
  get("dropout_encoder", c.dropout_encoder);
  get("dropout_lstm", c.dropout_lstm);
  get("dropout_gcn", c.dropout_gcn);
  get("seed", c.seed);
  get("max_steps", c.max_steps);
  get("speaker_slots", c.speaker_slots);
  get("adam_beta1", c.adam_beta1);
  get("adam_beta2", c.adam_beta2);
  get("adam_eps", c.adam_eps);
  if (j.contains("ablation")) {
    const json& a = j.at("ablation");
    auto getf = [&](const char* key, bool& field) {
      if (a.contains(key)) field = a.at(key).get<bool>();
    };
    getf("no_speaker_embedding", c.ablation.no_speaker_embedding);
    getf("no_turn_attention", c.ablation.no_turn_attention);
    getf("no_turn_bilstm", c.ablation.no_turn_bilstm);
  }
  if (j.contains("task")) c.task = task_mode_from_string(j.at("task").get<std::string>());
  return c;
}

TrainConfig TrainConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json_string(text);
}

}  // namespace turngcn
