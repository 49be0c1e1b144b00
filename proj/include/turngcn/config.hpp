#pragma once

#include <cstdint>
#include <string>

namespace turngcn {

enum class TaskMode { DialogRE, Erc };

std::string to_string(TaskMode mode);
TaskMode task_mode_from_string(const std::string& s);

/// Forward-pipeline ablation switches.
struct AblationFlags {
  bool no_speaker_embedding = false;
  bool no_turn_attention = false;
  bool no_turn_bilstm = false;

  bool any() const { return no_speaker_embedding || no_turn_attention || no_turn_bilstm; }
};

/// Full training/evaluation configuration. Defaults follow the reference
/// hyperparameter table (batch 12, lr 3e-5, window 1, 2-layer LSTM stacks,
/// 2 GCN layers, dropouts 0.1/0.2/0.6, d = 768); desk_preset() shrinks
/// dimensions and schedule for CPU-scale runs without changing structure.
struct TrainConfig {
  int epochs = 20;
  int batch_size = 12;
  double learning_rate = 3e-5;
  double weight_decay = 0.01;
  int max_len = 512;
  int surround_window = 1;

  int d_model = 768;
  int encoder_layers = 2;
  int encoder_heads = 12;
  int ff_mult = 4;
  int turn_attention_heads = 12;
  int lstm_layers = 2;  // stacked depth of each per-GCN-layer BiLSTM
  int gcn_layers = 2;   // G

  double dropout_attention = 0.1;
  double dropout_encoder = 0.1;
  double dropout_lstm = 0.2;
  double dropout_gcn = 0.6;

  uint64_t seed = 7;
  int max_steps = 0;        // 0 = run epochs to completion
  int speaker_slots = 10;   // per-dialogue speaker identities in the speaker table

  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  AblationFlags ablation;
  TaskMode task = TaskMode::DialogRE;

  static TrainConfig desk_preset();

  /// Throws ShapeError when rates fall outside [0,1) or dimensions are
  /// non-positive or incompatible (d_model % heads != 0).
  void validate() const;

  std::string to_json_string() const;
  static TrainConfig from_json_string(const std::string& text);
  static TrainConfig from_json_file(const std::string& path);
};

}  // namespace turngcn
