#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "turngcn/config.hpp"
#include "turngcn/tensor.hpp"

namespace turngcn {

/// Ordered, named collection of trainable tensors. Insertion order is the
/// canonical parameter order (checkpoints, optimizer state, sampling).
class ParamStore {
 public:
  Tensor& add(const std::string& name, Tensor t);
  bool has(const std::string& name) const { return index_.count(name) != 0; }
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  Tensor& at(std::size_t i) { return values_[i]; }
  const Tensor& at(std::size_t i) const { return values_[i]; }
  const std::vector<std::string>& names() const { return names_; }
  std::size_t count() const { return values_.size(); }
  std::size_t total_size() const;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Dimension configuration for parameter construction.
struct ModelDims {
  int vocab_size = 0;
  int num_labels = 0;
  int d_model = 64;
  int encoder_layers = 2;
  int encoder_heads = 4;
  int ff_mult = 4;
  int turn_attention_heads = 4;
  int lstm_layers = 2;
  int gcn_layers = 2;
  int max_len = 128;
  int speaker_slots = 10;

  static ModelDims from_config(const TrainConfig& cfg, int vocab_size, int num_labels);

  int feature_dim() const { return 3 * (gcn_layers + 1) * d_model; }
  int speaker_rows() const { return 3 + speaker_slots; }  // sharp + [S1] + [S2] + slots
  void validate() const;
};

/// Builds every trainable tensor of the model: embedding tables, encoder
/// stack, turn attention block, per-GCN-layer BiLSTMs and edge-type weights,
/// and the relation classifier. Weight matrices use symmetric fan-scaled
/// uniform init, biases are zero, layer-norm gains are one. Deterministic
/// under seed.
ParamStore init_params(const ModelDims& dims, uint64_t seed);

/// Edge-type key order used in parameter names and adjacency handling.
inline const std::vector<std::string>& edge_type_names() {
  static const std::vector<std::string> names{"dialogue", "argument", "speaker"};
  return names;
}

}  // namespace turngcn
