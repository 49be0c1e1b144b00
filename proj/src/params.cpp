#include "turngcn/params.hpp"

#include <cmath>

namespace turngcn {

Tensor& ParamStore::add(const std::string& name, Tensor t) {
  if (has(name)) throw ShapeError("duplicate parameter name: " + name);
  t.requires_grad = true;
  index_[name] = values_.size();
  names_.push_back(name);
  values_.push_back(std::move(t));
  return values_.back();
}

Tensor& ParamStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ShapeError("unknown parameter: " + name);
  return values_[it->second];
}

const Tensor& ParamStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ShapeError("unknown parameter: " + name);
  return values_[it->second];
}

std::size_t ParamStore::total_size() const {
  std::size_t n = 0;
  for (const Tensor& t : values_) n += t.size();
  return n;
}

ModelDims ModelDims::from_config(const TrainConfig& cfg, int vocab_size, int num_labels) {
  ModelDims d;
  d.vocab_size = vocab_size;
  d.num_labels = num_labels;
  d.d_model = cfg.d_model;
  d.encoder_layers = cfg.encoder_layers;
  d.encoder_heads = cfg.encoder_heads;
  d.ff_mult = cfg.ff_mult;
  d.turn_attention_heads = cfg.turn_attention_heads;
  d.lstm_layers = cfg.lstm_layers;
  d.gcn_layers = cfg.gcn_layers;
  d.max_len = cfg.max_len;
  d.speaker_slots = cfg.speaker_slots;
  return d;
}

void ModelDims::validate() const {
  if (vocab_size <= 0 || num_labels <= 0 || d_model <= 0 || encoder_layers < 0 ||
      encoder_heads <= 0 || ff_mult <= 0 || turn_attention_heads <= 0 || lstm_layers <= 0 ||
      gcn_layers < 0 || max_len <= 0 || speaker_slots <= 0)
    throw ShapeError("all model dimensions must be positive");
  if (d_model % encoder_heads != 0 || d_model % turn_attention_heads != 0)
    throw ShapeError("d_model must be divisible by the head counts");
}

namespace {

// Symmetric uniform with fan-based scale: U(-a, a), a = sqrt(6 / (fan_in + fan_out)).
Tensor uniform_matrix(int rows, int cols, int fan_in, int fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t({rows, cols});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-a, a);
  return t;
}

// Embedding rows: U(-sqrt(3/d), sqrt(3/d)), i.e. per-entry variance 1/d.
Tensor uniform_embedding(int rows, int d, Rng& rng) {
  const double a = std::sqrt(3.0 / static_cast<double>(d));
  Tensor t({rows, d});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-a, a);
  return t;
}

void add_linear(ParamStore& p, const std::string& prefix, int out, int in, Rng& rng) {
  p.add(prefix + ".w", uniform_matrix(out, in, in, out, rng));
  p.add(prefix + ".b", Tensor({1, out}));
}

void add_layer_norm(ParamStore& p, const std::string& prefix, int d) {
  p.add(prefix + ".gain", Tensor::full({1, d}, 1.0));
  p.add(prefix + ".bias", Tensor({1, d}));
}

void add_attention_block(ParamStore& p, const std::string& prefix, int d, Rng& rng) {
  add_linear(p, prefix + ".q", d, d, rng);
  add_linear(p, prefix + ".k", d, d, rng);
  add_linear(p, prefix + ".v", d, d, rng);
  add_linear(p, prefix + ".o", d, d, rng);
}

void add_lstm_direction(ParamStore& p, const std::string& prefix, int in, int hidden, Rng& rng) {
  p.add(prefix + ".w_ih", uniform_matrix(4 * hidden, in, in, hidden, rng));
  p.add(prefix + ".w_hh", uniform_matrix(4 * hidden, hidden, hidden, hidden, rng));
  p.add(prefix + ".b", Tensor({1, 4 * hidden}));
}

}  // namespace

ParamStore init_params(const ModelDims& dims, uint64_t seed) {
  dims.validate();
  Rng rng(seed);
  ParamStore p;
  const int d = dims.d_model;

  p.add("embed.token", uniform_embedding(dims.vocab_size, d, rng));
  p.add("embed.segment", uniform_embedding(2, d, rng));
  p.add("embed.position", uniform_embedding(dims.max_len, d, rng));
  p.add("embed.speaker", uniform_embedding(dims.speaker_rows(), d, rng));

  for (int l = 0; l < dims.encoder_layers; ++l) {
    const std::string pre = "enc." + std::to_string(l);
    add_attention_block(p, pre + ".attn", d, rng);
    add_layer_norm(p, pre + ".ln1", d);
    add_linear(p, pre + ".ff1", dims.ff_mult * d, d, rng);
    add_linear(p, pre + ".ff2", d, dims.ff_mult * d, rng);
    add_layer_norm(p, pre + ".ln2", d);
  }

  add_attention_block(p, "turnattn", d, rng);
  add_layer_norm(p, "turnattn.ln", d);

  for (int l = 0; l < dims.gcn_layers; ++l) {
    const std::string pre = "gcn." + std::to_string(l);
    for (int depth = 0; depth < dims.lstm_layers; ++depth) {
      const int in = depth == 0 ? d : 2 * d;
      add_lstm_direction(p, pre + ".lstm." + std::to_string(depth) + ".fw", in, d, rng);
      add_lstm_direction(p, pre + ".lstm." + std::to_string(depth) + ".bw", in, d, rng);
    }
    p.add(pre + ".w_alpha", uniform_matrix(d, 2 * d, 2 * d, d, rng));
    p.add(pre + ".b_alpha", Tensor({1, d}));
    for (const std::string& k : edge_type_names()) {
      p.add(pre + ".edge." + k + ".w", uniform_matrix(d, d, d, d, rng));
      p.add(pre + ".edge." + k + ".b", Tensor({1, d}));
    }
  }

  p.add("cls.w", uniform_matrix(dims.num_labels, dims.feature_dim(), dims.feature_dim(),
                                dims.num_labels, rng));
  return p;
}

}  // namespace turngcn
