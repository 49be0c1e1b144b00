#include "turngcn/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace turngcn {

namespace {

constexpr const char* kMagic = "turngcn-checkpoint v1";

std::string hex_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

double parse_hex_double(const std::string& s, const char* where) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str()) throw DataError(std::string("checkpoint: bad number in ") + where);
  return v;
}

std::string shape_string(const Tensor& t) {
  std::string s;
  for (int i = 0; i < t.ndim(); ++i) {
    if (i) s += ',';
    s += std::to_string(t.dim(i));
  }
  return s;
}

std::vector<int> parse_shape(const std::string& s) {
  std::vector<int> shape;
  std::istringstream is(s);
  std::string part;
  while (std::getline(is, part, ',')) shape.push_back(std::stoi(part));
  return shape;
}

}  // namespace

void Checkpoint::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out << kMagic << '\n';
  out << "[meta]\n";
  out << "step\t" << step << '\n';
  out << "[config]\n" << config.to_json_string() << '\n';
  out << "[labels]\n" << labels.size() << '\n';
  for (int i = 0; i < labels.size(); ++i) out << i << '\t' << labels.label(i) << '\n';
  out << "[vocab]\n" << vocab.size() << '\n';
  for (int i = 0; i < vocab.size(); ++i) out << vocab.token(i) << '\n';
  out << "[history]\n" << history.size() << '\n';
  for (const HistoryEntry& h : history)
    out << h.epoch << '\t' << h.step << '\t' << hex_double(h.train_loss) << '\t'
        << hex_double(h.dev_metric) << '\n';
  out << "[params]\n" << params.count() << '\n';
  for (std::size_t i = 0; i < params.count(); ++i) {
    const Tensor& t = params.at(i);
    out << params.names()[i] << '\t' << shape_string(t);
    for (std::size_t j = 0; j < t.size(); ++j) out << (j ? " " : "\t") << hex_double(t[j]);
    out << '\n';
  }
  if (!out) throw DataError("failed while writing checkpoint: " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  std::string line;
  if (!std::getline(in, line) || line != kMagic)
    throw DataError("not a checkpoint file (bad header): " + path);

  Checkpoint ck;
  auto expect = [&](const char* section) {
    if (!std::getline(in, line) || line != section)
      throw DataError(std::string("checkpoint: expected section ") + section);
  };
  auto read_count = [&](const char* what) {
    if (!std::getline(in, line)) throw DataError(std::string("checkpoint: missing count for ") + what);
    return std::stoi(line);
  };

  expect("[meta]");
  if (!std::getline(in, line) || line.rfind("step\t", 0) != 0)
    throw DataError("checkpoint: missing step");
  ck.step = std::stoi(line.substr(5));

  expect("[config]");
  if (!std::getline(in, line)) throw DataError("checkpoint: missing config");
  ck.config = TrainConfig::from_json_string(line);

  expect("[labels]");
  const int n_labels = read_count("labels");
  for (int i = 0; i < n_labels; ++i) {
    if (!std::getline(in, line)) throw DataError("checkpoint: labels truncated");
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) throw DataError("checkpoint: bad label line");
    ck.labels.add(line.substr(tab + 1));
  }

  expect("[vocab]");
  const int vocab_size = read_count("vocab");
  for (int i = 0; i < vocab_size; ++i) {
    if (!std::getline(in, line)) throw DataError("checkpoint: vocab truncated");
    if (i >= ck.vocab.size()) ck.vocab.add(line);
    else if (ck.vocab.token(i) != line)
      throw DataError("checkpoint: vocab specials mismatch");
  }

  expect("[history]");
  const int n_history = read_count("history");
  for (int i = 0; i < n_history; ++i) {
    if (!std::getline(in, line)) throw DataError("checkpoint: history truncated");
    std::istringstream is(line);
    HistoryEntry h;
    std::string loss, metric;
    is >> h.epoch >> h.step >> loss >> metric;
    h.train_loss = parse_hex_double(loss, "history");
    h.dev_metric = parse_hex_double(metric, "history");
    ck.history.push_back(h);
  }

  expect("[params]");
  const int n_params = read_count("params");
  for (int i = 0; i < n_params; ++i) {
    if (!std::getline(in, line)) throw DataError("checkpoint: params truncated");
    const std::size_t tab1 = line.find('\t');
    const std::size_t tab2 = line.find('\t', tab1 + 1);
    if (tab1 == std::string::npos || tab2 == std::string::npos)
      throw DataError("checkpoint: bad parameter line");
    const std::string name = line.substr(0, tab1);
    const std::vector<int> shape = parse_shape(line.substr(tab1 + 1, tab2 - tab1 - 1));
    Tensor t(shape);
    std::istringstream vs(line.substr(tab2 + 1));
    std::string tok;
    std::size_t j = 0;
    while (vs >> tok) {
      if (j >= t.size()) throw DataError("checkpoint: too many values for " + name);
      t[j++] = parse_hex_double(tok, name.c_str());
    }
    if (j != t.size()) throw DataError("checkpoint: too few values for " + name);
    ck.params.add(name, std::move(t));
  }
  return ck;
}

}  // namespace turngcn
