#pragma once

#include <string>
#include <vector>

#include "turngcn/config.hpp"
#include "turngcn/corpus.hpp"
#include "turngcn/params.hpp"
#include "turngcn/tokenizer.hpp"

namespace turngcn {

struct HistoryEntry {
  int epoch = 0;
  int step = 0;
  double train_loss = 0.0;
  double dev_metric = 0.0;
};

/// Self-contained model snapshot: evaluation needs nothing else. The on-disk
/// form is a sectioned text container with hexfloat values, so canonical
/// write -> read -> write round-trips byte-identically.
struct Checkpoint {
  TrainConfig config;
  Vocab vocab;
  LabelMap labels;
  ParamStore params;
  int step = 0;
  std::vector<HistoryEntry> history;

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

}  // namespace turngcn
