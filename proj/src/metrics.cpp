#include "turngcn/metrics.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <sstream>

#include "turngcn/dialogue_graph.hpp"

namespace turngcn {

namespace {

double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

double f1_of(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

void require_single_label(const std::vector<LabelSet>& sets, const char* what) {
  for (const LabelSet& s : sets)
    if (s.size() != 1) throw ShapeError(std::string(what) + " requires single-label sets");
}

}  // namespace

MetricsReport score_triples(const std::vector<LabelSet>& preds,
                            const std::vector<LabelSet>& golds) {
  if (preds.size() != golds.size()) throw ShapeError("score_triples: misaligned lists");
  MetricsReport rep;
  long tp = 0, fp = 0, fn = 0;
  std::map<std::string, ClassScore> classes;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    for (const std::string& p : preds[i]) {
      if (golds[i].count(p)) {
        ++tp;
        ++classes[p].tp;
      } else {
        ++fp;
        ++classes[p].fp;
      }
    }
    for (const std::string& g : golds[i]) {
      ++classes[g].support;
      if (!preds[i].count(g)) {
        ++fn;
        ++classes[g].fn;
      }
    }
  }
  rep.precision = safe_div(static_cast<double>(tp), static_cast<double>(tp + fp));
  rep.recall = safe_div(static_cast<double>(tp), static_cast<double>(tp + fn));
  rep.f1 = f1_of(rep.precision, rep.recall);
  if (tp + fp == 0 && fn > 0) rep.warnings.push_back("no predictions; precision reported as 0");
  for (auto& [label, cs] : classes) {
    cs.label = label;
    cs.precision = safe_div(cs.tp, cs.tp + cs.fp);
    cs.recall = safe_div(cs.tp, cs.tp + cs.fn);
    cs.f1 = f1_of(cs.precision, cs.recall);
    rep.per_class.push_back(cs);
  }
  return rep;
}

double score_weighted_f1(const std::vector<LabelSet>& preds, const std::vector<LabelSet>& golds) {
  if (preds.size() != golds.size()) throw ShapeError("score_weighted_f1: misaligned lists");
  require_single_label(preds, "weighted-F1");
  require_single_label(golds, "weighted-F1");
  std::map<std::string, ClassScore> classes;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const std::string& p = *preds[i].begin();
    const std::string& g = *golds[i].begin();
    ++classes[g].support;
    if (p == g) {
      ++classes[p].tp;
    } else {
      ++classes[p].fp;
      ++classes[g].fn;
    }
  }
  const double total = static_cast<double>(preds.size());
  double weighted = 0.0;
  for (auto& [label, cs] : classes) {
    (void)label;
    const double f1 = f1_of(safe_div(cs.tp, cs.tp + cs.fp), safe_div(cs.tp, cs.tp + cs.fn));
    weighted += (cs.support / total) * f1;
  }
  return weighted;
}

double score_micro_f1_excl(const std::vector<LabelSet>& preds, const std::vector<LabelSet>& golds,
                           const std::string& excluded_label,
                           std::vector<std::string>* warnings) {
  if (preds.size() != golds.size()) throw ShapeError("score_micro_f1_excl: misaligned lists");
  require_single_label(preds, "micro-F1-excl");
  require_single_label(golds, "micro-F1-excl");
  long tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const std::string& p = *preds[i].begin();
    const std::string& g = *golds[i].begin();
    const bool p_excl = p == excluded_label;
    const bool g_excl = g == excluded_label;
    if (g_excl && p_excl) continue;
    if (p == g) {
      ++tp;
    } else {
      if (!p_excl) ++fp;  // wrong non-excluded prediction
      if (!g_excl) ++fn;  // missed non-excluded gold
    }
  }
  if (2 * tp + fp + fn == 0) {
    if (warnings) warnings->push_back("micro-F1-excl has an empty denominator; reported as 0");
    return 0.0;
  }
  return safe_div(2.0 * static_cast<double>(tp), static_cast<double>(2 * tp + fp + fn));
}

int default_prefix_rule(const RelationInstance& instance) {
  const auto& turns = instance.dialogue->turns;
  int first_subject = -1, first_object = -1;
  for (int i = 0; i < static_cast<int>(turns.size()); ++i) {
    const Turn& t = turns[static_cast<std::size_t>(i)];
    if (first_subject < 0 && argument_mentioned(t, instance.subject)) first_subject = i;
    if (first_object < 0 && argument_mentioned(t, instance.object)) first_object = i;
    if (first_subject >= 0 && first_object >= 0) return std::max(first_subject, first_object) + 1;
  }
  return static_cast<int>(turns.size());  // no co-covering prefix: full dialogue
}

MetricsReport score_f1c(const PrefixPredictor& model,
                        const std::vector<RelationInstance>& instances, const PrefixRule& rule) {
  std::vector<LabelSet> preds, golds;
  preds.reserve(instances.size());
  golds.reserve(instances.size());
  for (const RelationInstance& inst : instances) {
    const int prefix = rule ? rule(inst) : default_prefix_rule(inst);
    preds.push_back(model(inst, prefix));
    golds.emplace_back(inst.gold_relations.begin(), inst.gold_relations.end());
  }
  MetricsReport rep = score_triples(preds, golds);
  rep.f1c = rep.f1;
  return rep;
}

std::string MetricsReport::to_text() const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  if (!per_class.empty()) {
    std::size_t w = 5;
    for (const ClassScore& c : per_class) w = std::max(w, c.label.size());
    os << std::left << std::setw(static_cast<int>(w) + 2) << "label"
       << std::right << std::setw(8) << "prec" << std::setw(8) << "rec" << std::setw(8) << "f1"
       << std::setw(9) << "support" << '\n';
    for (const ClassScore& c : per_class)
      os << std::left << std::setw(static_cast<int>(w) + 2) << c.label << std::right
         << std::setw(8) << c.precision << std::setw(8) << c.recall << std::setw(8) << c.f1
         << std::setw(9) << c.support << '\n';
  }
  os << "precision " << precision << "  recall " << recall << "  f1 " << f1 << '\n';
  if (f1c) os << "f1c " << *f1c << '\n';
  if (weighted_f1) os << "weighted_f1 " << *weighted_f1 << '\n';
  if (micro_f1_excl) os << "micro_f1_excl " << *micro_f1_excl << '\n';
  for (const std::string& warning : warnings) os << "warning: " << warning << '\n';
  return os.str();
}

std::string MetricsReport::to_kv() const {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "precision\t" << precision << "\nrecall\t" << recall << "\nf1\t" << f1 << '\n';
  if (f1c) os << "f1c\t" << *f1c << '\n';
  if (weighted_f1) os << "weighted_f1\t" << *weighted_f1 << '\n';
  if (micro_f1_excl) os << "micro_f1_excl\t" << *micro_f1_excl << '\n';
  for (const ClassScore& c : per_class)
    os << "class." << c.label << ".f1\t" << c.f1 << '\n';
  return os.str();
}

}  // namespace turngcn
