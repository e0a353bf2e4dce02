#pragma once

#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "alps/corpus/types.hpp"

namespace alps::eval {

/// Counts for precision/recall; empty denominators give 0.
struct PRF {
  double matched = 0;
  double predicted = 0;
  double gold = 0;

  double precision() const { return predicted > 0 ? matched / predicted : 0.0; }
  double recall() const { return gold > 0 ? matched / gold : 0.0; }
  double f1() const {
    const double p = precision(), r = recall();
    return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
  }
  PRF& operator+=(const PRF& o) {
    matched += o.matched;
    predicted += o.predicted;
    gold += o.gold;
    return *this;
  }
};

/// Exact span+type matching.
inline PRF span_prf(const std::vector<Mention>& gold, const std::vector<Mention>& pred) {
  std::set<Mention> g(gold.begin(), gold.end());
  PRF out;
  out.gold = static_cast<double>(g.size());
  std::set<Mention> p(pred.begin(), pred.end());
  out.predicted = static_cast<double>(p.size());
  for (const auto& m : p) out.matched += g.count(m) ? 1.0 : 0.0;
  return out;
}

inline PRF tag_prf(const std::vector<std::string>& gold, const std::vector<std::string>& pred) {
  return span_prf(spans_from_tags(gold), spans_from_tags(pred));
}

/// A relation identified by its two argument spans (with types) and label.
using RelationKey = std::tuple<Mention, Mention, std::string>;

inline PRF relation_prf(const std::vector<RelationKey>& gold, const std::vector<RelationKey>& pred) {
  std::set<RelationKey> g(gold.begin(), gold.end());
  std::set<RelationKey> p(pred.begin(), pred.end());
  PRF out;
  out.gold = static_cast<double>(g.size());
  out.predicted = static_cast<double>(p.size());
  for (const auto& r : p) out.matched += g.count(r) ? 1.0 : 0.0;
  return out;
}

inline std::vector<RelationKey> gold_relations(const Sentence& s) {
  std::vector<RelationKey> out;
  for (const auto& r : s.relations)
    out.emplace_back(s.mentions[r.arg1], s.mentions[r.arg2], r.label);
  return out;
}

struct Attachment {
  double tokens = 0;
  double head_correct = 0;
  double labeled_correct = 0;

  double uas() const { return tokens > 0 ? head_correct / tokens : 0.0; }
  double las() const { return tokens > 0 ? labeled_correct / tokens : 0.0; }
  Attachment& operator+=(const Attachment& o) {
    tokens += o.tokens;
    head_correct += o.head_correct;
    labeled_correct += o.labeled_correct;
    return *this;
  }
};

inline Attachment attachment(const Sentence& gold, const std::vector<int>& heads,
                             const std::vector<std::string>& labels) {
  Attachment a;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    a.tokens += 1;
    if (heads[i] == gold.tokens[i].head) {
      a.head_correct += 1;
      if (labels[i] == gold.tokens[i].deprel) a.labeled_correct += 1;
    }
  }
  return a;
}

/// Metrics of one model on one corpus. Unused fields stay 0.
struct EvalReport {
  double precision = 0, recall = 0, f1 = 0;  // tagging spans
  double las = 0, uas = 0;                    // parsing
  double mention_f1 = 0, relation_f1 = 0;     // ie

  bool operator==(const EvalReport&) const = default;

  /// The headline number of the task (F1, LAS, or relation F1).
  double primary(Task t) const {
    switch (t) {
      case Task::Tagging: return f1;
      case Task::Parsing: return las;
      case Task::IE: return relation_f1;
    }
    return 0.0;
  }
};

}  // namespace alps::eval
