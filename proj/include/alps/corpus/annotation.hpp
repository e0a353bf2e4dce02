#pragma once

// Simulated annotation and annotation cost accounting.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <set>
#include <string>
#include <vector>

#include "alps/chain/chain_crf.hpp"
#include "alps/corpus/types.hpp"
#include "alps/tree/tree_crf.hpp"

namespace alps {

enum class AnnotationStatus { Unlabeled, Partial, Full };

inline const char* to_string(AnnotationStatus s) {
  switch (s) {
    case AnnotationStatus::Unlabeled: return "unlabeled";
    case AnnotationStatus::Partial: return "partial";
    case AnnotationStatus::Full: return "full";
  }
  return "?";
}

/// Which positions of a sentence have revealed gold values. Annotated
/// positions are constrained to the gold value (a tag id for tagging, a head
/// index for parsing); the rest are unconstrained.
struct AnnotationState {
  AnnotationStatus status = AnnotationStatus::Unlabeled;
  std::vector<std::uint8_t> annotated;
  std::vector<int> value;  // -1 where not annotated

  static AnnotationState unlabeled(std::size_t n) {
    return {AnnotationStatus::Unlabeled, std::vector<std::uint8_t>(n, 0), std::vector<int>(n, -1)};
  }

  std::size_t size() const { return annotated.size(); }
  bool is_annotated(std::size_t i) const { return annotated[i] != 0; }
  std::size_t num_annotated() const {
    return static_cast<std::size_t>(std::count(annotated.begin(), annotated.end(), 1));
  }

  void reveal(std::size_t i, int gold) {
    annotated[i] = 1;
    value[i] = gold;
  }

  void refresh_status() {
    std::size_t k = num_annotated();
    status = k == 0 ? AnnotationStatus::Unlabeled
                    : (k == size() ? AnnotationStatus::Full : AnnotationStatus::Partial);
  }

  /// Union of two annotations of the same sentence.
  void merge(const AnnotationState& other) {
    for (std::size_t i = 0; i < size(); ++i)
      if (other.is_annotated(i)) reveal(i, other.value[i]);
    refresh_status();
  }

  chain::ConstraintMask chain_mask(std::size_t num_labels) const {
    auto m = chain::ConstraintMask::unconstrained(size(), num_labels);
    for (std::size_t i = 0; i < size(); ++i)
      if (is_annotated(i)) m.fix(i, static_cast<std::size_t>(value[i]));
    return m;
  }

  tree::HeadConstraint head_constraint() const {
    auto c = tree::HeadConstraint::unconstrained(size());
    for (std::size_t m = 1; m <= size(); ++m)
      if (is_annotated(m - 1)) c.fix(m, static_cast<std::size_t>(value[m - 1]));
    return c;
  }

  bool operator==(const AnnotationState&) const = default;
};

/// Gold value of position i as stored in AnnotationState::value.
inline int gold_value(const Sentence& s, std::size_t i, Task task, const LabelSet& tags) {
  if (task == Task::Parsing) return s.tokens[i].head;
  return tags.id(s.tokens[i].tag);
}

/// Reveals gold values at the queried positions. For BIO tagging a queried
/// token inside a gold mention reveals the whole mention.
inline AnnotationState simulate_annotation(const Sentence& sentence,
                                           const std::set<std::size_t>& queried, Task task,
                                           const LabelSet& tags) {
  AnnotationState st = AnnotationState::unlabeled(sentence.size());
  std::vector<Mention> spans;
  if (task != Task::Parsing) spans = spans_from_tags(tags_of(sentence));
  for (std::size_t q : queried) {
    if (q >= sentence.size()) throw std::out_of_range("queried position outside sentence");
    st.reveal(q, gold_value(sentence, q, task, tags));
    if (task == Task::Parsing) continue;
    for (const auto& sp : spans)
      if (static_cast<int>(q) >= sp.start && static_cast<int>(q) <= sp.end)
        for (int i = sp.start; i <= sp.end; ++i)
          st.reveal(static_cast<std::size_t>(i), gold_value(sentence, i, task, tags));
  }
  st.refresh_status();
  return st;
}

inline AnnotationState full_annotation(const Sentence& sentence, Task task, const LabelSet& tags) {
  std::set<std::size_t> all;
  for (std::size_t i = 0; i < sentence.size(); ++i) all.insert(i);
  return simulate_annotation(sentence, all, task, tags);
}

enum class CostMode { FA, PA };

struct CostConfig {
  std::set<std::string> cost_pos = {"PROPN", "ADJ"};
  /// Parsing: count annotated heads instead of summing surface distances.
  bool dpar_count_edges = false;
  /// Tagging FA: count every token instead of the POS-filtered subset.
  bool unfiltered_fa = false;
};

/// Labeling cost of one sentence's annotation.
inline double count_labeling_cost(const Sentence& sentence, const AnnotationState& ann, Task task,
                                  CostMode mode, const CostConfig& cfg = {}) {
  double cost = 0.0;
  for (std::size_t i = 0; i < sentence.size(); ++i) {
    if (!ann.is_annotated(i)) continue;
    if (task == Task::Parsing) {
      if (cfg.dpar_count_edges) {
        cost += 1.0;
      } else {
        // ROOT sits at virtual position 0
        const int pos = static_cast<int>(i) + 1;
        cost += std::abs(pos - sentence.tokens[i].head);
      }
    } else if (mode == CostMode::FA && !cfg.unfiltered_fa) {
      cost += cfg.cost_pos.count(sentence.tokens[i].pos) ? 1.0 : 0.0;
    } else {
      cost += 1.0;
    }
  }
  return cost;
}

}  // namespace alps
