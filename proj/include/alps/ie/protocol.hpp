#pragma once

// Multi-task querying rules for pipelined mention + relation extraction:
// uncertainty combination, NIL-adjusted ratios and the simulated
// correct-or-discard relation annotation.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "alps/corpus/types.hpp"
#include "alps/estimator/estimator.hpp"
#include "alps/selector/config.hpp"
#include "alps/selector/query.hpp"

namespace alps::ie {

inline const std::string kNone = "NONE";

enum class MentionSource { Predicted, GoldCorrected, Annotated };

struct IEUncertainty {
  double mention = 0;
  double relation = 0;
  double beta = 0.9;
  double combined = 0;
};

inline IEUncertainty combine_uncertainty(double unc_mention, double unc_relation, double beta) {
  return {unc_mention, unc_relation, beta, beta * unc_mention + (1.0 - beta) * unc_relation};
}

/// A candidate relation between mentions `a` and `b` (indices into the
/// sentence's predicted mention list).
struct RelationCandidate {
  std::size_t a = 0;
  std::size_t b = 0;
  std::vector<double> probs;  // over relation labels, NONE first
  double margin = 1.0;
  double uncertainty = 0.0;   // 1 - margin
};

/// Max over the candidates touching each mention, then the mean over
/// mentions. Mentions without candidates count as 0; no mentions gives 0.
inline double relation_sentence_uncertainty(std::span<const RelationCandidate> cands,
                                            std::size_t num_mentions) {
  if (num_mentions == 0) return 0.0;
  std::vector<double> best(num_mentions, 0.0);
  for (const auto& c : cands) {
    best[c.a] = std::max(best[c.a], c.uncertainty);
    best[c.b] = std::max(best[c.b], c.uncertainty);
  }
  double s = 0;
  for (double v : best) s += v;
  return s / static_cast<double>(num_mentions);
}

/// Probability that at least one token of a candidate's mentions is NIL.
inline double candidate_nil_probability(std::span<const double> token_nil) {
  double keep = 1.0;
  for (double p : token_nil) keep *= 1.0 - p;
  return 1.0 - keep;
}

/// r_adjust = alpha * 1 + (1 - alpha) * r_origin with alpha the mean NIL
/// probability over candidates.
inline double nil_adjusted_ratio(double r_origin, std::span<const double> candidate_nil) {
  if (candidate_nil.empty()) return r_origin;
  double alpha = 0;
  for (double p : candidate_nil) alpha += p;
  alpha /= static_cast<double>(candidate_nil.size());
  return alpha + (1.0 - alpha) * r_origin;
}

/// Same, computing each candidate's NIL probability from its mention tokens'
/// O-tag marginals through a fitted NIL model.
inline double nil_adjusted_ratio(double r_origin, const std::vector<std::vector<double>>& candidate_token_o,
                                 const est::LogisticModel& nil_model) {
  std::vector<double> alphas;
  for (const auto& toks : candidate_token_o) {
    std::vector<double> p;
    for (double po : toks) p.push_back(nil_model.predict(po));
    alphas.push_back(candidate_nil_probability(p));
  }
  return nil_adjusted_ratio(r_origin, alphas);
}

/// The gold mention a predicted one can be corrected to, if any.
inline std::optional<std::size_t> match_gold(const Mention& m, const std::vector<Mention>& gold,
                                             al::MatchRule rule) {
  std::optional<std::size_t> best;
  int best_overlap = 0;
  for (std::size_t g = 0; g < gold.size(); ++g) {
    if (rule == al::MatchRule::Exact) {
      if (gold[g].start == m.start && gold[g].end == m.end) return g;
      continue;
    }
    const int ov = m.overlap(gold[g]);
    if (ov > best_overlap) {
      best_overlap = ov;
      best = g;
    }
  }
  return best;
}

enum class Outcome { Annotated, Corrected, Discarded };

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::Annotated: return "annotated";
    case Outcome::Corrected: return "corrected";
    case Outcome::Discarded: return "discarded";
  }
  return "?";
}

struct RelationAnnotation {
  Outcome outcome = Outcome::Discarded;
  std::optional<std::size_t> gold_a;  // gold mention indices after correction
  std::optional<std::size_t> gold_b;
  Mention arg_a;  // the (possibly corrected) spans the label refers to
  Mention arg_b;
  std::string label = kNone;
  std::vector<std::size_t> corrected;  // gold mentions whose spans/types were fixed
  std::vector<int> outside_tokens;     // tokens of unfixable sides, revealed as O
};

inline std::string gold_relation_label(const Sentence& s, std::size_t ga, std::size_t gb) {
  for (const auto& r : s.relations)
    if ((static_cast<std::size_t>(r.arg1) == ga && static_cast<std::size_t>(r.arg2) == gb) ||
        (static_cast<std::size_t>(r.arg1) == gb && static_cast<std::size_t>(r.arg2) == ga))
      return r.label;
  return kNone;
}

/// Examines both mentions of a queried candidate against gold, fixes what can
/// be fixed and reveals the relation label. Discarded when neither side can be
/// matched to a gold mention.
inline RelationAnnotation annotate_relation(const Mention& a, const Mention& b, const Sentence& gold,
                                            al::MatchRule rule = al::MatchRule::Overlap) {
  RelationAnnotation out;
  out.gold_a = match_gold(a, gold.mentions, rule);
  out.gold_b = match_gold(b, gold.mentions, rule);
  if (!out.gold_a && !out.gold_b) return out;

  auto resolve = [&](const Mention& pred, const std::optional<std::size_t>& g, Mention& arg) {
    if (g) {
      arg = gold.mentions[*g];
      if (!(arg == pred)) out.corrected.push_back(*g);
    } else {
      arg = pred;
      for (int t = pred.start; t <= pred.end; ++t) out.outside_tokens.push_back(t);
    }
  };
  resolve(a, out.gold_a, out.arg_a);
  resolve(b, out.gold_b, out.arg_b);
  if (out.gold_a && out.gold_b && *out.gold_a != *out.gold_b)
    out.label = gold_relation_label(gold, *out.gold_a, *out.gold_b);
  // corrected mentions pointing at the same gold mention count once
  std::sort(out.corrected.begin(), out.corrected.end());
  out.corrected.erase(std::unique(out.corrected.begin(), out.corrected.end()), out.corrected.end());
  out.outcome = out.corrected.empty() && out.outside_tokens.empty() ? Outcome::Annotated : Outcome::Corrected;
  return out;
}

/// Second-stage selection: in each sentence, the ceil(r * n) most uncertain
/// of its n new candidates. Ties resolve to the earlier candidate.
inline std::vector<std::vector<std::size_t>> second_stage_select(
    const std::vector<std::vector<double>>& uncertainty, double r) {
  std::vector<std::vector<std::size_t>> out(uncertainty.size());
  for (std::size_t s = 0; s < uncertainty.size(); ++s) {
    std::vector<std::size_t> order(uncertainty[s].size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
      return uncertainty[s][x] > uncertainty[s][y];
    });
    order.resize(al::ratio_count(r, order.size()));
    std::sort(order.begin(), order.end());
    out[s] = std::move(order);
  }
  return out;
}

}  // namespace alps::ie
