#pragma once

// Pipelined IE model: a BIO mention tagger followed by a local softmax over
// relation labels for every pair of predicted mentions. Both parts share one
// parameter store.

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "alps/chain/chain_crf.hpp"
#include "alps/corpus/annotation.hpp"
#include "alps/eval/metrics.hpp"
#include "alps/ie/protocol.hpp"
#include "alps/learner/feature_cache.hpp"
#include "alps/learner/features.hpp"
#include "alps/learner/models.hpp"
#include "alps/learner/params.hpp"
#include "alps/learner/tagger.hpp"
#include "alps/util/logmath.hpp"
#include "alps/util/uncertainty.hpp"

namespace alps::ie {

using MentionPair = std::pair<Mention, Mention>;

inline MentionPair ordered_pair(const Mention& a, const Mention& b) {
  return a.start < b.start || (a.start == b.start && a.end <= b.end) ? MentionPair{a, b} : MentionPair{b, a};
}

/// Revealed mention tags plus labeled mention pairs of one sentence.
struct IEAnnotation {
  AnnotationState mentions;
  std::map<MentionPair, int> relations;  // relation label ids
  bool full = false;                     // every tag and every gold pair labeled

  static IEAnnotation unlabeled(std::size_t n) { return {AnnotationState::unlabeled(n), {}, false}; }
  bool empty() const { return mentions.status == AnnotationStatus::Unlabeled && relations.empty(); }
};

/// Relation label of an ordered pair of spans under gold: the gold label when
/// both spans are gold mentions, NONE otherwise.
inline std::string pair_gold_label(const Sentence& s, const Mention& a, const Mention& b) {
  auto ia = std::find(s.mentions.begin(), s.mentions.end(), a);
  auto ib = std::find(s.mentions.begin(), s.mentions.end(), b);
  if (ia == s.mentions.end() || ib == s.mentions.end() || ia == ib) return kNone;
  return gold_relation_label(s, static_cast<std::size_t>(ia - s.mentions.begin()),
                             static_cast<std::size_t>(ib - s.mentions.begin()));
}

/// Full annotation of a sentence: all tags and every pair of gold mentions.
inline IEAnnotation full_ie_annotation(const Sentence& s, const LabelSet& tags, const LabelSet& rels) {
  IEAnnotation a;
  a.mentions = full_annotation(s, Task::IE, tags);
  for (std::size_t i = 0; i < s.mentions.size(); ++i)
    for (std::size_t j = i + 1; j < s.mentions.size(); ++j)
      a.relations[ordered_pair(s.mentions[i], s.mentions[j])] = rels.id(gold_relation_label(s, i, j));
  a.full = true;
  return a;
}

class IEModel {
 public:
  struct Gold {
    const Sentence* sentence = nullptr;
    const IEAnnotation* annotation = nullptr;
  };
  struct SoftRelation {
    Mention a, b;
    std::vector<double> probs;
  };
  struct Teacher {
    chain::ChainMarginals mentions;
    std::vector<SoftRelation> relations;
  };
  struct Pseudo {
    const Sentence* sentence = nullptr;
    const Teacher* teacher = nullptr;
  };
  struct Prediction {
    std::vector<Mention> mentions;
    std::vector<RelationCandidate> candidates;
  };

  IEModel(LabelSet tags, LabelSet relations, unsigned hash_bits, learn::FeatureCache& cache)
      : tagger_(std::move(tags), 0), rels_(std::move(relations)), cache_(&cache) {
    if (rels_.size() == 0 || rels_.name(0) != kNone) throw ConfigError("relation labels must start with NONE");
    params_ = learn::ParameterStore(hash_bits, tagger_.dense_size());
  }

  learn::ParameterStore& params() { return params_; }
  const learn::ParameterStore& params() const { return params_; }
  const LabelSet& labels() const { return tagger_.labels; }
  const LabelSet& relation_labels() const { return rels_; }
  const learn::TaggerCore& tagger() const { return tagger_; }

  std::size_t tokens(const Gold& g) const { return g.sentence->size(); }
  std::size_t tokens(const Pseudo& p) const { return p.sentence->size(); }

  chain::ChainScores scores(const Sentence& s) const { return tagger_.scores(params_, cache_->tokens(s)); }

  std::vector<double> relation_probs(const Sentence& s, const Mention& a, const Mention& b) const {
    return probs_of(learn::pair_features(s, a, b));
  }

  double gold_loss(const Gold& g, learn::GradBuffer& buf) const {
    const Sentence& s = *g.sentence;
    const IEAnnotation& ann = *g.annotation;
    double total = 0;
    if (ann.mentions.status != AnnotationStatus::Unlabeled) {
      const auto& feats = cache_->tokens(s);
      chain::ChainScores sc = tagger_.scores(params_, feats);
      chain::ChainLoss loss = ann.mentions.status == AnnotationStatus::Full
                                  ? chain::nll_full(sc, ann.mentions.value)
                                  : chain::nll_partial(sc, ann.mentions.chain_mask(tagger_.num_labels()));
      tagger_.backprop(params_, feats, loss.grad, buf);
      total += loss.value;
    }
    std::vector<double> target(rels_.size());
    for (const auto& [pair, label] : ann.relations) {
      std::fill(target.begin(), target.end(), 0.0);
      target[static_cast<std::size_t>(label)] = 1.0;
      total += relation_ce(learn::pair_features(s, pair.first, pair.second), target, buf);
    }
    return total;
  }

  double kd_loss(const Pseudo& p, learn::GradBuffer& buf) const {
    const Sentence& s = *p.sentence;
    const auto& feats = cache_->tokens(s);
    chain::ChainLoss loss = chain::kd_loss(p.teacher->mentions, tagger_.scores(params_, feats));
    tagger_.backprop(params_, feats, loss.grad, buf);
    double total = loss.value;
    for (const auto& r : p.teacher->relations)
      total += relation_ce(learn::pair_features(s, r.a, r.b), r.probs, buf);
    return total;
  }

  /// Tag marginals, optionally constrained by revealed tags.
  chain::ChainMarginals marginals(const Sentence& s, const AnnotationState* ann = nullptr) const {
    if (ann && ann->status != AnnotationStatus::Unlabeled)
      return chain::marginals(scores(s), ann->chain_mask(tagger_.num_labels()));
    return chain::marginals(scores(s));
  }

  learn::Analysis analyze(const Sentence& s, Acquisition acq = Acquisition::Margin) const {
    chain::ChainMarginals m = marginals(s);
    return {chain::token_margins(m), chain::token_uncertainty(m, acq), chain::marginal_argmax(m)};
  }

  std::vector<int> gold_values(const Sentence& s) const { return tagger_.gold_ids(s); }

  std::vector<Mention> predict_mentions(const Sentence& s, const AnnotationState* ann = nullptr) const {
    std::vector<int> y = ann && ann->status != AnnotationStatus::Unlabeled
                             ? chain::viterbi(scores(s), ann->chain_mask(tagger_.num_labels()))
                             : chain::viterbi(scores(s));
    return spans_from_tags(tagger_.names(y));
  }

  /// Every pair of mentions (in sentence order) with its label distribution.
  std::vector<RelationCandidate> candidates(const Sentence& s, const std::vector<Mention>& mentions,
                                            Acquisition acq = Acquisition::Margin) const {
    std::vector<RelationCandidate> out;
    for (std::size_t i = 0; i < mentions.size(); ++i)
      for (std::size_t j = i + 1; j < mentions.size(); ++j) {
        RelationCandidate c;
        c.a = i;
        c.b = j;
        c.probs = relation_probs(s, mentions[i], mentions[j]);
        c.margin = margin_of(c.probs);
        c.uncertainty = acq == Acquisition::Margin ? 1.0 - c.margin : uncertainty_of(c.probs, acq);
        out.push_back(std::move(c));
      }
    return out;
  }

  Prediction predict(const Sentence& s, const AnnotationState* ann = nullptr) const {
    Prediction p;
    p.mentions = predict_mentions(s, ann);
    p.candidates = candidates(s, p.mentions);
    return p;
  }

  std::vector<eval::RelationKey> predicted_relations(const Sentence& s, const Prediction& p) const {
    std::vector<eval::RelationKey> out;
    for (const auto& c : p.candidates) {
      const auto best = static_cast<int>(top_two(c.probs).best);
      if (best != 0) out.emplace_back(p.mentions[c.a], p.mentions[c.b], rels_.name(best));
    }
    (void)s;
    return out;
  }

  eval::EvalReport evaluate(std::span<const Sentence* const> sentences) const {
    eval::PRF mentions, relations;
    for (const Sentence* s : sentences) {
      const Prediction p = predict(*s);
      mentions += eval::span_prf(s->mentions, p.mentions);
      relations += eval::relation_prf(gold_relations_ordered(*s), predicted_relations(*s, p));
    }
    eval::EvalReport r;
    r.precision = relations.precision();
    r.recall = relations.recall();
    r.mention_f1 = mentions.f1();
    r.relation_f1 = relations.f1();
    r.f1 = r.relation_f1;
    return r;
  }

  double dev_metric(std::span<const Sentence* const> dev) const {
    const eval::EvalReport r = evaluate(dev);
    return 0.5 * (r.mention_f1 + r.relation_f1);
  }

  /// Gold relations keyed with arguments in sentence order, matching the
  /// candidate orientation.
  static std::vector<eval::RelationKey> gold_relations_ordered(const Sentence& s) {
    std::vector<eval::RelationKey> out;
    for (const auto& r : s.relations) {
      auto [a, b] = ordered_pair(s.mentions[r.arg1], s.mentions[r.arg2]);
      out.emplace_back(a, b, r.label);
    }
    return out;
  }

 private:
  std::vector<double> probs_of(const learn::FeatureVector& f) const {
    const std::size_t K = rels_.size();
    std::vector<double> z(K, 0.0);
    for (std::size_t k = 0; k < K; ++k)
      for (const auto& x : f) z[k] += x.value * params_.hashed[params_.slot(x.id ^ rel_salt_, k)];
    const double lse = log_sum_exp(z);
    for (double& v : z) v = std::exp(v - lse);
    return z;
  }

  /// Cross-entropy against a target distribution; accumulates its gradient.
  double relation_ce(const learn::FeatureVector& f, std::span<const double> target,
                     learn::GradBuffer& buf) const {
    const std::vector<double> p = probs_of(f);
    double loss = 0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (target[k] > 0) loss -= target[k] * std::log(std::max(p[k], 1e-300));
      const double g = p[k] - target[k];
      if (g == 0.0) continue;
      for (const auto& x : f) buf.add_hashed(params_.slot(x.id ^ rel_salt_, k), g * x.value);
    }
    return loss;
  }

  learn::TaggerCore tagger_;
  LabelSet rels_;
  learn::ParameterStore params_;
  learn::FeatureCache* cache_;
  std::uint64_t rel_salt_ = 0x4e1;
};

/// NONE followed by the corpus relation labels in sorted order.
inline LabelSet relation_labels(const Corpus& c) {
  std::vector<std::string> names;
  for (const auto& s : c.sentences)
    for (const auto& r : s.relations) names.push_back(r.label);
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  LabelSet ls;
  ls.add(kNone);
  for (const auto& n : names) ls.add(n);
  return ls;
}

/// Soft targets for everything not yet annotated: tag marginals under the
/// revealed tags, plus label distributions for pairs of predicted mentions.
/// Labeled pairs keep their one-hot gold label.
struct IEPseudoSet {
  std::vector<const Sentence*> sentences;
  std::vector<std::unique_ptr<IEModel::Teacher>> teachers;

  std::vector<IEModel::Pseudo> items() const {
    std::vector<IEModel::Pseudo> out;
    for (std::size_t i = 0; i < sentences.size(); ++i) out.push_back({sentences[i], teachers[i].get()});
    return out;
  }
};

inline IEPseudoSet make_ie_pseudo_labels(
    const IEModel& model, const std::vector<std::pair<const Sentence*, const IEAnnotation*>>& targets) {
  IEPseudoSet out;
  for (const auto& [s, ann] : targets) {
    if (ann && ann->full) continue;
    auto t = std::make_unique<IEModel::Teacher>();
    const AnnotationState* tags = ann ? &ann->mentions : nullptr;
    t->mentions = model.marginals(*s, tags);
    const auto mentions = model.predict_mentions(*s, tags);
    for (std::size_t i = 0; i < mentions.size(); ++i)
      for (std::size_t j = i + 1; j < mentions.size(); ++j) {
        const MentionPair key = ordered_pair(mentions[i], mentions[j]);
        IEModel::SoftRelation r{key.first, key.second, {}};
        if (ann && ann->relations.count(key)) {
          r.probs.assign(model.relation_labels().size(), 0.0);
          r.probs[static_cast<std::size_t>(ann->relations.at(key))] = 1.0;
        } else {
          r.probs = model.relation_probs(*s, key.first, key.second);
        }
        t->relations.push_back(std::move(r));
      }
    if (ann)
      for (const auto& [key, label] : ann->relations) {
        bool covered = false;
        for (const auto& r : t->relations) covered |= r.a == key.first && r.b == key.second;
        if (covered) continue;
        IEModel::SoftRelation r{key.first, key.second, std::vector<double>(model.relation_labels().size(), 0.0)};
        r.probs[static_cast<std::size_t>(label)] = 1.0;
        t->relations.push_back(std::move(r));
      }
    out.sentences.push_back(s);
    out.teachers.push_back(std::move(t));
  }
  return out;
}

}  // namespace alps::ie
