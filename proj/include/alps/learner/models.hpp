#pragma once

// Task models: a BIO tagger and a dependency parser, both trainable with full
// annotation, partial annotation, and cached soft teacher marginals.

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "alps/chain/chain_crf.hpp"
#include "alps/corpus/annotation.hpp"
#include "alps/eval/metrics.hpp"
#include "alps/learner/feature_cache.hpp"
#include "alps/learner/params.hpp"
#include "alps/learner/parser.hpp"
#include "alps/learner/tagger.hpp"
#include "alps/tree/tree_crf.hpp"
#include "alps/util/uncertainty.hpp"

namespace alps::learn {

/// Per-sub-structure view of a model's beliefs about one sentence.
struct Analysis {
  std::vector<double> margin;       // p(1st) - p(2nd)
  std::vector<double> uncertainty;  // acquisition score, larger = more uncertain
  std::vector<int> argmax;          // most probable value per sub-structure
};

class TaggingModel {
 public:
  using Teacher = chain::ChainMarginals;
  struct Gold {
    const Sentence* sentence = nullptr;
    const AnnotationState* annotation = nullptr;
  };
  struct Pseudo {
    const Sentence* sentence = nullptr;
    const Teacher* teacher = nullptr;
  };

  TaggingModel(LabelSet tags, unsigned hash_bits, FeatureCache& cache)
      : core_(std::move(tags), 0), cache_(&cache) {
    params_ = ParameterStore(hash_bits, core_.dense_size());
  }

  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }
  const LabelSet& labels() const { return core_.labels; }
  const TaggerCore& core() const { return core_; }

  chain::ChainScores scores(const Sentence& s) const {
    return core_.scores(params_, cache_->tokens(s));
  }

  std::size_t tokens(const Gold& g) const { return g.sentence->size(); }
  std::size_t tokens(const Pseudo& p) const { return p.sentence->size(); }

  double gold_loss(const Gold& g, GradBuffer& buf) const {
    const auto& feats = cache_->tokens(*g.sentence);
    chain::ChainScores s = core_.scores(params_, feats);
    chain::ChainLoss loss;
    if (g.annotation->status == AnnotationStatus::Full)
      loss = chain::nll_full(s, g.annotation->value);
    else
      loss = chain::nll_partial(s, g.annotation->chain_mask(core_.num_labels()));
    core_.backprop(params_, feats, loss.grad, buf);
    return loss.value;
  }

  double kd_loss(const Pseudo& p, GradBuffer& buf) const {
    const auto& feats = cache_->tokens(*p.sentence);
    chain::ChainLoss loss = chain::kd_loss(*p.teacher, core_.scores(params_, feats));
    core_.backprop(params_, feats, loss.grad, buf);
    return loss.value;
  }

  /// Marginals, optionally under an annotation's constraints.
  chain::ChainMarginals marginals(const Sentence& s, const AnnotationState* ann = nullptr) const {
    if (ann && ann->status != AnnotationStatus::Unlabeled)
      return chain::marginals(scores(s), ann->chain_mask(core_.num_labels()));
    return chain::marginals(scores(s));
  }

  std::vector<std::string> predict(const Sentence& s) const {
    return core_.names(chain::viterbi(scores(s)));
  }

  Analysis analyze(const Sentence& s, Acquisition acq = Acquisition::Margin) const {
    chain::ChainMarginals m = marginals(s);
    return {chain::token_margins(m), chain::token_uncertainty(m, acq), chain::marginal_argmax(m)};
  }

  /// Gold value per sub-structure, comparable with Analysis::argmax.
  std::vector<int> gold_values(const Sentence& s) const { return core_.gold_ids(s); }

  eval::PRF evaluate_prf(std::span<const Sentence* const> sentences) const {
    eval::PRF prf;
    for (const Sentence* s : sentences) prf += eval::tag_prf(tags_of(*s), predict(*s));
    return prf;
  }

  double dev_metric(std::span<const Sentence* const> dev) const { return evaluate_prf(dev).f1(); }

  eval::EvalReport evaluate(std::span<const Sentence* const> sentences) const {
    eval::PRF prf = evaluate_prf(sentences);
    eval::EvalReport r;
    r.precision = prf.precision();
    r.recall = prf.recall();
    r.f1 = prf.f1();
    return r;
  }

 private:
  TaggerCore core_;
  ParameterStore params_;
  FeatureCache* cache_;
};

class ParsingModel {
 public:
  using Teacher = tree::ArcMarginals;
  struct Gold {
    const Sentence* sentence = nullptr;
    const AnnotationState* annotation = nullptr;
  };
  struct Pseudo {
    const Sentence* sentence = nullptr;
    const Teacher* teacher = nullptr;
  };

  ParsingModel(LabelSet deprels, unsigned hash_bits, FeatureCache& cache)
      : core_(std::move(deprels)), cache_(&cache) {
    params_ = ParameterStore(hash_bits, 0);
  }

  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }
  const LabelSet& labels() const { return core_.deprels; }
  const ParserCore& core() const { return core_; }

  tree::ArcScores scores(const Sentence& s) const {
    return core_.scores(params_, s.size(), cache_->arcs(s));
  }

  std::size_t tokens(const Gold& g) const { return g.sentence->size(); }
  std::size_t tokens(const Pseudo& p) const { return p.sentence->size(); }

  double gold_loss(const Gold& g, GradBuffer& buf) const {
    const Sentence& s = *g.sentence;
    const auto& feats = cache_->arcs(s);
    tree::ArcScores a = core_.scores(params_, s.size(), feats);
    tree::TreeLoss loss = g.annotation->status == AnnotationStatus::Full
                              ? tree::tree_nll_full(a, g.annotation->value)
                              : tree::tree_nll_partial(a, g.annotation->head_constraint());
    core_.backprop(params_, s.size(), feats, loss.grad, buf);
    double total = loss.value;
    // labels are revealed together with heads
    for (std::size_t m = 1; m <= s.size(); ++m) {
      if (!g.annotation->is_annotated(m - 1)) continue;
      const int gold_label = core_.deprels.find(s.tokens[m - 1].deprel);
      if (gold_label < 0) continue;
      const std::size_t h = static_cast<std::size_t>(s.tokens[m - 1].head);
      total += core_.label_loss(params_, feats[(m - 1) * (s.size() + 1) + h], gold_label, buf);
    }
    return total;
  }

  double kd_loss(const Pseudo& p, GradBuffer& buf) const {
    const Sentence& s = *p.sentence;
    const auto& feats = cache_->arcs(s);
    tree::TreeLoss loss = tree::tree_kd_loss(*p.teacher, core_.scores(params_, s.size(), feats));
    core_.backprop(params_, s.size(), feats, loss.grad, buf);
    return loss.value;
  }

  tree::ArcMarginals marginals(const Sentence& s, const AnnotationState* ann = nullptr) const {
    if (ann && ann->status != AnnotationStatus::Unlabeled)
      return tree::mt_arc_marginals(scores(s), ann->head_constraint());
    return tree::mt_arc_marginals(scores(s));
  }

  struct Parse {
    std::vector<int> heads;
    std::vector<std::string> labels;
  };

  Parse predict(const Sentence& s) const {
    Parse out;
    out.heads = tree::decode_tree(scores(s));
    const auto& feats = cache_->arcs(s);
    for (std::size_t m = 1; m <= s.size(); ++m) {
      const std::size_t h = static_cast<std::size_t>(out.heads[m - 1]);
      out.labels.push_back(core_.deprels.name(core_.best_label(params_, feats[(m - 1) * (s.size() + 1) + h])));
    }
    return out;
  }

  Analysis analyze(const Sentence& s, Acquisition acq = Acquisition::Margin) const {
    tree::ArcMarginals m = marginals(s);
    return {tree::head_margins(m), tree::head_uncertainty(m, acq), tree::marginal_argmax(m)};
  }

  std::vector<int> gold_values(const Sentence& s) const { return s.heads(); }

  eval::Attachment attachment(std::span<const Sentence* const> sentences) const {
    eval::Attachment a;
    for (const Sentence* s : sentences) {
      Parse p = predict(*s);
      a += eval::attachment(*s, p.heads, p.labels);
    }
    return a;
  }

  double dev_metric(std::span<const Sentence* const> dev) const { return attachment(dev).las(); }

  eval::EvalReport evaluate(std::span<const Sentence* const> sentences) const {
    eval::Attachment a = attachment(sentences);
    eval::EvalReport r;
    r.las = a.las();
    r.uas = a.uas();
    return r;
  }

 private:
  ParserCore core_;
  ParameterStore params_;
  FeatureCache* cache_;
};

/// Cached teacher marginals for the sentences a model should self-train on.
template <typename Model>
struct PseudoLabelSet {
  std::vector<const Sentence*> sentences;
  std::vector<std::unique_ptr<typename Model::Teacher>> teachers;

  std::vector<typename Model::Pseudo> items() const {
    std::vector<typename Model::Pseudo> out;
    out.reserve(sentences.size());
    for (std::size_t i = 0; i < sentences.size(); ++i) out.push_back({sentences[i], teachers[i].get()});
    return out;
  }
  std::size_t size() const { return sentences.size(); }
};

/// Teacher marginals for every sentence that still has un-annotated
/// sub-structures, computed under that sentence's annotation constraints.
/// Fully annotated sentences are skipped.
template <typename Model>
PseudoLabelSet<Model> make_pseudo_labels(
    const Model& model,
    const std::vector<std::pair<const Sentence*, const AnnotationState*>>& targets) {
  PseudoLabelSet<Model> out;
  for (const auto& [s, ann] : targets) {
    if (ann && ann->status == AnnotationStatus::Full) continue;
    out.sentences.push_back(s);
    out.teachers.push_back(std::make_unique<typename Model::Teacher>(model.marginals(*s, ann)));
  }
  return out;
}

}  // namespace alps::learn
