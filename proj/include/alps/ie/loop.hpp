#pragma once

// Active learning for pipelined IE: sentences are ranked by a beta-weighted
// mix of mention and relation uncertainty; PA queries mention tokens and
// relation candidates separately, with a second relation stage over the
// mentions revealed in the first.

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <vector>

#include "alps/estimator/estimator.hpp"
#include "alps/ie/model.hpp"
#include "alps/ie/protocol.hpp"
#include "alps/selector/loop.hpp"

namespace alps::ie {

struct IESetup {
  const Corpus* train = nullptr;
  const Corpus* test = nullptr;
  LabelSet tags;
  LabelSet relations;
  std::function<IEModel(learn::FeatureCache&)> make_model;
};

/// Relation candidates on dev with their confident-correctness labels.
inline std::vector<est::CorrectnessSample> relation_dev_samples(const IEModel& m,
                                                                std::span<const Sentence* const> dev) {
  std::vector<est::CorrectnessSample> out;
  for (const Sentence* s : dev) {
    const auto p = m.predict(*s);
    for (const auto& c : p.candidates) {
      const std::string gold = pair_gold_label(*s, p.mentions[c.a], p.mentions[c.b]);
      const bool correct = m.relation_labels().name(static_cast<int>(top_two(c.probs).best)) == gold;
      out.push_back({c.margin, est::confidently_correct(correct, c.margin)});
    }
  }
  return out;
}

/// NIL samples: for every token inside a predicted mention on dev, its O-tag
/// marginal and whether it is really outside all gold mentions.
inline std::vector<est::CorrectnessSample> nil_dev_samples(const IEModel& m,
                                                           std::span<const Sentence* const> dev) {
  std::vector<est::CorrectnessSample> out;
  const int o = m.labels().id("O");
  for (const Sentence* s : dev) {
    const auto marg = m.marginals(*s);
    for (const auto& men : m.predict_mentions(*s))
      for (int t = men.start; t <= men.end; ++t)
        out.push_back({marg.unary(static_cast<std::size_t>(t), static_cast<std::size_t>(o)),
                       s->tokens[static_cast<std::size_t>(t)].tag == "O"});
  }
  return out;
}

class IESeedRun {
 public:
  IESeedRun(const al::ALConfig& cfg, const IESetup& setup, std::uint64_t seed)
      : cfg_(cfg), setup_(setup), seed_(seed), query_rng_(mix64(seed ^ 0x71e4a3c5ULL)) {
    cfg_.validate();
    Rng split_rng(seed);
    state_ = al::sample_partitions(*setup.train, cfg.effective_seed_tokens(), cfg.effective_dev_tokens(),
                                   cfg.batch_tokens * cfg.cycles, split_rng);
    for (std::size_t i : state_.seed) seed_ann_.emplace(i, full_ie_annotation(sentence(i), setup.tags, setup.relations));
    dev_ = al::pointers(*setup.train, state_.dev);
    test_ = al::pointers(*setup.test);
    model_ = std::make_unique<IEModel>(fit(0));
  }

  const al::PoolState& state() const { return state_; }
  const IEModel& model() const { return *model_; }
  const std::vector<al::CycleRecord>& records() const { return records_; }
  const std::map<std::size_t, IEAnnotation>& annotations() const { return labeled_; }
  bool finished() const {
    return records_.size() >= cfg_.cycles || state_.unlabeled.empty() || state_.budget_remaining == 0;
  }

  std::optional<al::CycleRecord> run_cycle() {
    if (finished()) return std::nullopt;
    const std::size_t cycle = records_.size() + 1;
    const IEModel& m = *model_;

    std::vector<std::size_t> pool(state_.unlabeled.begin(), state_.unlabeled.end());
    std::vector<al::Candidate> cands(pool.size());
    std::vector<std::optional<learn::Analysis>> analyses(pool.size());
    std::vector<std::optional<IEModel::Prediction>> preds(pool.size());
    auto analyze = [&](std::size_t k) {
      if (analyses[k]) return;
      analyses[k] = m.analyze(sentence(pool[k]), cfg_.acquisition);
      preds[k] = m.predict(sentence(pool[k]));
    };
    for (std::size_t k = 0; k < pool.size(); ++k) {
      cands[k].index = pool[k];
      cands[k].tokens = sentence(pool[k]).size();
      if (cfg_.strategy == al::Strategy::Rand) continue;
      analyze(k);
      const double unc_m = mean(analyses[k]->uncertainty);
      const double unc_r = relation_sentence_uncertainty(preds[k]->candidates, preds[k]->mentions.size());
      // a single score per sentence: sentence_query averages this vector
      cands[k].uncertainty = {combine_uncertainty(unc_m, unc_r, cfg_.beta).combined};
    }
    const auto picked = cfg_.strategy == al::Strategy::Rand
                            ? al::random_query(cands, cfg_.batch_tokens, query_rng_)
                            : al::sentence_query(cands, cfg_.batch_tokens);

    al::CycleRecord rec;
    rec.cycle = cycle;
    rec.seed = seed_;
    rec.strategy = cfg_.label();
    rec.task = to_string(Task::IE);
    rec.sentences = picked.size();

    // Q over mention tokens and relation candidates
    std::vector<double> q_margins;
    std::vector<std::vector<double>> q_token_unc, q_rel_unc;
    std::vector<std::vector<double>> cand_token_o;
    std::vector<double> q_rel_margins;
    double wrong = 0;
    const int o = m.labels().id("O");
    for (std::size_t k : picked) {
      analyze(k);
      const Sentence& s = sentence(pool[k]);
      const auto& a = *analyses[k];
      const auto gold = m.gold_values(s);
      for (std::size_t i = 0; i < gold.size(); ++i) wrong += a.argmax[i] != gold[i];
      q_margins.insert(q_margins.end(), a.margin.begin(), a.margin.end());
      q_token_unc.push_back(a.uncertainty);
      const auto marg = m.marginals(s);
      std::vector<double> ru;
      for (const auto& c : preds[k]->candidates) {
        ru.push_back(c.uncertainty);
        q_rel_margins.push_back(c.margin);
        std::vector<double> po;
        for (const Mention* men : {&preds[k]->mentions[c.a], &preds[k]->mentions[c.b]})
          for (int t = men->start; t <= men->end; ++t)
            po.push_back(marg.unary(static_cast<std::size_t>(t), static_cast<std::size_t>(o)));
        cand_token_o.push_back(std::move(po));
      }
      q_rel_unc.push_back(std::move(ru));
    }
    rec.actual_error = q_margins.empty() ? 0.0 : wrong / static_cast<double>(q_margins.size());

    const est::LogisticModel tag_lm = est::fit_logistic(est::collect_dev_samples(m, dev_));
    double mean_p = 0;
    for (double x : q_margins) mean_p += tag_lm.predict(x);
    rec.estimated_error = q_margins.empty() ? 0.0 : 1.0 - mean_p / static_cast<double>(q_margins.size());

    const bool pa = cfg_.strategy == al::Strategy::PA;
    double r_mention = 1.0, r_relation = 1.0;
    if (pa) {
      if (cfg_.ratio_mode == al::RatioMode::Adaptive) {
        r_mention = est::adaptive_ratio(tag_lm, q_margins, cfg_.bounds);
        const auto rel_lm = est::fit_logistic(relation_dev_samples(m, dev_));
        r_relation = q_rel_margins.empty() ? r_mention : est::adaptive_ratio(rel_lm, q_rel_margins, cfg_.bounds);
      } else {
        r_mention = r_relation = cfg_.fixed_ratio;
      }
      const auto nil_lm = est::fit_logistic(nil_dev_samples(m, dev_));
      r_relation = nil_adjusted_ratio(r_relation, cand_token_o, nil_lm);
    }
    rec.ratio = r_mention;
    rec.relation_ratio = r_relation;

    const auto token_queries = pa ? al::partial_select(q_token_unc, r_mention) : std::vector<std::set<std::size_t>>{};
    const auto rel_queries = pa ? al::partial_select(q_rel_unc, r_relation) : std::vector<std::set<std::size_t>>{};
    double relation_cost = 0;
    for (std::size_t j = 0; j < picked.size(); ++j) {
      const std::size_t k = picked[j];
      const std::size_t idx = pool[k];
      const Sentence& s = sentence(idx);
      IEAnnotation ann;
      if (!pa) {
        ann = full_ie_annotation(s, setup_.tags, setup_.relations);
        relation_cost += cfg_.fa_relation_cost_double ? 2.0 * static_cast<double>(s.mentions.size())
                                                      : static_cast<double>(ann.relations.size());
        rec.cycle_labeling_cost += count_labeling_cost(s, ann.mentions, Task::IE, CostMode::FA, cfg_.cost);
        rec.cycle_annotated += static_cast<double>(ann.mentions.num_annotated() + ann.relations.size());
      } else {
        ann.mentions = simulate_annotation(s, token_queries[j], Task::IE, setup_.tags);
        std::set<std::size_t> fresh;  // gold mentions revealed or corrected this cycle
        for (std::size_t g = 0; g < s.mentions.size(); ++g)
          if (ann.mentions.is_annotated(static_cast<std::size_t>(s.mentions[g].start))) fresh.insert(g);
        std::size_t queries = 0;
        for (std::size_t ci : rel_queries[j]) {
          const auto& c = preds[k]->candidates[ci];
          queries += apply_relation_query(s, preds[k]->mentions[c.a], preds[k]->mentions[c.b], ann, fresh, rec);
        }
        if (cfg_.second_stage) queries += second_stage(s, ann, fresh, r_relation, rec);
        ann.mentions.refresh_status();
        relation_cost += static_cast<double>(queries);
        rec.cycle_labeling_cost += count_labeling_cost(s, ann.mentions, Task::IE, CostMode::PA, cfg_.cost);
        rec.cycle_annotated += static_cast<double>(ann.mentions.num_annotated() + queries);
      }
      rec.cycle_reading_cost += static_cast<double>(s.size());
      rec.selected_ids.push_back(s.id);
      state_.unlabeled.erase(idx);
      state_.labeled.emplace(idx, ann.mentions);
      labeled_.emplace(idx, std::move(ann));
    }
    rec.cycle_labeling_cost += relation_cost;
    state_.budget_remaining -= std::min(state_.budget_remaining, cfg_.batch_tokens);

    model_ = std::make_unique<IEModel>(fit(cycle));
    rec.test = model_->evaluate(test_);
    rec.test_primary = rec.test.primary(Task::IE);
    rec.dev_metric = model_->dev_metric(dev_);
    const al::CycleRecord* prev = records_.empty() ? nullptr : &records_.back();
    rec.reading_cost = (prev ? prev->reading_cost : 0.0) + rec.cycle_reading_cost;
    rec.labeling_cost = (prev ? prev->labeling_cost : 0.0) + rec.cycle_labeling_cost;
    rec.annotated = (prev ? prev->annotated : 0.0) + rec.cycle_annotated;
    rec.pool_remaining = state_.unlabeled.size();
    rec.budget_remaining = state_.budget_remaining;
    records_.push_back(rec);
    return rec;
  }

  nlohmann::json snapshot_meta() const {
    return nlohmann::json{{"task", "ie"},
                          {"labels", model_->labels().names()},
                          {"relations", model_->relation_labels().names()},
                          {"seed", seed_},
                          {"cycles", records_.size()}};
  }

 private:
  const Sentence& sentence(std::size_t i) const { return setup_.train->sentences[i]; }

  static double mean(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  }

  /// Annotates one relation query; returns 1 when it costs a label, 0 when
  /// discarded or already labeled.
  std::size_t apply_relation_query(const Sentence& s, const Mention& a, const Mention& b, IEAnnotation& ann,
                                   std::set<std::size_t>& fresh, al::CycleRecord& rec) {
    const RelationAnnotation res = annotate_relation(a, b, s, cfg_.match_rule);
    if (res.outcome == Outcome::Discarded) {
      ++rec.discarded;
      return 0;
    }
    const int o = setup_.tags.id("O");
    for (std::size_t g : res.corrected) {
      const Mention& gm = s.mentions[g];
      for (int t = gm.start; t <= gm.end; ++t)
        ann.mentions.reveal(static_cast<std::size_t>(t), setup_.tags.id(s.tokens[static_cast<std::size_t>(t)].tag));
      fresh.insert(g);
    }
    for (int t : res.outside_tokens) {
      // a token of an unfixable span may still belong to some other gold mention
      const auto& tag = s.tokens[static_cast<std::size_t>(t)].tag;
      ann.mentions.reveal(static_cast<std::size_t>(t), tag == "O" ? o : setup_.tags.id(tag));
    }
    const MentionPair key = ordered_pair(res.arg_a, res.arg_b);
    if (ann.relations.count(key)) return 0;
    ann.relations[key] = setup_.relations.id(res.label);
    return 1;
  }

  /// Re-infers mentions under the revealed tags and queries the most
  /// uncertain unlabeled pairs touching a fresh mention.
  std::size_t second_stage(const Sentence& s, IEAnnotation& ann, std::set<std::size_t>& fresh, double r,
                           al::CycleRecord& rec) {
    if (fresh.empty()) return 0;
    ann.mentions.refresh_status();
    const IEModel& m = *model_;
    const auto mentions = m.predict_mentions(s, &ann.mentions);
    std::vector<Mention> fresh_spans;
    for (std::size_t g : fresh) fresh_spans.push_back(s.mentions[g]);
    auto is_fresh = [&](const Mention& x) {
      return std::find(fresh_spans.begin(), fresh_spans.end(), x) != fresh_spans.end();
    };
    std::vector<RelationCandidate> extra;
    for (const auto& c : m.candidates(s, mentions, cfg_.acquisition)) {
      if (!is_fresh(mentions[c.a]) && !is_fresh(mentions[c.b])) continue;
      if (ann.relations.count(ordered_pair(mentions[c.a], mentions[c.b]))) continue;
      extra.push_back(c);
    }
    std::vector<double> unc;
    for (const auto& c : extra) unc.push_back(c.uncertainty);
    std::size_t queries = 0;
    std::set<std::size_t> unused;
    const auto chosen = second_stage_select({unc}, r);
    for (std::size_t i : chosen[0])
      queries += apply_relation_query(s, mentions[extra[i].a], mentions[extra[i].b], ann, unused, rec);
    return queries;
  }

  IEModel fit(std::size_t cycle) {
    learn::TrainConfig tc = cfg_.train;
    tc.seed = mix64(seed_ * 1000003ULL + cycle);
    std::vector<IEModel::Gold> gold;
    for (const auto& [i, a] : seed_ann_) gold.push_back({&sentence(i), &a});
    for (const auto& [i, a] : labeled_)
      if (!a.empty()) gold.push_back({&sentence(i), &a});

    IEModel first = setup_.make_model(cache_);
    learn::train(first, std::span<const IEModel::Gold>(gold), {}, dev_, tc);
    if (!cfg_.self_training) return first;

    std::vector<std::pair<const Sentence*, const IEAnnotation*>> targets;
    for (const auto& [i, a] : labeled_)
      if (!a.full) targets.emplace_back(&sentence(i), &a);
    std::vector<std::size_t> pool(state_.unlabeled.begin(), state_.unlabeled.end());
    if (cfg_.pseudo_pool_limit && pool.size() > cfg_.pseudo_pool_limit) {
      Rng r(mix64(tc.seed ^ 0x9a11));
      shuffle_in_place(pool, r);
      pool.resize(cfg_.pseudo_pool_limit);
      std::sort(pool.begin(), pool.end());
    }
    for (std::size_t i : pool) targets.emplace_back(&sentence(i), nullptr);
    const auto pseudo = make_ie_pseudo_labels(first, targets);
    const auto items = pseudo.items();
    IEModel second = setup_.make_model(cache_);
    tc.seed = mix64(tc.seed + 0x5151);
    learn::train(second, std::span<const IEModel::Gold>(gold), std::span<const IEModel::Pseudo>(items), dev_, tc);
    return second;
  }

  al::ALConfig cfg_;
  const IESetup& setup_;
  std::uint64_t seed_;
  Rng query_rng_;
  al::PoolState state_;
  std::map<std::size_t, IEAnnotation> seed_ann_;
  std::map<std::size_t, IEAnnotation> labeled_;
  std::vector<const Sentence*> dev_;
  std::vector<const Sentence*> test_;
  learn::FeatureCache cache_;
  std::unique_ptr<IEModel> model_;
  std::vector<al::CycleRecord> records_;
};

inline al::ExperimentResult run_ie_experiment(const al::ALConfig& cfg, const IESetup& setup,
                                              const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                                              std::optional<std::uint64_t> only_seed = std::nullopt,
                                              const std::function<void(const al::CycleRecord&)>& on_cycle = {},
                                              bool record_timing = false) {
  return al::run_seeds<IESeedRun>(cfg, setup, out_dir, only_seed, on_cycle, record_timing);
}

}  // namespace alps::ie
