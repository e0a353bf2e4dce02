#pragma once

// The active learning loop for single-task models (tagging, parsing).

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "alps/corpus/annotation.hpp"
#include "alps/estimator/estimator.hpp"
#include "alps/learner/models.hpp"
#include "alps/learner/snapshot.hpp"
#include "alps/learner/trainer.hpp"
#include "alps/selector/config.hpp"
#include "alps/selector/query.hpp"
#include "alps/selector/records.hpp"
#include "alps/util/hash.hpp"
#include "alps/util/random.hpp"

namespace alps::al {

/// Corpus indices of each partition. `labeled` holds sentences annotated
/// during AL; seed and dev are fully annotated up front.
struct PoolState {
  std::vector<std::size_t> seed;
  std::vector<std::size_t> dev;
  std::map<std::size_t, AnnotationState> labeled;
  std::set<std::size_t> unlabeled;
  std::size_t budget_remaining = 0;

  bool disjoint() const {
    std::set<std::size_t> seen;
    auto claim = [&](std::size_t i) { return seen.insert(i).second; };
    for (auto i : seed)
      if (!claim(i)) return false;
    for (auto i : dev)
      if (!claim(i)) return false;
    for (const auto& [i, a] : labeled)
      if (!claim(i)) return false;
    for (auto i : unlabeled)
      if (!claim(i)) return false;
    return true;
  }
};

/// Shuffles the corpus with `rng` and carves off seed and dev sets of at
/// least the requested token counts; everything else is the pool.
inline PoolState sample_partitions(const Corpus& corpus, std::size_t seed_tokens, std::size_t dev_tokens,
                                   std::size_t budget, Rng& rng) {
  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  shuffle_in_place(order, rng);
  PoolState st;
  std::size_t k = 0, tokens = 0;
  while (k < order.size() && tokens < seed_tokens) {
    st.seed.push_back(order[k]);
    tokens += corpus.sentences[order[k++]].size();
  }
  tokens = 0;
  while (k < order.size() && tokens < dev_tokens) {
    st.dev.push_back(order[k]);
    tokens += corpus.sentences[order[k++]].size();
  }
  for (; k < order.size(); ++k) st.unlabeled.insert(order[k]);
  if (st.unlabeled.empty()) throw ConfigError("corpus too small for seed + dev + one cycle");
  std::sort(st.seed.begin(), st.seed.end());
  std::sort(st.dev.begin(), st.dev.end());
  st.budget_remaining = budget;
  return st;
}

/// What the loop needs from the task: data and a way to make a fresh model.
template <typename Model>
struct TaskSetup {
  Task task = Task::Tagging;
  const Corpus* train = nullptr;  // seed, dev and pool are drawn from here
  const Corpus* test = nullptr;
  LabelSet tags;  // tagging label ids used in annotation states
  std::function<Model(learn::FeatureCache&)> make_model;
};

inline std::vector<const Sentence*> pointers(const Corpus& c, const std::vector<std::size_t>& idx) {
  std::vector<const Sentence*> out;
  for (std::size_t i : idx) out.push_back(&c.sentences[i]);
  return out;
}

inline std::vector<const Sentence*> pointers(const Corpus& c) {
  std::vector<const Sentence*> out;
  for (const auto& s : c.sentences) out.push_back(&s);
  return out;
}

/// State of one seed's run, advanced one cycle at a time.
template <typename Model>
class SeedRun {
 public:
  SeedRun(const ALConfig& cfg, const TaskSetup<Model>& setup, std::uint64_t seed)
      : cfg_(cfg), setup_(setup), seed_(seed), query_rng_(mix64(seed ^ 0x71e4a3c5ULL)) {
    cfg_.validate();
    Rng split_rng(seed);
    state_ = sample_partitions(*setup.train, cfg.effective_seed_tokens(), cfg.effective_dev_tokens(),
                               cfg.batch_tokens * cfg.cycles, split_rng);
    for (std::size_t i : state_.seed)
      seed_ann_.emplace(i, full_annotation(sentence(i), setup.task, setup.tags));
    dev_ = pointers(*setup.train, state_.dev);
    test_ = pointers(*setup.test);
    model_ = std::make_unique<Model>(fit(0));
  }

  const PoolState& state() const { return state_; }
  const Model& model() const { return *model_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<CycleRecord>& records() const { return records_; }
  bool finished() const {
    return records_.size() >= cfg_.cycles || state_.unlabeled.empty() || state_.budget_remaining == 0;
  }

  /// One AL cycle; nullopt when the pool or budget is already exhausted.
  std::optional<CycleRecord> run_cycle() {
    if (finished()) return std::nullopt;
    const std::size_t cycle = records_.size() + 1;
    const Model& m = *model_;

    // query
    std::vector<std::size_t> pool(state_.unlabeled.begin(), state_.unlabeled.end());
    std::vector<Candidate> cands(pool.size());
    std::vector<std::optional<learn::Analysis>> analyses(pool.size());
    for (std::size_t k = 0; k < pool.size(); ++k) {
      cands[k].index = pool[k];
      cands[k].tokens = sentence(pool[k]).size();
      if (cfg_.strategy != Strategy::Rand) {
        analyses[k] = m.analyze(sentence(pool[k]), cfg_.acquisition);
        cands[k].uncertainty = analyses[k]->uncertainty;
      }
    }
    const std::vector<std::size_t> picked = cfg_.strategy == Strategy::Rand
                                                ? random_query(cands, cfg_.batch_tokens, query_rng_)
                                                : sentence_query(cands, cfg_.batch_tokens);

    // Q: every sub-structure of the selected sentences
    std::vector<double> q_margins;
    std::vector<std::vector<double>> q_uncertainty;
    double wrong = 0;
    for (std::size_t k : picked) {
      if (!analyses[k]) analyses[k] = m.analyze(sentence(pool[k]), cfg_.acquisition);
      const auto& a = *analyses[k];
      const auto gold = m.gold_values(sentence(pool[k]));
      for (std::size_t i = 0; i < gold.size(); ++i) wrong += a.argmax[i] != gold[i];
      q_margins.insert(q_margins.end(), a.margin.begin(), a.margin.end());
      q_uncertainty.push_back(a.uncertainty);
    }

    CycleRecord rec;
    rec.cycle = cycle;
    rec.seed = seed_;
    rec.strategy = cfg_.label();
    rec.task = to_string(setup_.task);
    rec.sentences = picked.size();
    rec.actual_error = q_margins.empty() ? 0.0 : wrong / static_cast<double>(q_margins.size());

    const auto samples = est::collect_dev_samples(m, dev_);
    const est::LogisticModel lm = est::fit_logistic(samples);
    rec.estimated_error = 1.0 - mean_predicted(lm, q_margins);
    const double adaptive = est::adaptive_ratio(lm, q_margins, cfg_.bounds);
    rec.ratio = 1.0;
    if (cfg_.strategy == Strategy::PA)
      rec.ratio = cfg_.ratio_mode == RatioMode::Adaptive ? adaptive : cfg_.fixed_ratio;

    // annotate
    const auto queries = cfg_.strategy == Strategy::PA ? partial_select(q_uncertainty, rec.ratio)
                                                       : std::vector<std::set<std::size_t>>{};
    const CostMode mode = cfg_.strategy == Strategy::PA ? CostMode::PA : CostMode::FA;
    for (std::size_t j = 0; j < picked.size(); ++j) {
      const std::size_t idx = pool[picked[j]];
      const Sentence& s = sentence(idx);
      AnnotationState ann = cfg_.strategy == Strategy::PA
                                ? simulate_annotation(s, queries[j], setup_.task, setup_.tags)
                                : full_annotation(s, setup_.task, setup_.tags);
      rec.cycle_reading_cost += static_cast<double>(s.size());
      rec.cycle_labeling_cost += count_labeling_cost(s, ann, setup_.task, mode, cfg_.cost);
      rec.cycle_annotated += static_cast<double>(ann.num_annotated());
      rec.selected_ids.push_back(s.id);
      state_.unlabeled.erase(idx);
      state_.labeled.emplace(idx, std::move(ann));
    }
    state_.budget_remaining -= std::min(state_.budget_remaining, cfg_.batch_tokens);

    // retrain from scratch
    model_ = std::make_unique<Model>(fit(cycle));
    const eval::EvalReport report = model_->evaluate(test_);
    rec.test = report;
    rec.test_primary = report.primary(setup_.task);
    rec.dev_metric = model_->dev_metric(dev_);

    const CycleRecord* prev = records_.empty() ? nullptr : &records_.back();
    rec.reading_cost = (prev ? prev->reading_cost : 0.0) + rec.cycle_reading_cost;
    rec.labeling_cost = (prev ? prev->labeling_cost : 0.0) + rec.cycle_labeling_cost;
    rec.annotated = (prev ? prev->annotated : 0.0) + rec.cycle_annotated;
    rec.pool_remaining = state_.unlabeled.size();
    rec.budget_remaining = state_.budget_remaining;
    records_.push_back(rec);
    return rec;
  }

  /// Model metadata for snapshots.
  nlohmann::json snapshot_meta() const {
    return nlohmann::json{{"task", to_string(setup_.task)},
                          {"labels", model_->labels().names()},
                          {"seed", seed_},
                          {"cycles", records_.size()}};
  }

 private:
  const Sentence& sentence(std::size_t i) const { return setup_.train->sentences[i]; }

  static double mean_predicted(const est::LogisticModel& lm, const std::vector<double>& margins) {
    if (margins.empty()) return 1.0;
    double s = 0;
    for (double x : margins) s += lm.predict(x);
    return s / static_cast<double>(margins.size());
  }

  Model fit(std::size_t cycle) {
    learn::TrainConfig tc = cfg_.train;
    tc.seed = mix64(seed_ * 1000003ULL + cycle);

    std::vector<typename Model::Gold> gold;
    for (const auto& [i, a] : seed_ann_) gold.push_back({&sentence(i), &a});
    for (const auto& [i, a] : state_.labeled)
      if (a.status != AnnotationStatus::Unlabeled) gold.push_back({&sentence(i), &a});

    Model first = setup_.make_model(cache_);
    learn::train(first, std::span<const typename Model::Gold>(gold), {}, dev_, tc);
    if (!cfg_.self_training) return first;

    // soft labels for whatever is not yet annotated
    std::vector<std::pair<const Sentence*, const AnnotationState*>> targets;
    for (const auto& [i, a] : state_.labeled)
      if (a.status != AnnotationStatus::Full) targets.emplace_back(&sentence(i), &a);
    std::vector<std::size_t> pool(state_.unlabeled.begin(), state_.unlabeled.end());
    if (cfg_.pseudo_pool_limit && pool.size() > cfg_.pseudo_pool_limit) {
      Rng r(mix64(tc.seed ^ 0x9a11));
      shuffle_in_place(pool, r);
      pool.resize(cfg_.pseudo_pool_limit);
      std::sort(pool.begin(), pool.end());
    }
    for (std::size_t i : pool) targets.emplace_back(&sentence(i), nullptr);
    const auto pseudo = learn::make_pseudo_labels(first, targets);
    const auto items = pseudo.items();

    Model second = setup_.make_model(cache_);
    tc.seed = mix64(tc.seed + 0x5151);
    learn::train(second, std::span<const typename Model::Gold>(gold),
                 std::span<const typename Model::Pseudo>(items), dev_, tc);
    return second;
  }

  ALConfig cfg_;
  const TaskSetup<Model>& setup_;
  std::uint64_t seed_;
  Rng query_rng_;
  PoolState state_;
  std::map<std::size_t, AnnotationState> seed_ann_;
  std::vector<const Sentence*> dev_;
  std::vector<const Sentence*> test_;
  learn::FeatureCache cache_;
  std::unique_ptr<Model> model_;
  std::vector<CycleRecord> records_;
};

// ---- experiment driver -----------------------------------------------------

struct ExperimentResult {
  std::vector<std::vector<CycleRecord>> per_seed;  // in config seed order
  std::vector<std::uint64_t> seeds;
  std::vector<std::uint64_t> resumed;  // seeds loaded from disk
  std::vector<AggregateRow> aggregate;
};

inline nlohmann::json seed_fingerprint(const ALConfig& cfg) {
  nlohmann::json j = to_json(cfg);
  j.erase("seeds");
  j.erase("name");
  return j;
}

/// Records of a completed seed directory, or nullopt if it is missing,
/// incomplete, or was produced under a different configuration.
inline std::optional<std::vector<CycleRecord>> load_completed_seed(const std::filesystem::path& dir,
                                                                   const ALConfig& cfg) {
  namespace fs = std::filesystem;
  try {
    if (!fs::exists(dir / "summary.json")) return std::nullopt;
    const auto summary = read_json_file(dir / "summary.json");
    if (summary.at("config") != seed_fingerprint(cfg)) return std::nullopt;
    const std::size_t n = summary.at("cycles");
    std::vector<CycleRecord> recs;
    for (std::size_t c = 1; c <= n; ++c) recs.push_back(record_from_json(read_json_file(dir / cycle_file(c))));
    if (!records_consistent(recs)) return std::nullopt;
    return recs;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

/// Runs every configured seed with `Run` (constructed from config, setup and
/// seed). With an output directory, each seed's records are written under
/// <out>/seed<k>/ as they are produced, completed seeds are reused, and
/// <out>/aggregate.csv covers all completed seeds. `only_seed` restricts
/// computation to one seed. `record_timing` adds wall-clock seconds to each
/// summary.json, which then stops being reproducible.
template <typename Run, typename Setup>
ExperimentResult run_seeds(const ALConfig& cfg, const Setup& setup,
                           const std::optional<std::filesystem::path>& out_dir,
                           std::optional<std::uint64_t> only_seed,
                           const std::function<void(const CycleRecord&)>& on_cycle, bool record_timing = false) {
  namespace fs = std::filesystem;
  cfg.validate();
  ExperimentResult result;
  for (std::uint64_t seed : cfg.seeds) {
    const std::optional<fs::path> dir =
        out_dir ? std::optional<fs::path>(*out_dir / ("seed" + std::to_string(seed))) : std::nullopt;
    if (dir) {
      if (auto done = load_completed_seed(*dir, cfg)) {
        result.per_seed.push_back(std::move(*done));
        result.seeds.push_back(seed);
        result.resumed.push_back(seed);
        continue;
      }
    }
    if (only_seed && *only_seed != seed) continue;
    if (dir) {
      fs::remove_all(*dir);
      fs::create_directories(*dir);
    }
    const auto t0 = std::chrono::steady_clock::now();
    Run run(cfg, setup, seed);
    while (auto rec = run.run_cycle()) {
      if (dir) write_json_file(*dir / cycle_file(rec->cycle), to_json(*rec));
      if (on_cycle) on_cycle(*rec);
    }
    if (dir) {
      learn::save_snapshot((*dir / "model.bin").string(), run.model().params(), run.snapshot_meta());
      nlohmann::json summary{{"config", seed_fingerprint(cfg)},
                             {"seed", seed},
                             {"cycles", run.records().size()},
                             {"stopped_early", run.records().size() < cfg.cycles}};
      if (record_timing)
        summary["elapsed_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      write_json_file(*dir / "summary.json", summary);
    }
    result.per_seed.push_back(run.records());
    result.seeds.push_back(seed);
  }
  result.aggregate = aggregate(result.per_seed);
  if (out_dir) write_aggregate(*out_dir, result.aggregate);
  return result;
}

template <typename Model>
ExperimentResult run_experiment(const ALConfig& cfg, const TaskSetup<Model>& setup,
                                const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                                std::optional<std::uint64_t> only_seed = std::nullopt,
                                const std::function<void(const CycleRecord&)>& on_cycle = {},
                                bool record_timing = false) {
  return run_seeds<SeedRun<Model>>(cfg, setup, out_dir, only_seed, on_cycle, record_timing);
}

}  // namespace alps::al
