#pragma once

// simulate / report / evaluate. Each returns a process exit code:
// 0 success, 2 configuration error, 1 anything else.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "alps/cli/report.hpp"
#include "alps/cli/runspec.hpp"
#include "alps/ie/loop.hpp"
#include "alps/learner/snapshot.hpp"
#include "alps/selector/loop.hpp"

namespace alps::cli {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

/// Label sets cover both corpora so test-only labels still have an index.
struct Labels {
  LabelSet tags;       // BIO tags (tagging, ie) or dependency relations (parsing)
  LabelSet relations;  // ie only
};

inline Labels labels_for(Task task, const Corpus& train, const Corpus& test) {
  Corpus both;
  both.sentences = train.sentences;
  both.sentences.insert(both.sentences.end(), test.sentences.begin(), test.sentences.end());
  Labels l;
  if (task == Task::Parsing) {
    l.tags = LabelSet(dependency_labels(both));
  } else {
    l.tags = bio_labels(entity_types(both));
  }
  if (task == Task::IE) l.relations = ie::relation_labels(both);
  return l;
}

inline void print_cycle(std::ostream& log, const al::CycleRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "seed %llu cycle %zu  %s=%.4f  read=%.0f label=%.0f  r=%.3f\n",
                static_cast<unsigned long long>(r.seed), r.cycle, metric_name(r.task), r.test_primary,
                r.reading_cost, r.labeling_cost, r.ratio);
  log << buf;
}

inline al::ExperimentResult simulate(const RunSpec& spec, std::optional<std::uint64_t> seed_filter,
                                     std::ostream& log) {
  const auto& cfg = spec.al;
  if (seed_filter && std::find(cfg.seeds.begin(), cfg.seeds.end(), *seed_filter) == cfg.seeds.end())
    throw ConfigError("seed-filter: seed " + std::to_string(*seed_filter) + " is not in seeds");
  const Corpora data = load_corpora(spec);
  const Labels labels = labels_for(cfg.task, data.train, data.test);
  const auto dir = spec.run_dir();
  std::filesystem::create_directories(dir);
  al::write_json_file(dir / "config.json", al::to_json(cfg));
  auto on_cycle = [&](const al::CycleRecord& r) { print_cycle(log, r); };
  const unsigned bits = cfg.train.hash_bits;
  const bool timing = !spec.deterministic;

  switch (cfg.task) {
    case Task::Tagging: {
      al::TaskSetup<learn::TaggingModel> setup;
      setup.task = Task::Tagging;
      setup.train = &data.train;
      setup.test = &data.test;
      setup.tags = labels.tags;
      setup.make_model = [&](learn::FeatureCache& c) { return learn::TaggingModel(labels.tags, bits, c); };
      return al::run_experiment(cfg, setup, dir, seed_filter, on_cycle, timing);
    }
    case Task::Parsing: {
      al::TaskSetup<learn::ParsingModel> setup;
      setup.task = Task::Parsing;
      setup.train = &data.train;
      setup.test = &data.test;
      setup.tags = labels.tags;
      setup.make_model = [&](learn::FeatureCache& c) { return learn::ParsingModel(labels.tags, bits, c); };
      return al::run_experiment(cfg, setup, dir, seed_filter, on_cycle, timing);
    }
    case Task::IE: {
      ie::IESetup setup;
      setup.train = &data.train;
      setup.test = &data.test;
      setup.tags = labels.tags;
      setup.relations = labels.relations;
      setup.make_model = [&](learn::FeatureCache& c) { return ie::IEModel(labels.tags, labels.relations, bits, c); };
      return ie::run_ie_experiment(cfg, setup, dir, seed_filter, on_cycle, timing);
    }
  }
  throw ConfigError("task: unsupported");
}

/// Scores a saved model on a corpus.
inline eval::EvalReport evaluate_snapshot(const learn::Snapshot& snap, const Corpus& data, Task task) {
  const std::string saved = snap.meta.value("task", "");
  if (saved != to_string(task))
    throw ConfigError("task: model was trained for '" + saved + "', not '" + to_string(task) + "'");
  const LabelSet labels(snap.meta.at("labels").get<std::vector<std::string>>());
  learn::FeatureCache cache;
  const auto sentences = al::pointers(data);
  auto score = [&](auto model) {
    if (model.params().hashed.size() != snap.params.hashed.size() ||
        model.params().dense.size() != snap.params.dense.size())
      throw ValidationError("params: layout does not match the model described in the header");
    model.params() = snap.params;
    return model.evaluate(sentences);
  };
  const unsigned bits = snap.params.hash_bits;
  switch (task) {
    case Task::Tagging: return score(learn::TaggingModel(labels, bits, cache));
    case Task::Parsing: return score(learn::ParsingModel(labels, bits, cache));
    case Task::IE: {
      const LabelSet rels(snap.meta.at("relations").get<std::vector<std::string>>());
      return score(ie::IEModel(labels, rels, bits, cache));
    }
  }
  throw ConfigError("task: unsupported");
}

inline nlohmann::json report_json(const eval::EvalReport& r, Task task) {
  nlohmann::json j;
  switch (task) {
    case Task::Tagging: j = {{"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1}}; break;
    case Task::Parsing: j = {{"las", r.las}, {"uas", r.uas}}; break;
    case Task::IE: j = {{"mention_f1", r.mention_f1}, {"relation_f1", r.relation_f1}}; break;
  }
  j["task"] = to_string(task);
  return j;
}

/// Runs `body`, mapping exceptions to exit codes and messages on `err`.
template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    body();
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

inline int cmd_simulate(const std::string& config, std::optional<std::uint64_t> seed_filter, std::ostream& out,
                        std::ostream& err) {
  return guarded(err, [&] {
    const RunSpec spec = load_runspec(config);
    const auto res = simulate(spec, seed_filter, err);
    out << "run " << spec.al.name << " (" << spec.al.label() << ", " << to_string(spec.al.task) << "): "
        << res.seeds.size() << " seed(s), " << res.resumed.size() << " resumed -> " << spec.run_dir().string()
        << "\n";
  });
}

inline int cmd_report(const std::vector<std::string>& dirs, const std::string& out_dir, std::ostream& out,
                      std::ostream& err) {
  return guarded(err, [&] {
    std::vector<std::filesystem::path> paths(dirs.begin(), dirs.end());
    const auto res = make_report(paths, out_dir);
    for (const auto& f : res.files) out << f.string() << "\n";
  });
}

inline int cmd_evaluate(const std::string& params, const std::string& data, const std::string& task_name,
                        std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    Task task;
    try {
      task = parse_task(task_name);
    } catch (const std::exception&) {
      throw ConfigError("task: unknown value '" + task_name + "' (expected tagging, parsing or ie)");
    }
    const auto snap = learn::load_snapshot(params);
    const std::string saved = snap.meta.value("task", "");
    if (saved != to_string(task))
      throw ConfigError("task: model was trained for '" + saved + "', not '" + to_string(task) + "'");
    const Corpus corpus = load_corpus(data, task);
    out << report_json(evaluate_snapshot(snap, corpus, task), task).dump(2) << "\n";
  });
}

}  // namespace alps::cli
