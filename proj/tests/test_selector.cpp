#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "alps/corpus/io.hpp"
#include "alps/corpus/synthetic.hpp"
#include "alps/selector/loop.hpp"
#include "alps/selector/query.hpp"
#include "alps/selector/records.hpp"

using namespace alps;
using namespace alps::al;
namespace fs = std::filesystem;

namespace {

Candidate cand(std::size_t idx, std::size_t tokens, std::vector<double> u) { return {idx, tokens, std::move(u)}; }

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("alps_sel_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct TinyTagging {
  Corpus train, test;
  TaskSetup<learn::TaggingModel> setup;

  TinyTagging() {
    GeneratorSpec g;
    g.sentences = 260;
    g.vocab_size = 200;
    train = generate_synthetic(g, 21);
    g.sentences = 60;
    g.id_prefix = "test";
    test = generate_synthetic(g, 22);
    setup.task = Task::Tagging;
    setup.train = &train;
    setup.test = &test;
    setup.tags = bio_labels(entity_types(train));
    setup.make_model = [this](learn::FeatureCache& c) { return learn::TaggingModel(setup.tags, 16, c); };
  }

  static ALConfig config(Strategy s, bool st = false) {
    ALConfig c;
    c.name = "tiny";
    c.strategy = s;
    c.self_training = st;
    c.batch_tokens = 150;
    c.cycles = 2;
    c.seeds = {1, 2};
    c.train.steps = 30;
    c.train.eval_every = 10;
    c.train.hash_bits = 16;
    return c;
  }
};

}  // namespace

TEST(Query, RanksByMeanUncertaintyUntilBudget) {
  const std::vector<Candidate> pool{cand(0, 4, {0.1, 0.1}), cand(1, 3, {0.9, 0.7}), cand(2, 5, {0.5}),
                                    cand(3, 2, {0.8, 0.8})};
  EXPECT_EQ(sentence_query(pool, 4), (std::vector<std::size_t>{1, 3}));
  EXPECT_EQ(sentence_query(pool, 5), (std::vector<std::size_t>{1, 3}));
  EXPECT_EQ(sentence_query(pool, 6), (std::vector<std::size_t>{1, 3, 2}));
  EXPECT_EQ(sentence_query(pool, 100).size(), 4u);
}

TEST(Query, TiesKeepPoolOrder) {
  const std::vector<Candidate> pool{cand(0, 1, {0.5}), cand(1, 1, {0.5}), cand(2, 1, {0.5})};
  EXPECT_EQ(sentence_query(pool, 2), (std::vector<std::size_t>{0, 1}));
}

TEST(Query, RandomQueryIsSeededAndCoversBudget) {
  std::vector<Candidate> pool;
  for (std::size_t i = 0; i < 30; ++i) pool.push_back(cand(i, 3, {0.0}));
  Rng a(4), b(4);
  const auto x = random_query(pool, 20, a);
  EXPECT_EQ(x, random_query(pool, 20, b));
  EXPECT_EQ(x.size(), 7u);
}

TEST(Query, RatioCountIsACeiling) {
  EXPECT_EQ(ratio_count(0.34, 3), 2u);
  EXPECT_EQ(ratio_count(0.2, 10), 2u);  // 0.2 * 10 is 2.0000000000000004 in binary
  EXPECT_EQ(ratio_count(0.21, 10), 3u);
  EXPECT_EQ(ratio_count(0.0, 10), 0u);
  EXPECT_EQ(ratio_count(1.0, 7), 7u);
  EXPECT_EQ(ratio_count(0.5, 0), 0u);
}

TEST(Query, PartialSelectIsUnionOfLocalAndGlobal) {
  // r = 0.25: local ceil(.25*4)=1 and ceil(.25*2)=1; global ceil(.25*6)=2
  const std::vector<std::vector<double>> u{{0.9, 0.8, 0.1, 0.7}, {0.2, 0.3}};
  const auto sel = partial_select(u, 0.25);
  EXPECT_EQ(sel[0], (std::set<std::size_t>{0, 1}));
  EXPECT_EQ(sel[1], (std::set<std::size_t>{1}));
}

TEST(Query, PartialSelectAtFullRatioTakesEverything) {
  const std::vector<std::vector<double>> u{{0.1, 0.2}, {0.3}};
  const auto sel = partial_select(u, 1.0);
  EXPECT_EQ(sel[0].size(), 2u);
  EXPECT_EQ(sel[1].size(), 1u);
}

TEST(Records, JsonRoundTrip) {
  CycleRecord r;
  r.cycle = 3;
  r.seed = 7;
  r.strategy = "pa+st";
  r.task = "tagging";
  r.labeling_cost = 12.5;
  r.test.f1 = 0.625;
  r.selected_ids = {"a", "b"};
  EXPECT_EQ(record_from_json(to_json(r)), r);
}

TEST(Records, ConsistencyChecksMonotoneCosts) {
  std::vector<CycleRecord> recs(2);
  recs[0].cycle = 1;
  recs[1].cycle = 2;
  recs[0].reading_cost = 10;
  recs[1].reading_cost = 20;
  recs[0].budget_remaining = 5;
  EXPECT_TRUE(records_consistent(recs));
  recs[1].labeling_cost = -1;
  EXPECT_FALSE(records_consistent(recs));
  recs[1].labeling_cost = 0;
  recs[1].reading_cost = 5;
  EXPECT_FALSE(records_consistent(recs));
}

TEST(Records, AggregateUsesPopulationStd) {
  std::vector<std::vector<CycleRecord>> per_seed(2, std::vector<CycleRecord>(1));
  per_seed[0][0].cycle = per_seed[1][0].cycle = 1;
  per_seed[0][0].test_primary = 0.4;
  per_seed[1][0].test_primary = 0.6;
  const auto rows = aggregate(per_seed);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_NEAR(rows[0].stats.at("test_primary").mean, 0.5, 1e-12);
  EXPECT_NEAR(rows[0].stats.at("test_primary").std, 0.1, 1e-12);
}

TEST(Partitions, AreDisjointAndCoverTheCorpus) {
  GeneratorSpec g;
  g.sentences = 100;
  const Corpus c = generate_synthetic(g, 2);
  Rng rng(3);
  const auto st = sample_partitions(c, 100, 80, 500, rng);
  EXPECT_TRUE(st.disjoint());
  EXPECT_EQ(st.seed.size() + st.dev.size() + st.unlabeled.size(), c.size());
  std::size_t seed_tokens = 0;
  for (auto i : st.seed) seed_tokens += c.sentences[i].size();
  EXPECT_GE(seed_tokens, 100u);
  Rng small(3);
  EXPECT_THROW(sample_partitions(c, 100000, 10, 10, small), ConfigError);
}

TEST(Loop, FaRunProducesConsistentRecords) {
  TinyTagging t;
  const auto res = run_experiment(TinyTagging::config(Strategy::FA), t.setup);
  ASSERT_EQ(res.per_seed.size(), 2u);
  for (const auto& recs : res.per_seed) {
    ASSERT_EQ(recs.size(), 2u);
    EXPECT_TRUE(records_consistent(recs));
    for (const auto& r : recs) {
      EXPECT_GE(r.cycle_reading_cost, 150.0);
      EXPECT_DOUBLE_EQ(r.ratio, 1.0);
      EXPECT_DOUBLE_EQ(r.cycle_annotated, r.cycle_reading_cost);
      EXPECT_GE(r.test.f1, 0.0);
      EXPECT_LE(r.test.f1, 1.0);
    }
  }
  ASSERT_EQ(res.aggregate.size(), 2u);
}

TEST(Loop, ParsingThroughConlluKeepsRecordInvariants) {
  // same path a treebank takes: text -> reader -> FA parsing loop
  GeneratorSpec g;
  g.task = Task::Parsing;
  g.sentences = 300;
  g.vocab_size = 200;
  std::stringstream buf;
  write_conllu(buf, generate_synthetic(g, 23));
  const Corpus all = read_conllu(buf);
  Corpus train, test;
  train.sentences.assign(all.sentences.begin(), all.sentences.begin() + 240);
  test.sentences.assign(all.sentences.begin() + 240, all.sentences.end());
  const LabelSet deprels(dependency_labels(all));
  TaskSetup<learn::ParsingModel> setup;
  setup.task = Task::Parsing;
  setup.train = &train;
  setup.test = &test;
  setup.make_model = [deprels](learn::FeatureCache& c) { return learn::ParsingModel(deprels, 16, c); };
  ALConfig cfg = TinyTagging::config(Strategy::FA);
  cfg.task = Task::Parsing;
  cfg.cycles = 3;
  cfg.seeds = {1};
  cfg.train.steps = 40;
  const auto res = run_experiment(cfg, setup);
  const auto& recs = res.per_seed.at(0);
  ASSERT_EQ(recs.size(), 3u);
  EXPECT_TRUE(records_consistent(recs));
  for (const auto& r : recs) {
    EXPECT_LE(r.test.las, r.test.uas);
    EXPECT_GT(r.test.uas, 0.0);
  }
}

TEST(Loop, PaAnnotatesASubsetWithTheAdaptiveRatio) {
  TinyTagging t;
  const auto res = run_experiment(TinyTagging::config(Strategy::PA, true), t.setup);
  for (const auto& recs : res.per_seed)
    for (const auto& r : recs) {
      EXPECT_GE(r.ratio, 0.02);
      EXPECT_LE(r.ratio, 0.98);
      EXPECT_LE(r.cycle_annotated, r.cycle_reading_cost);
      EXPECT_DOUBLE_EQ(r.cycle_labeling_cost, r.cycle_annotated);
    }
}

TEST(Loop, WritesArtifactsAndResumesCompletedSeeds) {
  TinyTagging t;
  const auto dir = scratch("resume");
  const auto cfg = TinyTagging::config(Strategy::FA);
  const auto first = run_experiment(cfg, t.setup, dir);
  for (const char* f : {"seed1/cycle1.json", "seed1/cycle2.json", "seed1/summary.json", "seed1/model.bin",
                        "seed2/cycle2.json", "aggregate.csv"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;

  std::ifstream in(dir / "seed1" / "cycle2.json");
  std::stringstream before;
  before << in.rdbuf();
  fs::remove_all(dir / "seed2");
  const auto second = run_experiment(cfg, t.setup, dir);
  EXPECT_EQ(second.resumed, (std::vector<std::uint64_t>{1}));
  EXPECT_EQ(second.per_seed, first.per_seed);

  auto changed = cfg;
  changed.batch_tokens = 160;
  EXPECT_TRUE(run_experiment(changed, t.setup, dir).resumed.empty());
  fs::remove_all(dir);
}

TEST(Loop, SeedFilterComputesOnlyThatSeed) {
  TinyTagging t;
  const auto dir = scratch("filter");
  const auto res = run_experiment(TinyTagging::config(Strategy::Rand), t.setup, dir, std::uint64_t{2});
  EXPECT_EQ(res.seeds, (std::vector<std::uint64_t>{2}));
  EXPECT_FALSE(fs::exists(dir / "seed1"));
  EXPECT_TRUE(fs::exists(dir / "seed2" / "summary.json"));
  fs::remove_all(dir);
}

TEST(Config, StrategyParsingNamesTheField) {
  EXPECT_EQ(parse_strategy("pa"), Strategy::PA);
  try {
    parse_strategy("bogus");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("strategy"), std::string::npos);
  }
}

TEST(Config, ValidationRejectsBadValues) {
  ALConfig c;
  c.batch_tokens = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.bounds = {0.5, 0.4};
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.beta = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
}
