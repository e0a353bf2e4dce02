#include <gtest/gtest.h>

#include <sstream>

#include "alps/corpus/synthetic.hpp"
#include "alps/learner/models.hpp"
#include "alps/learner/snapshot.hpp"
#include "alps/learner/trainer.hpp"
#include "alps/selector/loop.hpp"

using namespace alps;
using namespace alps::learn;

namespace {

struct Data {
  Corpus train, test;
  LabelSet tags;
  std::vector<AnnotationState> anns;
  std::vector<TaggingModel::Gold> gold;

  explicit Data(Task task = Task::Tagging) {
    GeneratorSpec g;
    g.task = task;
    g.sentences = 150;
    g.vocab_size = 150;
    g.noise = 0.0;
    train = generate_synthetic(g, 31);
    g.sentences = 50;
    test = generate_synthetic(g, 32);
    tags = task == Task::Parsing ? LabelSet{} : bio_labels(entity_types(train));
    anns.reserve(train.size());
    for (const auto& s : train.sentences) anns.push_back(full_annotation(s, task, tags));
  }
};

TrainConfig quick(std::size_t steps) {
  TrainConfig c;
  c.steps = steps;
  c.eval_every = 20;
  c.hash_bits = 16;
  return c;
}

}  // namespace

TEST(Hash, FnvMatchesReferenceVectors) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a("foobar"), 0x85944171f73967e8ULL);
}

TEST(Features, DeterministicAndTemplateSeparated) {
  Sentence s;
  for (const char* w : {"Alice", "met", "Bob"}) s.tokens.push_back({w, "PROPN", "O", 0, "dep"});
  EXPECT_EQ(token_features(s, 1), token_features(s, 1));
  EXPECT_NE(token_features(s, 0), token_features(s, 2));
  EXPECT_FALSE(arc_features(s, 0, 2).empty());
  EXPECT_NE(arc_features(s, 1, 2), arc_features(s, 3, 2));
}

TEST(Params, SlotsStayInRangeAndDependOnOutput) {
  ParameterStore p(8, 3);
  EXPECT_EQ(p.hashed.size(), 256u);
  for (std::uint64_t id = 0; id < 1000; ++id) {
    EXPECT_LT(p.slot(id, 2), 256u);
  }
  int same = 0;
  for (std::uint64_t id = 0; id < 200; ++id) same += p.slot(id, 0) == p.slot(id, 1);
  EXPECT_LT(same, 10);
  EXPECT_THROW(ParameterStore(2, 0), std::invalid_argument);
}

TEST(Params, AdagradStepMatchesHandComputation) {
  ParameterStore p(4, 1);
  p.dense[0] = 1.0;
  GradBuffer g(p);
  g.add_dense(0, 0.5);
  g.add_hashed(3, -2.0);
  Adagrad opt(p, 0.1, 0.01);
  opt.step(p, g);
  // dense: g = 0.5 + 0.01 * 1 = 0.51, acc = 0.2601 -> w = 1 - 0.1 * 0.51 / 0.51
  EXPECT_NEAR(p.dense[0], 0.9, 1e-7);
  EXPECT_NEAR(p.hashed[3], 0.1, 1e-7);
  EXPECT_EQ(p.hashed[2], 0.0);
}

TEST(Trainer, MixingScheduleAlternates) {
  std::vector<bool> got;
  for (std::size_t k = 0; k < 6; ++k) got.push_back(is_gold_batch(k, 2, 1));
  EXPECT_EQ(got, (std::vector<bool>{true, true, false, true, true, false}));
}

TEST(Trainer, TaggerLearnsNoiseFreeData) {
  Data d;
  FeatureCache cache;
  TaggingModel m(d.tags, 16, cache);
  for (std::size_t i = 0; i < d.train.size(); ++i) d.gold.push_back({&d.train.sentences[i], &d.anns[i]});
  const auto test = al::pointers(d.test);
  const double before = m.evaluate(test).f1;
  const auto res = train<TaggingModel>(m, d.gold, {}, test, quick(200));
  EXPECT_GT(m.evaluate(test).f1, 0.6);
  EXPECT_GT(m.evaluate(test).f1, before);
  EXPECT_DOUBLE_EQ(m.dev_metric(test), res.best_dev);
  EXPECT_TRUE(m.params().all_finite());
}

TEST(Trainer, SameSeedSameParameters) {
  Data d;
  for (std::size_t i = 0; i < d.train.size(); ++i) d.gold.push_back({&d.train.sentences[i], &d.anns[i]});
  FeatureCache c1, c2;
  TaggingModel a(d.tags, 16, c1), b(d.tags, 16, c2);
  train<TaggingModel>(a, d.gold, {}, {}, quick(40));
  train<TaggingModel>(b, d.gold, {}, {}, quick(40));
  EXPECT_EQ(a.params(), b.params());
}

TEST(Trainer, ParserLearnsNoiseFreeData) {
  Data d(Task::Parsing);
  FeatureCache cache;
  ParsingModel m(LabelSet(dependency_labels(d.train)), 16, cache);
  std::vector<ParsingModel::Gold> gold;
  for (std::size_t i = 0; i < d.train.size(); ++i) gold.push_back({&d.train.sentences[i], &d.anns[i]});
  const auto test = al::pointers(d.test);
  train<ParsingModel>(m, gold, {}, test, quick(150));
  const auto r = m.evaluate(test);
  EXPECT_GT(r.uas, 0.5);
  EXPECT_LE(r.las, r.uas);
}

TEST(Trainer, RejectsEmptyGoldAndBadConfig) {
  Data d;
  FeatureCache cache;
  TaggingModel m(d.tags, 16, cache);
  EXPECT_THROW(train<TaggingModel>(m, {}, {}, {}, quick(5)), std::invalid_argument);
  TrainConfig bad = quick(5);
  bad.learning_rate = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(PseudoLabels, OneHotAtAnnotatedPositionsAndFullSkipped) {
  Data d;
  FeatureCache cache;
  TaggingModel m(d.tags, 16, cache);
  m.params().hashed[5] = 0.3;
  Rng rng(8);
  std::vector<AnnotationState> partial;
  partial.reserve(20);
  std::vector<std::pair<const Sentence*, const AnnotationState*>> targets;
  for (std::size_t i = 0; i < 20; ++i) {
    std::set<std::size_t> q;
    for (std::size_t t = 0; t < d.train.sentences[i].size(); ++t)
      if (uniform01(rng) < 0.3) q.insert(t);
    partial.push_back(simulate_annotation(d.train.sentences[i], q, Task::Tagging, d.tags));
    targets.emplace_back(&d.train.sentences[i], &partial.back());
  }
  targets.emplace_back(&d.train.sentences[30], &d.anns[30]);
  const auto ps = make_pseudo_labels(m, targets);
  EXPECT_EQ(ps.size(), 20u);
  for (std::size_t i = 0; i < 20; ++i)
    for (std::size_t t = 0; t < partial[i].size(); ++t)
      if (partial[i].is_annotated(t)) {
        EXPECT_GE(ps.teachers[i]->unary(t, static_cast<std::size_t>(partial[i].value[t])), 1.0 - 1e-9);
      }
}

TEST(Snapshot, RoundTripKeepsParametersAndMeta) {
  ParameterStore p(6, 4);
  p.hashed[7] = -1.25;
  p.hashed[63] = 3e-12;
  p.dense = {1, 2, 3, 4};
  std::stringstream buf;
  write_snapshot(buf, p, {{"task", "tagging"}, {"labels", {"O", "B-X"}}});
  const auto s = read_snapshot(buf);
  EXPECT_EQ(s.params, p);
  EXPECT_EQ(s.meta.at("task"), "tagging");
  EXPECT_EQ(s.meta.at("nnz"), 2);
}

TEST(Snapshot, CorruptInputIsAParseError) {
  std::stringstream empty;
  EXPECT_THROW(read_snapshot(empty), ParseError);
  std::stringstream wrong(R"({"format":"other"})" "\n");
  EXPECT_THROW(read_snapshot(wrong), ParseError);
  std::stringstream junk("not json\n");
  EXPECT_THROW(read_snapshot(junk), ParseError);
}
