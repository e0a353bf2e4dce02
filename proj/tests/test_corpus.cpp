#include <gtest/gtest.h>

#include <sstream>

#include "alps/corpus/annotation.hpp"
#include "alps/corpus/io.hpp"
#include "alps/corpus/synthetic.hpp"

using namespace alps;

namespace {

std::vector<std::vector<Token>> tokens_of(const Corpus& c) {
  std::vector<std::vector<Token>> out;
  for (const auto& s : c.sentences) out.push_back(s.tokens);
  return out;
}

Sentence tagged(std::vector<std::pair<std::string, std::string>> form_tag, std::string pos = "NOUN") {
  Sentence s;
  s.id = "x";
  for (auto& [f, t] : form_tag) s.tokens.push_back({f, pos, t, -1, ""});
  return s;
}

}  // namespace

TEST(Bio, RepairTurnsOrphansIntoBegins) {
  std::vector<std::string> t{"I-PER", "I-PER", "O", "I-LOC", "B-ORG", "I-LOC"};
  EXPECT_EQ(first_bio_violation(t), 0);
  EXPECT_EQ(repair_bio(t), 3);
  EXPECT_EQ(t, (std::vector<std::string>{"B-PER", "I-PER", "O", "B-LOC", "B-ORG", "B-LOC"}));
  EXPECT_EQ(first_bio_violation(t), -1);
}

TEST(Bio, SpansRoundTripThroughTags) {
  const std::vector<Mention> spans{{0, 1, "PER"}, {3, 3, "LOC"}, {4, 6, "ORG"}};
  const auto tags = tags_from_spans(8, spans);
  EXPECT_EQ(tags, (std::vector<std::string>{"B-PER", "I-PER", "O", "B-LOC", "B-ORG", "I-ORG", "I-ORG", "O"}));
  EXPECT_EQ(spans_from_tags(tags), spans);
}

TEST(Bio, LabelSetOrder) {
  const auto ls = bio_labels({"LOC", "PER"});
  EXPECT_EQ(ls.names(), (std::vector<std::string>{"O", "B-LOC", "I-LOC", "B-PER", "I-PER"}));
  EXPECT_EQ(ls.id("I-PER"), 4);
  EXPECT_THROW(ls.id("B-ORG"), std::out_of_range);
}

TEST(Io, ColumnTaggingRoundTrip) {
  std::istringstream in(
      "-DOCSTART- -X- O\n\n"
      "John PROPN B-PER\nSmith PROPN I-PER\nruns VERB O\n\n"
      "Paris PROPN B-LOC\n");
  const Corpus c = read_column_tagging(in);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c.sentences[0].tokens[1].tag, "I-PER");
  std::ostringstream out;
  write_column_tagging(out, c);
  std::istringstream back(out.str());
  EXPECT_EQ(tokens_of(read_column_tagging(back)), tokens_of(c));
}

TEST(Io, FourColumnLinesUseTheLastColumn) {
  std::istringstream in("EU NNP B-NP B-ORG\nrejects VBZ B-VP O\n");
  const Corpus c = read_column_tagging(in);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c.sentences[0].tokens[0].tag, "B-ORG");
  EXPECT_EQ(c.sentences[0].tokens[0].pos, "NNP");
}

TEST(Io, OrphanTagsRepairedOrRejected) {
  const std::string text = "a X O\nb X I-PER\n";
  std::istringstream lenient(text);
  EXPECT_EQ(read_column_tagging(lenient).sentences[0].tokens[1].tag, "B-PER");
  std::istringstream strict(text);
  EXPECT_THROW(read_column_tagging(strict, ColumnOptions{true}), ValidationError);
}

TEST(Io, MalformedColumnLinesAreParseErrors) {
  std::istringstream two("a X\n");
  EXPECT_THROW(read_column_tagging(two), ParseError);
  std::istringstream badtag("a X Q-PER\n");
  EXPECT_THROW(read_column_tagging(badtag), ParseError);
}

TEST(Io, ConlluRoundTripSkipsMultiwordAndEmptyNodes) {
  std::istringstream in(
      "# sent_id = 1\n"
      "1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_\n"
      "1\tdo\tdo\tAUX\t_\t_\t3\taux\t_\t_\n"
      "2\tn't\tnot\tPART\t_\t_\t3\tadvmod\t_\t_\n"
      "3\tgo\tgo\tVERB\t_\t_\t0\troot\t_\t_\n"
      "3.1\tgone\t_\t_\t_\t_\t_\t_\t_\t_\n"
      "\n");
  const Corpus c = read_conllu(in);
  ASSERT_EQ(c.size(), 1u);
  ASSERT_EQ(c.sentences[0].size(), 3u);
  EXPECT_EQ(c.sentences[0].heads(), (std::vector<int>{3, 3, 0}));
  EXPECT_EQ(c.sentences[0].tokens[1].deprel, "advmod");
  std::ostringstream out;
  write_conllu(out, c);
  std::istringstream back(out.str());
  EXPECT_EQ(tokens_of(read_conllu(back)), tokens_of(c));
}

TEST(Io, ConlluRejectsCyclicHeads) {
  std::istringstream in(
      "1\ta\ta\tX\t_\t_\t2\tdep\t_\t_\n"
      "2\tb\tb\tX\t_\t_\t1\tdep\t_\t_\n\n");
  EXPECT_THROW(read_conllu(in), ValidationError);
}

TEST(Io, IeJsonlRoundTrip) {
  std::istringstream in(
      R"({"id":"d1","tokens":["Ann","works","at","Acme","Corp"],"pos":["PROPN","VERB","ADP","PROPN","PROPN"],)"
      R"("mentions":[[0,0,"PER"],[3,4,"ORG"]],"relations":[[0,1,"works_for"]]})"
      "\n");
  const Corpus c = read_ie_jsonl(in);
  ASSERT_EQ(c.size(), 1u);
  const auto& s = c.sentences[0];
  EXPECT_EQ(s.id, "d1");
  EXPECT_EQ(tags_of(s), (std::vector<std::string>{"B-PER", "O", "O", "B-ORG", "I-ORG"}));
  ASSERT_EQ(s.relations.size(), 1u);
  EXPECT_EQ(s.relations[0].label, "works_for");
  std::ostringstream out;
  write_ie_jsonl(out, c);
  std::istringstream back(out.str());
  EXPECT_EQ(read_ie_jsonl(back), c);
}

TEST(Io, IeJsonlValidatesSpansAndArguments) {
  std::istringstream span(R"({"tokens":["a"],"mentions":[[0,3,"X"]]})");
  EXPECT_THROW(read_ie_jsonl(span), ValidationError);
  std::istringstream args(R"({"tokens":["a","b"],"mentions":[[0,0,"X"]],"relations":[[0,0,"r"]]})");
  EXPECT_THROW(read_ie_jsonl(args), ValidationError);
  std::istringstream junk("{not json\n");
  EXPECT_THROW(read_ie_jsonl(junk), ParseError);
}

TEST(Annotation, QueryInsideMentionRevealsWholeMention) {
  const auto s = tagged({{"a", "O"}, {"b", "B-PER"}, {"c", "I-PER"}, {"d", "I-PER"}, {"e", "O"}});
  const auto tags = bio_labels({"PER"});
  const auto st = simulate_annotation(s, {2}, Task::Tagging, tags);
  EXPECT_EQ(st.status, AnnotationStatus::Partial);
  EXPECT_EQ(st.annotated, (std::vector<std::uint8_t>{0, 1, 1, 1, 0}));
  EXPECT_EQ(st.value[1], tags.id("B-PER"));
  const auto outside = simulate_annotation(s, {0}, Task::Tagging, tags);
  EXPECT_EQ(outside.num_annotated(), 1u);
  EXPECT_EQ(full_annotation(s, Task::Tagging, tags).status, AnnotationStatus::Full);
  EXPECT_THROW(simulate_annotation(s, {9}, Task::Tagging, tags), std::out_of_range);
}

TEST(Annotation, ParsingRevealsHeadsOnly) {
  Sentence s;
  for (int h : {2, 0, 2}) s.tokens.push_back({"w", "X", "O", h, "dep"});
  const auto st = simulate_annotation(s, {0, 2}, Task::Parsing, LabelSet{});
  EXPECT_EQ(st.annotated, (std::vector<std::uint8_t>{1, 0, 1}));
  EXPECT_EQ(st.value, (std::vector<int>{2, -1, 2}));
  const auto c = st.head_constraint();
  EXPECT_TRUE(c.allowed(2, 1));
  EXPECT_FALSE(c.allowed(0, 1));
  EXPECT_TRUE(c.allowed(0, 2));
}

TEST(Annotation, MergeIsAUnion) {
  auto a = AnnotationState::unlabeled(4);
  a.reveal(0, 3);
  auto b = AnnotationState::unlabeled(4);
  b.reveal(2, 1);
  a.merge(b);
  EXPECT_EQ(a.num_annotated(), 2u);
  EXPECT_EQ(a.value[2], 1);
  EXPECT_EQ(a.status, AnnotationStatus::Partial);
}

TEST(Cost, TaggingFaCountsOnlyFilteredPos) {
  auto s = tagged({{"a", "O"}, {"b", "B-PER"}, {"c", "O"}});
  s.tokens[1].pos = "PROPN";
  s.tokens[2].pos = "ADJ";
  const auto tags = bio_labels({"PER"});
  const auto full = full_annotation(s, Task::Tagging, tags);
  EXPECT_EQ(count_labeling_cost(s, full, Task::Tagging, CostMode::FA), 2.0);
  CostConfig all;
  all.unfiltered_fa = true;
  EXPECT_EQ(count_labeling_cost(s, full, Task::Tagging, CostMode::FA, all), 3.0);
  const auto part = simulate_annotation(s, {0}, Task::Tagging, tags);
  EXPECT_EQ(count_labeling_cost(s, part, Task::Tagging, CostMode::PA), 1.0);
}

TEST(Cost, ParsingSumsSurfaceDistances) {
  Sentence s;
  // heads 2, 0, 2, 3 -> |1-2| + |2-0| + |3-2| + |4-3|
  for (int h : {2, 0, 2, 3}) s.tokens.push_back({"w", "X", "O", h, "dep"});
  const auto full = full_annotation(s, Task::Parsing, LabelSet{});
  EXPECT_EQ(count_labeling_cost(s, full, Task::Parsing, CostMode::FA), 5.0);
  CostConfig edges;
  edges.dpar_count_edges = true;
  EXPECT_EQ(count_labeling_cost(s, full, Task::Parsing, CostMode::FA, edges), 4.0);
  EXPECT_EQ(count_labeling_cost(s, AnnotationState::unlabeled(4), Task::Parsing, CostMode::PA), 0.0);
}

TEST(Synthetic, DeterministicPerSeed) {
  GeneratorSpec g;
  g.sentences = 50;
  EXPECT_EQ(generate_synthetic(g, 3), generate_synthetic(g, 3));
  EXPECT_NE(generate_synthetic(g, 3), generate_synthetic(g, 4));
}

TEST(Synthetic, EveryTaskProducesValidStructures) {
  for (Task t : {Task::Tagging, Task::Parsing, Task::IE}) {
    GeneratorSpec g;
    g.task = t;
    g.sentences = 80;
    const Corpus c = generate_synthetic(g, 9);
    ASSERT_EQ(c.size(), 80u);
    for (const auto& s : c.sentences) {
      ASSERT_GE(s.size(), g.min_len);
      ASSERT_LE(s.size(), g.max_len);
      if (t == Task::Parsing) {
        EXPECT_TRUE(tree::is_tree(s.heads()));
      } else {
        EXPECT_EQ(first_bio_violation(tags_of(s)), -1);
      }
      if (t == Task::IE) {
        EXPECT_EQ(spans_from_tags(tags_of(s)), s.mentions);
      }
    }
  }
}

TEST(Synthetic, RejectsBadSpecs) {
  GeneratorSpec g;
  g.types.clear();
  EXPECT_THROW(g.validate(), ConfigError);
  g = {};
  g.max_len = 2;
  EXPECT_THROW(g.validate(), ConfigError);
}
