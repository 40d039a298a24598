#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "stancekit/corpus.hpp"
#include "stancekit/weakgen.hpp"
#include "support.hpp"

using namespace stancekit;
using testsupport::TempDir;

namespace {

DatasetSpec three_way(const std::string& name = "ds") {
  DatasetSpec spec;
  spec.name = name;
  return spec;
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Internal;
}

std::vector<StanceExample> parse(const std::string& body, const DatasetSpec& spec) {
  std::istringstream in(body);
  return parse_stance_records(in, spec);
}

std::vector<int> iota_vec(int n) {
  std::vector<int> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = i;
  return v;
}

}  // namespace

TEST_CASE("single record loads with its fields") {
  const auto out = parse(
      R"({"text":"Everyone is able to believe in whatever they want.","topic":"Atheism","label":"support"})"
      "\n",
      three_way("semt6"));
  REQUIRE(out.size() == 1);
  CHECK(out[0].text == "Everyone is able to believe in whatever they want.");
  CHECK(out[0].topic == "Atheism");
  CHECK(out[0].label == StanceLabel::Support);
  CHECK(out[0].topic_form == TopicForm::Phrase);
  CHECK(out[0].source_id == "semt6:0");
}

TEST_CASE("labels outside the label set are validation errors") {
  CHECK(kind_of([] { parse(R"({"text":"a","topic":"b","label":"favor"})", three_way()); }) ==
        ErrorKind::Validation);
  DatasetSpec binary = three_way();
  binary.label_set = {StanceLabel::Support, StanceLabel::Oppose};
  binary.eval_mode = EvalMode::BinaryThreshold;
  CHECK(kind_of([&] { parse(R"({"text":"a","topic":"b","label":"neutral"})", binary); }) ==
        ErrorKind::Validation);
}

TEST_CASE("record order and ids follow the file") {
  const auto out = parse(
      "{\"text\":\"t1\",\"topic\":\"a\",\"label\":\"support\"}\n"
      "\n"
      "{\"text\":\"t2\",\"topic\":\"a\",\"label\":\"oppose\",\"id\":\"custom\"}\n"
      "{\"text\":\"t3\",\"topic\":\"b\",\"label\":\"neutral\"}\n",
      three_way());
  REQUIRE(out.size() == 3);
  CHECK(out[0].text == "t1");
  CHECK(out[1].source_id == "custom");
  CHECK(out[2].text == "t3");
  // The blank line still occupies an index.
  CHECK(out[2].source_id == "ds:3");
}

TEST_CASE("malformed records name their line") {
  try {
    parse("{\"text\":\"t1\",\"topic\":\"a\",\"label\":\"support\"}\n{not json\n", three_way());
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK(kind_of([] { parse("{\"text\":\"t\",\"label\":\"support\"}\n", three_way()); }) ==
        ErrorKind::Parse);
  CHECK(kind_of([] { parse("[1,2]\n", three_way()); }) == ErrorKind::Parse);
}

TEST_CASE("empty input and blank fields") {
  CHECK(kind_of([] { parse("", three_way()); }) == ErrorKind::EmptyDataset);
  CHECK(kind_of([] { parse("\n  \n", three_way()); }) == ErrorKind::EmptyDataset);
  CHECK(kind_of([] { parse(R"({"text":"  ","topic":"a","label":"support"})", three_way()); }) ==
        ErrorKind::Validation);
  CHECK(kind_of([] { load_stance_dataset("/nonexistent/file.jsonl", three_way()); }) == ErrorKind::Io);
}

TEST_CASE("dataset spec invariants") {
  DatasetSpec spec = three_way();
  spec.eval_mode = EvalMode::BinaryThreshold;
  CHECK(kind_of([&] { spec.validate(); }) == ErrorKind::Validation);
  spec.label_set = {StanceLabel::Support, StanceLabel::Oppose};
  CHECK_NOTHROW(spec.validate());
  spec.label_set = {StanceLabel::Support, StanceLabel::Support};
  CHECK(kind_of([&] { spec.validate(); }) == ErrorKind::Validation);
  spec.label_set.clear();
  CHECK(kind_of([&] { spec.validate(); }) == ErrorKind::Validation);
}

TEST_CASE("topic form comes from the spec") {
  DatasetSpec spec = three_way("persp");
  spec.topic_form = TopicForm::Sentence;
  const auto out = parse(R"({"text":"x","topic":"claims are true","label":"oppose"})", spec);
  CHECK(out[0].topic_form == TopicForm::Sentence);
}

TEST_CASE("round trip through the normalized format") {
  TempDir dir;
  std::vector<StanceExample> examples = {
      {"Text with \"quotes\" and unicode \xc3\xa9", "topic one", StanceLabel::Support,
       TopicForm::Phrase, "a:1"},
      {"second\ttext", "topic two", StanceLabel::Neutral, TopicForm::Phrase, "a:2"},
      {"third", "t", StanceLabel::Oppose, TopicForm::Phrase, "z"}};
  write_stance_dataset(dir / "d.jsonl", examples);
  const auto back = load_stance_dataset(dir / "d.jsonl", three_way("a"));
  CHECK(back == examples);
  write_stance_dataset(dir / "e.jsonl", back);
  CHECK(testsupport::read_file(dir / "d.jsonl") == testsupport::read_file(dir / "e.jsonl"));
}

TEST_CASE("entailment records round trip and validate") {
  std::vector<NliExample> nli = {{"p1", "h1", NliLabel::Entailment},
                                 {"p2", "h2", NliLabel::Contradiction},
                                 {"p3", "h3", NliLabel::Neutral}};
  std::stringstream ss;
  write_nli_records(ss, nli);
  CHECK(parse_nli_records(ss) == nli);
  std::istringstream bad(R"({"premise":"p","hypothesis":"h","label":"support"})");
  CHECK(kind_of([&] { parse_nli_records(bad); }) == ErrorKind::Validation);
  std::istringstream empty("");
  CHECK(kind_of([&] { parse_nli_records(empty); }) == ErrorKind::EmptyDataset);
}

TEST_CASE("train/dev split sizes") {
  auto s = split_train_dev(iota_vec(10), 0.8, 7);
  CHECK(s.train.size() == 8);
  CHECK(s.dev.size() == 2);
  auto t = split_train_dev(iota_vec(5), 0.8, 7);
  CHECK(t.train.size() == 4);
  CHECK(t.dev.size() == 1);
  auto u = split_train_dev(iota_vec(3), 0.1, 7);
  CHECK(u.train.empty());
  CHECK(u.dev.size() == 3);
}

TEST_CASE("train/dev split errors") {
  CHECK(kind_of([] { split_train_dev(std::vector<int>{}, 0.8, 1); }) == ErrorKind::Validation);
  CHECK(kind_of([] { split_train_dev(iota_vec(4), 0.0, 1); }) == ErrorKind::Validation);
  CHECK(kind_of([] { split_train_dev(iota_vec(4), 1.0, 1); }) == ErrorKind::Validation);
  CHECK(kind_of([] { split_train_dev(iota_vec(4), -0.5, 1); }) == ErrorKind::Validation);
}

TEST_CASE("property: train/dev split partitions the input deterministically") {
  Rng gen(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(gen.index(60));
    const double fraction = 0.05 + 0.9 * gen.uniform();
    const std::uint64_t seed = gen.next();
    // Repeated values check multiset (not set) preservation.
    std::vector<int> input;
    for (int i = 0; i < n; ++i) input.push_back(static_cast<int>(gen.index(10)));
    const auto a = split_train_dev(input, fraction, seed);
    const auto b = split_train_dev(input, fraction, seed);
    CHECK(a.train == b.train);
    CHECK(a.dev == b.dev);
    CHECK(a.train.size() == static_cast<std::size_t>(std::floor(fraction * n)));
    std::vector<int> joined = a.train;
    joined.insert(joined.end(), a.dev.begin(), a.dev.end());
    std::sort(joined.begin(), joined.end());
    auto sorted = input;
    std::sort(sorted.begin(), sorted.end());
    CHECK(joined == sorted);
  }
}

TEST_CASE("split_train_dev works on weak examples") {
  std::vector<WeakExample> weak;
  for (int i = 0; i < 10; ++i)
    weak.push_back({"weak:" + std::to_string(i), "t" + std::to_string(i), "topic", StanceLabel::Support,
                    Provenance::MaskText, "", ""});
  const auto s = split_train_dev(weak, 0.8, 7);
  CHECK(s.train.size() == 8);
  std::set<std::string> ids;
  for (const auto& w : s.train) ids.insert(w.id);
  for (const auto& w : s.dev) ids.insert(w.id);
  CHECK(ids.size() == 10);
}

namespace {
std::vector<StanceExample> topics_dataset(const std::vector<std::string>& topics) {
  std::vector<StanceExample> out;
  for (std::size_t i = 0; i < topics.size(); ++i)
    out.push_back({"text " + std::to_string(i), topics[i], StanceLabel::Neutral, TopicForm::Phrase,
                   "x:" + std::to_string(i)});
  return out;
}
}  // namespace

TEST_CASE("leave-one-topic-out: two topics") {
  const auto splits = leave_one_topic_out_splits(topics_dataset({"A", "B", "A", "B", "A"}));
  REQUIRE(splits.size() == 2);
  CHECK(splits[0].held_out_topic == "A");
  CHECK(splits[0].test.size() == 3);
  CHECK(splits[0].train.size() == 2);
  CHECK(splits[1].held_out_topic == "B");
}

TEST_CASE("leave-one-topic-out: six topics, ordered by first appearance, disjoint") {
  const std::vector<std::string> topics = {"f", "c", "a", "f", "e", "b", "d", "a", "c"};
  const auto data = topics_dataset(topics);
  const auto splits = leave_one_topic_out_splits(data);
  REQUIRE(splits.size() == 6);
  const std::vector<std::string> order = {"f", "c", "a", "e", "b", "d"};
  for (std::size_t i = 0; i < splits.size(); ++i) {
    const auto& s = splits[i];
    CHECK(s.held_out_topic == order[i]);
    CHECK(s.train.size() + s.test.size() == data.size());
    std::set<std::string> train_topics, test_topics;
    for (const auto& ex : s.train) train_topics.insert(ex.topic);
    for (const auto& ex : s.test) test_topics.insert(ex.topic);
    CHECK(test_topics == std::set<std::string>{s.held_out_topic});
    CHECK(train_topics.count(s.held_out_topic) == 0);
    std::set<std::string> ids;
    for (const auto& ex : s.train) ids.insert(ex.source_id);
    for (const auto& ex : s.test) ids.insert(ex.source_id);
    CHECK(ids.size() == data.size());
  }
}

TEST_CASE("leave-one-topic-out needs two topics") {
  CHECK(kind_of([] { leave_one_topic_out_splits(topics_dataset({"A", "A"})); }) ==
        ErrorKind::Validation);
  CHECK(kind_of([] { leave_one_topic_out_splits({}); }) == ErrorKind::Validation);
}
