#include <doctest.h>

#include <cmath>
#include <map>

#include "stancekit/baselines.hpp"
#include "stancekit/error.hpp"
#include "stancekit/inference.hpp"
#include "stancekit/plugins.hpp"
#include "stancekit/rng.hpp"
#include "support.hpp"

using namespace stancekit;
using L = StanceLabel;

namespace {

class ScriptedScorer final : public MaskedTokenScorer {
 public:
  explicit ScriptedScorer(std::vector<double> scores) : scores_(std::move(scores)) {}
  std::vector<double> score_tokens(const std::string& probe, std::span<const std::string> cands) override {
    last_probe = probe;
    last_candidates.assign(cands.begin(), cands.end());
    return scores_;
  }
  std::string last_probe;
  std::vector<std::string> last_candidates;

 private:
  std::vector<double> scores_;
};

class EchoProvider final : public CompletionProvider {
 public:
  explicit EchoProvider(std::string reply) : reply_(std::move(reply)) {}
  std::string complete(const std::string& prompt, const CompletionParams& params) override {
    last_prompt = prompt;
    last_params = params;
    return reply_;
  }
  std::string last_prompt;
  CompletionParams last_params;

 private:
  std::string reply_;
};

/// Fixed vectors per exact string; optional scale applied to every output.
class TableEncoder final : public SentenceEncoder {
 public:
  TableEncoder(std::map<std::string, std::vector<double>> table, std::vector<double> scale = {})
      : table_(std::move(table)), scale_(std::move(scale)) {}
  std::vector<double> encode(std::string_view text) override {
    auto v = table_.at(std::string(text));
    if (!scale_.empty()) {
      const double s = scale_[calls_++ % scale_.size()];
      for (double& x : v) x *= s;
    }
    return v;
  }

 private:
  std::map<std::string, std::vector<double>> table_;
  std::vector<double> scale_;
  std::size_t calls_ = 0;
};

}  // namespace

TEST_CASE("masked-token probe and candidates") {
  CHECK(mlm_probe("X", "Y") == "X, it [MASK] Y");
  const auto cands = mlm_candidates();
  REQUIRE(cands.size() == 3);
  CHECK(cands[0] == "supports");
  CHECK(cands[1] == "opposes");
  CHECK(cands[2] == "neutral");

  ScriptedScorer s({0.6, 0.3, 0.1});
  CHECK(mlm_baseline("text", "topic", s) == L::Support);
  CHECK(s.last_probe == "text, it [MASK] topic");
  ScriptedScorer o({0.1, 0.3, 0.2});
  CHECK(mlm_baseline("a", "b", o) == L::Oppose);
  ScriptedScorer tie({0.2, 0.2, 0.2});
  CHECK(mlm_baseline("a", "b", tie) == L::Support);
  ScriptedScorer wrong({0.2, 0.2});
  CHECK_THROWS_AS(mlm_baseline("a", "b", wrong), Error);
}

TEST_CASE("argmax restricted to a label subset") {
  const std::vector<L> binary = {L::Support, L::Oppose};
  CHECK(argmax_within({0.1, 0.2, 0.7}, binary) == L::Oppose);
  CHECK(argmax_within({0.3, 0.3, 0.9}, binary) == L::Support);
  CHECK(argmax_within({0.1, 0.2, 0.7}, kAllStanceLabels) == L::Neutral);
  CHECK_THROWS_AS(argmax_within({0, 0, 0}, std::vector<L>{}), Error);
}

TEST_CASE("completion baseline prompt and parsing") {
  const auto prompt = completion_baseline_prompt("the text", "the topic");
  CHECK(prompt.find("determine whether the stance of the text is support, against, or neutral") !=
        std::string::npos);
  CHECK(prompt.find("the text") != std::string::npos);
  CHECK(prompt.find("the topic") != std::string::npos);
  CHECK(prompt.size() >= 7);
  CHECK(prompt.substr(prompt.size() - 7) == "Stance:");
  const auto params = completion_baseline_params();
  CHECK(params.temperature == 0.0);

  CHECK(parse_stance_completion(" Against").label == L::Oppose);
  CHECK(!parse_stance_completion(" Against").flagged);
  CHECK(parse_stance_completion("support.").label == L::Support);
  CHECK(parse_stance_completion("OPPOSE").label == L::Oppose);
  CHECK(parse_stance_completion("Opposition, clearly").label == L::Oppose);
  CHECK(parse_stance_completion(" neutral\n").label == L::Neutral);
  CHECK(parse_stance_completion("neutral, not support").label == L::Neutral);
  const auto unknown = parse_stance_completion("I cannot tell");
  CHECK(unknown.label == L::Neutral);
  CHECK(unknown.flagged);
  // A label word embedded inside another word does not count.
  CHECK(parse_stance_completion("unsupported").flagged);

  EchoProvider p(" Support");
  const auto pred = completion_baseline("txt", "top", p);
  CHECK(pred.label == L::Support);
  CHECK(p.last_prompt == completion_baseline_prompt("txt", "top"));
}

TEST_CASE("property: completion parsing is total") {
  Rng rng(31);
  const std::string alphabet = "abcdefghijklmnopqrstuvwxyzSONA .,\n\t!?-'\"\x80\xff";
  for (int i = 0; i < 5000; ++i) {
    std::string s;
    const std::size_t n = rng.index(40);
    for (std::size_t k = 0; k < n; ++k) s.push_back(alphabet[rng.index(alphabet.size())]);
    BaselinePrediction got;
    CHECK_NOTHROW(got = parse_stance_completion(s));
    if (got.flagged) CHECK(got.label == L::Neutral);
  }
}

TEST_CASE("cosine similarity and hypotheses") {
  const std::vector<double> u = {1, 2, 3};
  CHECK(cosine_similarity(u, u) == doctest::Approx(1.0).epsilon(1e-9));
  const std::vector<double> a = {1, 0}, b = {0, 1}, c = {-1, 0};
  CHECK(cosine_similarity(a, b) == doctest::Approx(0.0));
  CHECK(cosine_similarity(a, c) == doctest::Approx(-1.0));
  const std::vector<double> zero = {0, 0};
  try {
    cosine_similarity(a, zero);
    FAIL("expected an encoding error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Encoding);
  }
  CHECK_THROWS_AS(cosine_similarity(a, u), Error);

  const auto h = cosine_hypotheses("guns");
  CHECK(h == std::vector<std::string>{"it supports the guns", "it opposes the guns",
                                      "it is unrelated to the guns"});
}

TEST_CASE("cosine baseline picks the closest hypothesis") {
  const auto hyps = cosine_hypotheses("t");
  std::map<std::string, std::vector<double>> table = {
      {hyps[0], {1, 0, 0}}, {hyps[1], {0, 1, 0}}, {hyps[2], {0, 0, 1}}};
  table["s"] = {1, 0, 0};
  table["n"] = {0, 0, 1};
  table["o"] = {0.1, 0.9, 0.2};
  table["tie"] = {1, 1, 0};
  TableEncoder enc(table);
  CHECK(cosine_baseline("s", "t", enc) == L::Support);
  CHECK(cosine_baseline("n", "t", enc) == L::Neutral);
  CHECK(cosine_baseline("o", "t", enc) == L::Oppose);
  CHECK(cosine_baseline("tie", "t", enc) == L::Support);

  table["zero"] = {0, 0, 0};
  TableEncoder enc2(table);
  CHECK_THROWS_AS(cosine_baseline("zero", "t", enc2), Error);
}

TEST_CASE("property: cosine baseline is invariant to positive rescaling") {
  Rng rng(5);
  const auto hyps = cosine_hypotheses("t");
  for (int trial = 0; trial < 300; ++trial) {
    std::map<std::string, std::vector<double>> table;
    for (const auto& key : {hyps[0], hyps[1], hyps[2], std::string("x")}) {
      std::vector<double> v(4);
      for (double& x : v) x = rng.uniform() - 0.3;
      table[key] = v;
    }
    TableEncoder plain(table);
    std::vector<double> scale;
    for (int i = 0; i < 7; ++i) scale.push_back(0.01 + 50 * rng.uniform());
    TableEncoder scaled(table, scale);
    CHECK(cosine_baseline("x", "t", plain) == cosine_baseline("x", "t", scaled));
  }
}

TEST_CASE("random baseline") {
  const std::vector<L> three(std::begin(kAllStanceLabels), std::end(kAllStanceLabels));
  const auto draws = random_baseline(9999, three, 42);
  std::map<L, int> counts;
  for (L l : draws) ++counts[l];
  // Binomial(9999, 1/3): sigma is about 47.1.
  const double sigma = std::sqrt(9999.0 * (1.0 / 3) * (2.0 / 3));
  for (L l : three) CHECK(std::abs(counts[l] - 3333.0) <= 3 * sigma);

  CHECK(random_baseline(100, three, 7) == random_baseline(100, three, 7));
  CHECK(random_baseline(100, three, 7) != random_baseline(100, three, 8));

  const std::vector<L> binary = {L::Support, L::Oppose};
  for (L l : random_baseline(500, binary, 3)) CHECK(l != L::Neutral);
  CHECK_THROWS_AS(random_baseline(10, std::vector<L>{}, 1), Error);
  CHECK_THROWS_AS(random_baseline(0, three, 1), Error);
}

TEST_CASE("random baseline macro-F1 sits at chance") {
  const std::vector<L> three(std::begin(kAllStanceLabels), std::end(kAllStanceLabels));
  const std::vector<L> binary = {L::Support, L::Oppose};
  std::vector<L> gold3, gold2;
  for (int i = 0; i < 10000; ++i) {
    gold3.push_back(three[static_cast<std::size_t>(i % 3)]);
    gold2.push_back(binary[static_cast<std::size_t>(i % 2)]);
  }
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    CHECK(std::abs(macro_f1(gold3, random_baseline(gold3.size(), three, seed), three).macro_f1 - 0.333) <= 0.02);
    CHECK(std::abs(macro_f1(gold2, random_baseline(gold2.size(), binary, seed), binary).macro_f1 - 0.50) <= 0.02);
  }
}

TEST_CASE("hashed bag-of-words encoder") {
  HashedBowEncoder enc(64);
  const auto v = enc.encode("The cat, the CAT!");
  CHECK(v.size() == 64);
  double total = 0;
  for (double x : v) total += x;
  CHECK(total == 4.0);
  CHECK(enc.encode("the cat") == enc.encode("THE  cat."));
  const auto punct = enc.encode("?!");
  double ptotal = 0;
  for (double x : punct) ptotal += x;
  CHECK(ptotal == 1.0);
  CHECK(cosine_similarity(enc.encode("it supports the plan"), enc.encode("it supports the plan")) ==
        doctest::Approx(1.0));
}

TEST_CASE("fixture scorer plugin") {
  testsupport::TempDir dir;
  testsupport::write_jsonl(dir / "s.jsonl", {{{"probe", "a, it [MASK] b"}, {"scores", {0.1, 0.7, 0.2}}}});
  auto scorer = FixtureScorer::from_file(dir / "s.jsonl");
  CHECK(mlm_baseline("a", "b", *scorer) == L::Oppose);
  CHECK_THROWS_AS(mlm_baseline("c", "d", *scorer), Error);
  testsupport::write_file(dir / "bad.jsonl", "{\"probe\":\"x\"}\n");
  CHECK_THROWS_AS(FixtureScorer::from_file(dir / "bad.jsonl"), ParseError);
}
