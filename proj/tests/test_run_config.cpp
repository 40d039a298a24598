#include <doctest.h>

#include "stancekit/error.hpp"
#include "stancekit/plugins.hpp"
#include "stancekit/run.hpp"
#include "support.hpp"

using namespace stancekit;
using nlohmann::json;
using testsupport::TempDir;
namespace fs = std::filesystem;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Internal;
}

}  // namespace

TEST_CASE("override parsing") {
  auto [k1, v1] = parse_override("train.skip_weak=true");
  CHECK(k1 == "train.skip_weak");
  CHECK(v1 == json(true));
  auto [k2, v2] = parse_override("size_study.sizes=[10,20]");
  CHECK(v2 == json::array({10, 20}));
  auto [k3, v3] = parse_override("out=runs/a");
  CHECK(v3 == json("runs/a"));
  auto [k4, v4] = parse_override("name=");
  CHECK(v4 == json(""));
  CHECK(kind_of([] { parse_override("novalue"); }) == ErrorKind::Usage);
  CHECK(kind_of([] { parse_override("=3"); }) == ErrorKind::Usage);

  json cfg = {{"train", {{"seed", 1}}}};
  apply_override(cfg, "train.weak.epochs", 3);
  apply_override(cfg, "seed", 9);
  CHECK(cfg["train"]["weak"]["epochs"] == 3);
  CHECK(cfg["train"]["seed"] == 1);
  CHECK(cfg["seed"] == 9);
  CHECK(kind_of([&] { apply_override(cfg, "a..b", 1); }) == ErrorKind::Usage);
  json with_list = {{"datasets", {{{"name", "a"}}, {{"name", "b"}}}}};
  apply_override(with_list, "datasets.1.policy", "vote");
  CHECK(with_list["datasets"][1]["policy"] == "vote");
  CHECK(with_list["datasets"].is_array());
  CHECK(kind_of([&] { apply_override(with_list, "datasets.2.policy", "vote"); }) == ErrorKind::Usage);
  CHECK(kind_of([&] { apply_override(with_list, "datasets.x", 1); }) == ErrorKind::Usage);
}

TEST_CASE("config defaults and path resolution") {
  const fs::path base = "/cfg/dir";
  const auto c = RunConfig::from_json(
      {{"out", "run"},
       {"seed", 5},
       {"datasets", json::array({{{"name", "a"}, {"path", "a.jsonl"}},
                                 {{"name", "b"},
                                  {"path", "/abs/b.jsonl"},
                                  {"labels", {"support", "oppose"}},
                                  {"eval_mode", "binary_threshold"},
                                  {"topic_form", "sentence"}}})},
       {"weakgen", {{"texts", "t.txt"}, {"topics", "p.txt"}, {"target_size", 30}, {"provider", "fixture"}}},
       {"train", {{"nli", "nli.jsonl"}}}},
      base);
  CHECK(c.out_dir == base / "run");
  CHECK(c.seed == 5);
  REQUIRE(c.datasets.size() == 2);
  CHECK(c.datasets[0].path == base / "a.jsonl");
  CHECK(c.datasets[0].spec.label_set.size() == 3);
  CHECK(c.datasets[1].path == "/abs/b.jsonl");
  CHECK(c.datasets[1].spec.eval_mode == EvalMode::BinaryThreshold);
  CHECK(c.datasets[1].spec.topic_form == TopicForm::Sentence);

  REQUIRE(c.weakgen);
  CHECK(c.weakgen->texts == base / "t.txt");
  CHECK(c.weakgen->assembly.target_size == 30);
  CHECK(c.weakgen->assembly.neutral_fraction == doctest::Approx(1.0 / 3));
  CHECK(c.weakgen->assembly.seed == 5);
  CHECK(c.weakgen->assembly.retry_budget_factor == 5);
  CHECK(c.weakgen->provider.name == "fixture");
  CHECK(c.weakgen->cache == c.out_dir / "completion_cache.jsonl");

  REQUIRE(c.train);
  CHECK(c.train->classifier.name == "hashed-bow");
  CHECK(c.train->weak_corpus == c.out_dir / "weak_corpus.jsonl");
  CHECK(c.train->weak_provenance == c.out_dir / "weak_provenance.jsonl");
  CHECK(c.train->train_fraction == doctest::Approx(0.8));
  CHECK(c.train->weak.learning_rate == doctest::Approx(1e-6));
  CHECK(c.train->weak.epochs == 20);
  CHECK(c.train->weak.batch_size == 16);
  CHECK(c.train->indirect.max_pair_length == 200);
  CHECK(c.train->weak.seed == 5);
  CHECK(!c.train->skip_indirect);
  CHECK(!c.baseline);
  CHECK(c.size_seeds == 3);
}

TEST_CASE("config validation") {
  const fs::path base = "/x";
  CHECK(kind_of([&] { RunConfig::from_json(json::object(), base); }) == ErrorKind::Usage);
  CHECK(kind_of([&] {
          RunConfig::from_json({{"out", "o"}, {"datasets", {{{"name", "d"}, {"labels", {"maybe"}}}}}}, base);
        }) == ErrorKind::Validation);
  CHECK(kind_of([&] {
          RunConfig::from_json({{"out", "o"}, {"datasets", {{{"name", "d"}, {"eval_mode", "binary_threshold"}}}}},
                               base);
        }) == ErrorKind::Validation);
  CHECK(kind_of([&] {
          RunConfig::from_json({{"out", "o"}, {"weakgen", {{"texts", "t"}}}}, base);
        }) == ErrorKind::Validation);
  CHECK(kind_of([&] {
          RunConfig::from_json({{"out", "o"}, {"train", {{"weak", {{"epochs", 0}}}}}}, base);
        }) == ErrorKind::Validation);
  CHECK(kind_of([&] {
          RunConfig::from_json({{"out", "o"}, {"train", {{"scheme_only", "neutral_synthesis"}}}}, base);
        }) == ErrorKind::Usage);
  CHECK(kind_of([&] {
          RunConfig::from_json({{"out", "o"}, {"evaluate", {{"policy", "majority"}}}}, base);
        }) == ErrorKind::Validation);
  CHECK(kind_of([&] { RunConfig::from_json({{"out", "o"}, {"seed", "x"}}, base); }) == ErrorKind::Validation);
  CHECK(kind_of([&] {
          RunConfig::from_json({{"out", "o"}, {"size_study", {{"seeds", 0}}}}, base);
        }) == ErrorKind::Validation);
}

TEST_CASE("config files load with overrides relative to their directory") {
  TempDir dir;
  fs::create_directories(dir / "conf");
  testsupport::write_file(dir / "conf" / "run.json",
                          json{{"out", "out"}, {"train", {{"weak", {{"epochs", 4}}}}}}.dump());
  const auto c = RunConfig::load(dir / "conf" / "run.json",
                                 {{"train.weak.epochs", 2}, {"train.skip_indirect", true}});
  CHECK(c.out_dir == dir / "conf" / "out");
  CHECK(c.train->weak.epochs == 2);
  CHECK(c.train->skip_indirect);

  testsupport::write_file(dir / "bad.json", "[1, 2");
  CHECK(kind_of([&] { RunConfig::load(dir / "bad.json"); }) == ErrorKind::Validation);
  CHECK(kind_of([&] { RunConfig::load(dir / "missing.json"); }) == ErrorKind::Io);
}

TEST_CASE("run directory lock is exclusive and released") {
  TempDir dir;
  {
    RunLock lock(dir.path());
    CHECK(fs::exists(dir / ".lock"));
    CHECK(kind_of([&] { RunLock again(dir.path()); }) == ErrorKind::Usage);
  }
  CHECK(!fs::exists(dir / ".lock"));
  CHECK_NOTHROW(RunLock(dir.path()));
}

TEST_CASE("manifest is append-only across commands") {
  TempDir dir;
  testsupport::write_file(dir / "input.txt", "abc");
  const auto config = RunConfig::from_json({{"out", dir.path().string()}, {"seed", 3}}, dir.path());
  {
    RunManifest m(dir.path());
    m.begin_command("generate-weak", config, {dir / "input.txt", dir / "absent.txt"});
    m.add_stage({{"stage", "one"}});
  }
  const auto first = json::parse(testsupport::read_file(dir / "manifest.json"));
  CHECK(first["commands"].size() == 1);
  CHECK(first["commands"][0]["seed"] == 3);
  CHECK(first["commands"][0]["config"]["seed"] == 3);
  const auto digests = first["commands"][0]["input_digests"];
  CHECK(digests.size() == 1);
  CHECK(digests[(dir / "input.txt").string()] ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  {
    RunManifest m(dir.path());
    m.begin_command("train", config, {});
    m.add_stage({{"stage", "two"}});
  }
  const auto second = json::parse(testsupport::read_file(dir / "manifest.json"));
  CHECK(second["commands"].size() == 2);
  REQUIRE(second["stages"].size() == 2);
  CHECK(second["stages"][0] == first["stages"][0]);
  CHECK(second["stages"][1]["stage"] == "two");
  CHECK(second["stages"][1].contains("finished"));
  CHECK(!fs::exists(dir / "manifest.json.tmp"));

  testsupport::write_file(dir / "manifest.json", "garbage");
  CHECK(kind_of([&] { RunManifest m(dir.path()); }) == ErrorKind::Validation);
}

TEST_CASE("policy resolution checks label sets") {
  DatasetEntry three;
  three.spec.name = "three";
  DatasetEntry binary;
  binary.spec.name = "binary";
  binary.spec.label_set = {StanceLabel::Support, StanceLabel::Oppose};
  binary.spec.eval_mode = EvalMode::BinaryThreshold;

  CHECK(resolve_policy(three, std::nullopt) == Policy::ThreeWay);
  CHECK(resolve_policy(binary, std::nullopt) == Policy::BinaryThreshold);
  CHECK(resolve_policy(three, Policy::Vote) == Policy::Vote);
  CHECK(kind_of([&] { resolve_policy(binary, Policy::ThreeWay); }) == ErrorKind::Validation);
  CHECK(kind_of([&] { resolve_policy(three, Policy::BinaryThreshold); }) == ErrorKind::Validation);
  three.policy = Policy::Vote;
  CHECK(resolve_policy(three, std::nullopt) == Policy::Vote);
  CHECK(resolve_policy(three, Policy::ThreeWay) == Policy::ThreeWay);
}

TEST_CASE("plugin registry") {
  auto& r = PluginRegistry::global();
  const auto classifiers = r.names("classifier");
  CHECK(std::find(classifiers.begin(), classifiers.end(), "hashed-bow") != classifiers.end());
  const auto providers = r.names("provider");
  CHECK(std::find(providers.begin(), providers.end(), "fixture") != providers.end());
  CHECK(std::find(providers.begin(), providers.end(), "http") != providers.end());

  PluginSpec missing;
  missing.name = "nope";
  CHECK(kind_of([&] { r.make_classifier(missing); }) == ErrorKind::Plugin);
  CHECK(kind_of([&] { r.make_provider(missing); }) == ErrorKind::Plugin);
  CHECK(kind_of([&] { r.make_scorer(missing); }) == ErrorKind::Plugin);
  CHECK(kind_of([&] { r.make_encoder(missing); }) == ErrorKind::Plugin);

  const auto spec = PluginSpec::from_json({{"name", "fixture"}}, "/base");
  CHECK(kind_of([&] { r.make_provider(spec); }) == ErrorKind::Validation);
  CHECK(kind_of([&] { PluginSpec::from_json(json::array(), "/b"); }) == ErrorKind::Validation);
  CHECK(PluginSpec::from_json({{"name", "f"}, {"path", "x.jsonl"}}, "/base").resolve("path") == "/base/x.jsonl");

  r.register_classifier("test-echo", [](const PluginSpec&) {
    return std::make_unique<testsupport::GoldEchoClassifier>();
  });
  PluginSpec echo;
  echo.name = "test-echo";
  CHECK(r.make_classifier(echo) != nullptr);

  CHECK(r.make_classifier(PluginSpec::from_json({{"name", "hashed-bow"}, {"hash_bits", 10}}, "/")) != nullptr);
  CHECK(r.make_encoder(PluginSpec::from_json("hashed-bow", "/"))->encode("a b").size() == 256);
}

TEST_CASE("error kinds have stable names") {
  CHECK(std::string(to_string(ErrorKind::Usage)) == "usage");
  CHECK(std::string(to_string(ErrorKind::Provider)) == "provider");
  CHECK(std::string(to_string(ErrorKind::PartialCorpus)) == "partial_corpus");
  CHECK(std::string(to_string(ErrorKind::Internal)) == "internal");
}
