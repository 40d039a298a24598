#pragma once
// Shared fixtures for the test binaries: temp directories, file writers, a
// synthetic keyword stance world and scripted classifiers.

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stancekit/classifier.hpp"
#include "stancekit/completion.hpp"
#include "stancekit/corpus.hpp"
#include "stancekit/trainer.hpp"
#include "stancekit/weakgen.hpp"

namespace testsupport {

namespace fs = std::filesystem;
using nlohmann::json;
using stancekit::StanceLabel;

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = fs::temp_directory_path() /
            ("stancekit-test-" + std::to_string(stamp) + "-" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  for (const auto& l : lines) out << l << '\n';
}

inline void write_jsonl(const fs::path& path, const std::vector<json>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  for (const auto& r : rows) out << r.dump() << '\n';
}

inline std::vector<json> read_jsonl(const fs::path& path) {
  std::ifstream in(path);
  std::vector<json> rows;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) rows.push_back(json::parse(line));
  return rows;
}

inline std::size_t count_lines(const fs::path& path) {
  std::ifstream in(path);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) n += line.empty() ? 0 : 1;
  return n;
}

inline json stance_record(const std::string& text, const std::string& topic, StanceLabel label,
                          const std::string& id = {}) {
  json r{{"text", text}, {"topic", topic}, {"label", stancekit::to_string(label)}};
  if (!id.empty()) r["id"] = id;
  return r;
}

// ---------------------------------------------------------------------------
// Keyword world: stance is carried by a cue verb, relatedness by the topic
// word appearing in the text. Separable by a lexical model.

struct KeywordWorld {
  std::vector<std::string> weak_topics;
  std::vector<std::string> test_topics;
  std::vector<std::string> texts;                // unlabeled pool for MASK-Topic
  std::map<std::string, std::string> completions;  // prompt -> completion
  std::vector<stancekit::NliExample> nli;
  std::vector<stancekit::StanceExample> test;

  static const std::vector<std::string>& pro_cues() {
    static const std::vector<std::string> v = {"love", "cherish", "embrace", "champion"};
    return v;
  }
  static const std::vector<std::string>& con_cues() {
    static const std::vector<std::string> v = {"hate", "reject", "condemn", "despise"};
    return v;
  }

  static KeywordWorld make(std::size_t n_weak_topics = 80, std::size_t n_test_topics = 20) {
    static const char* kStems[] = {"solar", "tariff", "zoning", "tolls", "vaping", "drones",
                                   "rent", "tenure", "curfews", "lottery", "uniforms", "casinos",
                                   "nuclear", "cloning", "hunting", "whaling", "fracking", "mining",
                                   "tuition", "welfare", "vouchers", "pensions", "subsidies", "quotas",
                                   "audits", "census", "draft", "militia", "tariffs", "embargo"};
    static const char* kSuffixes[] = {"", "plan", "law", "tax", "reform", "ban", "fund", "board"};
    KeywordWorld w;
    std::vector<std::string> names;
    for (const char* suffix : kSuffixes)
      for (const char* stem : kStems) names.push_back(std::string(stem) + suffix);
    w.weak_topics.assign(names.begin(), names.begin() + static_cast<std::ptrdiff_t>(n_weak_topics));
    w.test_topics.assign(names.begin() + static_cast<std::ptrdiff_t>(n_weak_topics),
                         names.begin() + static_cast<std::ptrdiff_t>(n_weak_topics + n_test_topics));

    static const char* kFillers[] = {"every single day", "without any doubt", "quite openly now",
                                     "more than most people"};
    for (std::size_t i = 0; i < w.weak_topics.size(); ++i) {
      const auto& t = w.weak_topics[i];
      for (int k = 0; k < 4; ++k) {
        const bool pro = k < 2;
        const auto& cues = pro ? pro_cues() : con_cues();
        const std::string text = "i " + cues[(i + k) % cues.size()] + " " + t + " " + kFillers[k];
        w.texts.push_back(text);
        const auto label = pro ? StanceLabel::Support : StanceLabel::Oppose;
        w.completions[stancekit::build_mask_topic_prompt(text, label)] = " " + t + "\nignored";
      }
      for (StanceLabel label : {StanceLabel::Support, StanceLabel::Oppose}) {
        const auto& cues = label == StanceLabel::Support ? pro_cues() : con_cues();
        w.completions[stancekit::build_mask_text_prompt(t, label)] =
            " we " + cues[(i + 1) % cues.size()] + " " + t + " for good reasons\n";
      }
    }

    static const char* kNouns[] = {"apples", "trains", "opera", "chess", "rivers", "poetry",
                                   "cats", "bridges", "jazz", "tea", "forests", "theatre",
                                   "maps", "clocks", "sailing", "gardens", "museums", "lamps",
                                   "violins", "deserts", "harbors", "novels", "candles", "tulips",
                                   "kites"};
    constexpr std::size_t kNounCount = std::size(kNouns);
    for (std::size_t i = 0; i < kNounCount; ++i) {
      const std::string n = kNouns[i];
      const std::string other = kNouns[(i + 7) % kNounCount];
      w.nli.push_back({"they adore " + n + " deeply", "he is in favor of " + n,
                       stancekit::NliLabel::Entailment});
      w.nli.push_back({"they detest " + n + " deeply", "he is in favor of " + n,
                       stancekit::NliLabel::Contradiction});
      w.nli.push_back({"they adore " + other + " deeply", "he is in favor of " + n,
                       stancekit::NliLabel::Neutral});
      w.nli.push_back({"they detest " + other + " openly", "he is in favor of " + n,
                       stancekit::NliLabel::Neutral});
    }

    for (std::size_t i = 0; i < w.test_topics.size(); ++i) {
      const auto& t = w.test_topics[i];
      const auto& next = w.test_topics[(i + 1) % w.test_topics.size()];
      const auto& pro = pro_cues()[i % pro_cues().size()];
      const auto& con = con_cues()[i % con_cues().size()];
      w.test.push_back({"honestly i " + pro + " " + t + " these days", t, StanceLabel::Support,
                        stancekit::TopicForm::Phrase, "test:" + std::to_string(3 * i)});
      w.test.push_back({"honestly i " + con + " " + t + " these days", t, StanceLabel::Oppose,
                        stancekit::TopicForm::Phrase, "test:" + std::to_string(3 * i + 1)});
      w.test.push_back({"honestly i " + pro + " " + next + " these days", t, StanceLabel::Neutral,
                        stancekit::TopicForm::Phrase, "test:" + std::to_string(3 * i + 2)});
    }
    return w;
  }

  std::shared_ptr<stancekit::FixtureProvider> provider() const {
    return std::make_shared<stancekit::FixtureProvider>(completions);
  }

  /// Writes texts, topics, fixture, entailment and test files into `dir`.
  void write(const fs::path& dir) const {
    write_lines(dir / "texts.txt", texts);
    write_lines(dir / "topics.txt", weak_topics);
    std::vector<json> fixture;
    for (const auto& [prompt, completion] : completions)
      fixture.push_back({{"prompt", prompt}, {"completion", completion}});
    write_jsonl(dir / "fixture.jsonl", fixture);
    std::ofstream nli_out(dir / "nli.jsonl", std::ios::binary | std::ios::trunc);
    stancekit::write_nli_records(nli_out, nli);
    nli_out.close();
    stancekit::write_stance_dataset(dir / "test.jsonl", test);
  }

  /// Complete run configuration for the files written by write().
  static json config(const fs::path& out, std::size_t target_size = 200) {
    return json{
        {"out", out.string()},
        {"seed", 7},
        {"datasets", json::array({{{"name", "keywords"}, {"path", "test.jsonl"}}})},
        {"weakgen",
         {{"texts", "texts.txt"},
          {"topics", "topics.txt"},
          {"target_size", target_size},
          {"provider", {{"name", "fixture"}, {"path", "fixture.jsonl"}}}}},
        {"train",
         {{"nli", "nli.jsonl"},
          {"indirect", {{"learning_rate", 0.05}, {"epochs", 8}, {"batch_size", 8}}},
          {"weak", {{"learning_rate", 0.05}, {"epochs", 10}, {"batch_size", 8}}}}}};
  }
};

// ---------------------------------------------------------------------------
// Scripted classifiers

inline stancekit::NliProbs nli_probs_for(StanceLabel label) {
  switch (label) {
    case StanceLabel::Support: return {0.8, 0.1, 0.1};
    case StanceLabel::Oppose: return {0.1, 0.8, 0.1};
    case StanceLabel::Neutral: return {0.1, 0.1, 0.8};
  }
  return {};
}

/// State is the number of fit_batch calls so far. Predictions for a premise
/// come from a per-state script; unscripted premises read as neutral.
class EpochScriptedClassifier final : public stancekit::SequencePairClassifier {
 public:
  using Script = std::map<int, std::map<std::string, StanceLabel>>;
  explicit EpochScriptedClassifier(Script script) : script_(std::move(script)) {}

  void configure(const stancekit::Hyperparams&) override { ++configure_calls; }
  double fit_batch(std::span<const stancekit::PremiseHypothesisPair> batch) override {
    ++state;
    batch_sizes.push_back(batch.size());
    return 1.0 / static_cast<double>(state);
  }
  stancekit::NliProbs predict_proba(std::string_view premise, std::string_view) override {
    auto epoch = script_.find(state);
    if (epoch == script_.end()) return nli_probs_for(StanceLabel::Neutral);
    auto it = epoch->second.find(std::string(premise));
    return nli_probs_for(it == epoch->second.end() ? StanceLabel::Neutral : it->second);
  }
  stancekit::Checkpoint snapshot() const override { return {"epoch:" + std::to_string(state)}; }
  void restore(const stancekit::Checkpoint& c) override {
    state = std::stoi(c.blob.substr(c.blob.find(':') + 1));
    ++restore_calls;
  }

  int state = 0;
  int configure_calls = 0;
  int restore_calls = 0;
  std::vector<std::size_t> batch_sizes;

 private:
  Script script_;
};

/// Reads the gold label written into the premise as "gold=<label>" and answers
/// like a perfect entailment model, so "opposes" hypotheses flip the reading.
class GoldEchoClassifier final : public stancekit::SequencePairClassifier {
 public:
  void configure(const stancekit::Hyperparams&) override {}
  double fit_batch(std::span<const stancekit::PremiseHypothesisPair>) override { return 0.0; }
  stancekit::NliProbs predict_proba(std::string_view premise, std::string_view hypothesis) override {
    const bool flip = hypothesis.find("opposes") != std::string_view::npos;
    for (StanceLabel l : stancekit::kAllStanceLabels)
      if (premise.find(std::string("gold=") + stancekit::to_string(l)) != std::string_view::npos) {
        auto p = nli_probs_for(l);
        if (flip) std::swap(p.entailment, p.contradiction);
        return p;
      }
    return nli_probs_for(StanceLabel::Neutral);
  }
  stancekit::Checkpoint snapshot() const override { return {"echo"}; }
  void restore(const stancekit::Checkpoint&) override {}
};

}  // namespace testsupport
