#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stancekit/baselines.hpp"
#include "stancekit/classifier.hpp"
#include "stancekit/completion.hpp"

namespace stancekit {

/// Options block from the run config ({"name": ..., other keys}) plus the
/// directory relative paths resolve against.
struct PluginSpec {
  std::string name;
  nlohmann::json options = nlohmann::json::object();
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::string& key) const;
  static PluginSpec from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
};

/// Name-keyed factories for classifiers, scorers, encoders and completion
/// providers. Built-ins are registered on first use of global().
class PluginRegistry {
 public:
  using ClassifierFactory = std::function<std::unique_ptr<SequencePairClassifier>(const PluginSpec&)>;
  using ProviderFactory = std::function<std::shared_ptr<CompletionProvider>(const PluginSpec&)>;
  using ScorerFactory = std::function<std::unique_ptr<MaskedTokenScorer>(const PluginSpec&)>;
  using EncoderFactory = std::function<std::unique_ptr<SentenceEncoder>(const PluginSpec&)>;

  static PluginRegistry& global();

  void register_classifier(const std::string& name, ClassifierFactory f);
  void register_provider(const std::string& name, ProviderFactory f);
  void register_scorer(const std::string& name, ScorerFactory f);
  void register_encoder(const std::string& name, EncoderFactory f);

  std::unique_ptr<SequencePairClassifier> make_classifier(const PluginSpec& spec) const;
  std::shared_ptr<CompletionProvider> make_provider(const PluginSpec& spec) const;
  std::unique_ptr<MaskedTokenScorer> make_scorer(const PluginSpec& spec) const;
  std::unique_ptr<SentenceEncoder> make_encoder(const PluginSpec& spec) const;

  std::vector<std::string> names(const std::string& kind) const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, ClassifierFactory> classifiers_;
  std::map<std::string, ProviderFactory> providers_;
  std::map<std::string, ScorerFactory> scorers_;
  std::map<std::string, EncoderFactory> encoders_;
};

/// Scores candidates from a {probe, scores: [..]} fixture file.
class FixtureScorer final : public MaskedTokenScorer {
 public:
  explicit FixtureScorer(std::map<std::string, std::vector<double>> table) : table_(std::move(table)) {}
  static std::unique_ptr<FixtureScorer> from_file(const std::filesystem::path& path);
  std::vector<double> score_tokens(const std::string& text_with_mask,
                                   std::span<const std::string> candidates) override;

 private:
  std::map<std::string, std::vector<double>> table_;
};

}  // namespace stancekit
