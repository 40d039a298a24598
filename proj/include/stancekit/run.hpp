#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "stancekit/completion.hpp"
#include "stancekit/corpus.hpp"
#include "stancekit/inference.hpp"
#include "stancekit/plugins.hpp"
#include "stancekit/trainer.hpp"
#include "stancekit/weakgen.hpp"

namespace stancekit {

struct DatasetEntry {
  DatasetSpec spec;
  std::filesystem::path path;
  std::optional<Policy> policy;
};

struct WeakgenSettings {
  std::filesystem::path texts;
  std::filesystem::path topics;
  AssemblyConfig assembly;
  PluginSpec provider;
  std::optional<std::filesystem::path> cache;
};

struct TrainSettings {
  PluginSpec classifier;
  std::optional<std::filesystem::path> nli;
  std::filesystem::path weak_corpus;
  std::filesystem::path weak_provenance;
  double train_fraction = 0.8;
  std::uint64_t split_seed = 0;
  Hyperparams indirect;
  Hyperparams weak;
  bool skip_indirect = false;
  bool skip_weak = false;
  std::optional<Provenance> scheme_only;
};

struct BaselineSettings {
  std::string which;
  std::optional<PluginSpec> scorer;
  std::optional<PluginSpec> encoder;
  std::optional<PluginSpec> provider;
  std::uint64_t seed = 0;
};

/// Typed view over a JSON run configuration. Paths resolve against the config
/// file's directory; weak-corpus defaults live in the output directory.
struct RunConfig {
  nlohmann::json raw;
  std::filesystem::path base_dir;
  std::filesystem::path out_dir;
  std::uint64_t seed = 0;

  std::vector<DatasetEntry> datasets;
  std::optional<WeakgenSettings> weakgen;
  std::optional<TrainSettings> train;
  std::optional<std::filesystem::path> checkpoint;
  std::optional<Policy> eval_policy;
  std::optional<BaselineSettings> baseline;
  std::vector<std::size_t> sizes;
  int size_seeds = 3;

  static RunConfig from_json(nlohmann::json raw, const std::filesystem::path& base_dir);
  static RunConfig load(const std::filesystem::path& path,
                        const std::vector<std::pair<std::string, nlohmann::json>>& overrides = {});
};

/// Sets a dotted key ("train.skip_weak") in a config object.
void apply_override(nlohmann::json& config, std::string_view dotted_key, nlohmann::json value);

/// Parses "key=value"; the value is read as JSON when it parses, else as a string.
std::pair<std::string, nlohmann::json> parse_override(std::string_view assignment);

/// Holds `<dir>/.lock` for the lifetime of the object.
class RunLock {
 public:
  explicit RunLock(std::filesystem::path dir);
  ~RunLock();
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  std::filesystem::path path_;
};

/// Append-only run record at `<dir>/manifest.json`, rewritten atomically
/// (temp file + rename) each time an entry is added.
class RunManifest {
 public:
  explicit RunManifest(std::filesystem::path dir);

  void begin_command(std::string_view command, const RunConfig& config,
                     const std::vector<std::filesystem::path>& inputs);
  void add_stage(nlohmann::json stage);
  const nlohmann::json& data() const noexcept { return data_; }

  static std::string file_digest(const std::filesystem::path& path);

 private:
  void flush() const;

  std::filesystem::path dir_;
  nlohmann::json data_;
};

std::vector<EvalReport> evaluate_datasets(SequencePairClassifier& classifier,
                                          const std::vector<DatasetEntry>& datasets,
                                          std::optional<Policy> policy_override,
                                          const PredictOptions& options);

/// Policy actually applied to a dataset; rejects policy/label-set mismatches.
Policy resolve_policy(const DatasetEntry& dataset, std::optional<Policy> policy_override);

nlohmann::json cmd_generate_weak(const RunConfig& config);
nlohmann::json cmd_train(const RunConfig& config);
nlohmann::json cmd_evaluate(const RunConfig& config);
nlohmann::json cmd_baseline(const RunConfig& config);
nlohmann::json cmd_size_study(const RunConfig& config);

/// Dispatches by command name ("generate-weak", "train", "evaluate",
/// "baseline", "size-study") under the run-directory lock.
nlohmann::json run_command(std::string_view command, const RunConfig& config);

}  // namespace stancekit
