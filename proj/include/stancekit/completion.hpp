#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace stancekit {

/// Decoding parameters for one completion request.
struct CompletionParams {
  double temperature = 0.0;
  int max_tokens = 16;
  std::vector<std::string> stop{"\n"};
  double top_p = 1.0;
  double frequency_penalty = 0.0;

  static CompletionParams mask_topic_defaults();
  static CompletionParams mask_text_defaults();

  void validate() const;
  nlohmann::json to_json() const;
  static CompletionParams from_json(const nlohmann::json& j, const CompletionParams& base);

  friend bool operator==(const CompletionParams&, const CompletionParams&) = default;
};

/// Anything that turns a prompt into a raw completion. Implementations must
/// tolerate concurrent calls and throw ProviderError on transport failure.
class CompletionProvider {
 public:
  virtual ~CompletionProvider() = default;
  virtual std::string complete(const std::string& prompt, const CompletionParams& params) = 0;
};

/// Cuts the completion at the earliest stop sequence.
std::string apply_stop(std::string completion, const std::vector<std::string>& stop);

/// Line-delimited persistent store of completions keyed by
/// sha256(prompt, canonical params). Writes are serialized.
class CompletionCache {
 public:
  /// Loads existing entries. A line that does not parse, or whose key does not
  /// match its contents, raises a cache error.
  explicit CompletionCache(std::filesystem::path path);

  static std::string key_for(std::string_view prompt, const CompletionParams& params);

  std::optional<std::string> lookup(const std::string& key) const;
  void store(const std::string& key, const std::string& prompt, const CompletionParams& params,
             const std::string& completion);
  void clear();
  std::size_t size() const;
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, std::string> entries_;
};

std::string cached_complete(CompletionProvider& provider, const std::string& prompt,
                            const CompletionParams& params, CompletionCache& cache);

class CachingProvider final : public CompletionProvider {
 public:
  CachingProvider(std::shared_ptr<CompletionProvider> inner, std::shared_ptr<CompletionCache> cache)
      : inner_(std::move(inner)), cache_(std::move(cache)) {}
  std::string complete(const std::string& prompt, const CompletionParams& params) override {
    return cached_complete(*inner_, prompt, params, *cache_);
  }

 private:
  std::shared_ptr<CompletionProvider> inner_;
  std::shared_ptr<CompletionCache> cache_;
};

/// Replays completions from a fixture file of {prompt, completion} records.
/// Unknown prompts complete to the empty string unless `strict`.
class FixtureProvider final : public CompletionProvider {
 public:
  explicit FixtureProvider(std::map<std::string, std::string> table, bool strict = false)
      : table_(std::move(table)), strict_(strict) {}
  static std::shared_ptr<FixtureProvider> from_file(const std::filesystem::path& path,
                                                    bool strict = false);

  std::string complete(const std::string& prompt, const CompletionParams& params) override;

 private:
  std::map<std::string, std::string> table_;
  bool strict_;
};

struct HttpProviderOptions {
  std::string url;  // scheme://host[:port]/path
  std::string model;
  std::string api_key;
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  double backoff_multiplier = 2.0;
  std::chrono::seconds timeout{60};
};

/// POSTs {prompt, max_tokens, temperature, top_p, frequency_penalty, stop} as
/// JSON and accepts either {"completion": ...} or {"choices": [{"text": ...}]}.
/// Connection failures, 429 and 5xx are retried with exponential backoff.
class HttpCompletionProvider final : public CompletionProvider {
 public:
  explicit HttpCompletionProvider(HttpProviderOptions options);
  std::string complete(const std::string& prompt, const CompletionParams& params) override;

  static nlohmann::json request_body(const std::string& prompt, const CompletionParams& params,
                                     const std::string& model);
  static std::string parse_response(const std::string& body);

 private:
  HttpProviderOptions options_;
  std::string base_;
  std::string path_;
};

}  // namespace stancekit
