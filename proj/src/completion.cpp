#include "stancekit/completion.hpp"

// Keep httplib internal to the shared library: its inline symbols would
// otherwise interpose with a differently configured copy in client code.
// System headers come first so only httplib itself is hidden.
#include <arpa/inet.h>
#include <ifaddrs.h>
#include <net/if.h>
#include <netdb.h>
#include <netinet/in.h>
#include <resolv.h>
#include <netinet/tcp.h>
#include <csignal>
#include <pthread.h>
#include <sys/mman.h>
#include <sys/select.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>
#include <algorithm>
#include <array>
#include <atomic>
#include <cassert>
#include <cctype>
#include <climits>
#include <condition_variable>
#include <cstring>
#include <errno.h>
#include <exception>
#include <fcntl.h>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <sys/stat.h>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <openssl/err.h>
#include <openssl/evp.h>
#include <openssl/ssl.h>
#include <openssl/x509v3.h>
#pragma GCC visibility push(hidden)
#include <httplib.h>
#pragma GCC visibility pop

#include <ctime>
#include <fstream>
#include <thread>

#include "stancekit/error.hpp"
#include "stancekit/text.hpp"

namespace stancekit {

using nlohmann::json;

CompletionParams CompletionParams::mask_topic_defaults() {
  return CompletionParams{
      .temperature = 0.8, .max_tokens = 6, .stop = {"\n"}, .top_p = 1.0, .frequency_penalty = 0.0};
}

CompletionParams CompletionParams::mask_text_defaults() {
  return CompletionParams{
      .temperature = 0.9, .max_tokens = 150, .stop = {"\n"}, .top_p = 1.0, .frequency_penalty = 0.3};
}

void CompletionParams::validate() const {
  if (!(temperature >= 0.0 && temperature <= 1.0))
    fail(ErrorKind::Validation, "temperature must lie in [0, 1]");
  if (max_tokens <= 0) fail(ErrorKind::Validation, "max_tokens must be positive");
  if (!(top_p > 0.0 && top_p <= 1.0)) fail(ErrorKind::Validation, "top_p must lie in (0, 1]");
}

json CompletionParams::to_json() const {
  // nlohmann orders object keys, so dump() is canonical.
  return json{{"temperature", temperature},
              {"max_tokens", max_tokens},
              {"stop", stop},
              {"top_p", top_p},
              {"frequency_penalty", frequency_penalty}};
}

CompletionParams CompletionParams::from_json(const json& j, const CompletionParams& base) {
  CompletionParams p = base;
  try {
    if (j.contains("temperature")) p.temperature = j.at("temperature").get<double>();
    if (j.contains("max_tokens")) p.max_tokens = j.at("max_tokens").get<int>();
    if (j.contains("stop")) p.stop = j.at("stop").get<std::vector<std::string>>();
    if (j.contains("top_p")) p.top_p = j.at("top_p").get<double>();
    if (j.contains("frequency_penalty"))
      p.frequency_penalty = j.at("frequency_penalty").get<double>();
  } catch (const json::exception& e) {
    fail(ErrorKind::Validation, std::string("completion params: ") + e.what());
  }
  p.validate();
  return p;
}

std::string apply_stop(std::string completion, const std::vector<std::string>& stop) {
  std::size_t cut = completion.size();
  for (const auto& s : stop) {
    if (s.empty()) continue;
    cut = std::min(cut, completion.find(s));
  }
  completion.resize(cut);
  return completion;
}

// ---------------------------------------------------------------------------

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

CompletionCache::CompletionCache(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in) return;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto corrupt = [&](const std::string& why) {
      fail(ErrorKind::Cache, "cache '" + path_.string() + "' line " + std::to_string(line_no) +
                                 ": " + why);
    };
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.is_object()) corrupt("not a JSON object");
    try {
      const auto key = record.at("key").get<std::string>();
      const auto prompt = record.at("prompt").get<std::string>();
      const auto params = CompletionParams::from_json(record.at("params"), CompletionParams{});
      if (key_for(prompt, params) != key) corrupt("key does not match prompt and params");
      entries_[key] = record.at("completion").get<std::string>();
    } catch (const json::exception& e) {
      corrupt(e.what());
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Cache) throw;
      corrupt(e.what());
    }
  }
}

std::string CompletionCache::key_for(std::string_view prompt, const CompletionParams& params) {
  const json material = {{"prompt", prompt}, {"params", params.to_json()}};
  return text::sha256_hex(material.dump());
}

std::optional<std::string> CompletionCache::lookup(const std::string& key) const {
  std::lock_guard lock(mutex_);
  if (auto it = entries_.find(key); it != entries_.end()) return it->second;
  return std::nullopt;
}

void CompletionCache::store(const std::string& key, const std::string& prompt,
                            const CompletionParams& params, const std::string& completion) {
  std::lock_guard lock(mutex_);
  if (!entries_.emplace(key, completion).second) return;
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  if (!out) fail(ErrorKind::Cache, "cannot append to cache '" + path_.string() + "'");
  const json record = {{"key", key},
                       {"prompt", prompt},
                       {"params", params.to_json()},
                       {"completion", completion},
                       {"timestamp", utc_timestamp()}};
  out << record.dump() << '\n';
}

void CompletionCache::clear() {
  std::lock_guard lock(mutex_);
  entries_.clear();
  std::error_code ec;
  std::filesystem::remove(path_, ec);
}

std::size_t CompletionCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

std::string cached_complete(CompletionProvider& provider, const std::string& prompt,
                            const CompletionParams& params, CompletionCache& cache) {
  const std::string key = CompletionCache::key_for(prompt, params);
  if (auto hit = cache.lookup(key)) return *hit;
  std::string completion = provider.complete(prompt, params);
  cache.store(key, prompt, params, completion);
  return completion;
}

// ---------------------------------------------------------------------------

std::shared_ptr<FixtureProvider> FixtureProvider::from_file(const std::filesystem::path& path,
                                                            bool strict) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open fixture '" + path.string() + "'");
  std::map<std::string, std::string> table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.contains("prompt") || !record.contains("completion"))
      throw ParseError(line_no, "fixture record needs 'prompt' and 'completion'");
    table[record["prompt"].get<std::string>()] = record["completion"].get<std::string>();
  }
  return std::make_shared<FixtureProvider>(std::move(table), strict);
}

std::string FixtureProvider::complete(const std::string& prompt, const CompletionParams& params) {
  auto it = table_.find(prompt);
  if (it == table_.end()) {
    if (strict_) throw ProviderError("fixture has no completion for prompt: " + prompt);
    return {};
  }
  return apply_stop(it->second, params.stop);
}

// ---------------------------------------------------------------------------

HttpCompletionProvider::HttpCompletionProvider(HttpProviderOptions options)
    : options_(std::move(options)) {
  const auto scheme_end = options_.url.find("://");
  if (scheme_end == std::string::npos)
    fail(ErrorKind::Validation, "provider url needs a scheme: '" + options_.url + "'");
  const auto path_start = options_.url.find('/', scheme_end + 3);
  base_ = options_.url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : options_.url.substr(path_start);
}

json HttpCompletionProvider::request_body(const std::string& prompt,
                                          const CompletionParams& params,
                                          const std::string& model) {
  json body = {{"prompt", prompt},
               {"max_tokens", params.max_tokens},
               {"temperature", params.temperature},
               {"top_p", params.top_p},
               {"frequency_penalty", params.frequency_penalty},
               {"stop", params.stop}};
  if (!model.empty()) body["model"] = model;
  return body;
}

std::string HttpCompletionProvider::parse_response(const std::string& body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ProviderError("completion response is not JSON");
  if (auto it = j.find("completion"); it != j.end() && it->is_string())
    return it->get<std::string>();
  if (auto it = j.find("choices"); it != j.end() && it->is_array() && !it->empty()) {
    const auto& first = it->front();
    if (first.contains("text") && first["text"].is_string()) return first["text"].get<std::string>();
  }
  throw ProviderError("completion response has neither 'completion' nor 'choices[0].text'");
}

std::string HttpCompletionProvider::complete(const std::string& prompt,
                                             const CompletionParams& params) {
  httplib::Client client(base_);
  client.set_connection_timeout(options_.timeout);
  client.set_read_timeout(options_.timeout);
  httplib::Headers headers;
  if (!options_.api_key.empty()) headers.emplace("Authorization", "Bearer " + options_.api_key);
  const std::string body = request_body(prompt, params, options_.model).dump();

  auto backoff = options_.initial_backoff;
  std::string last_error;
  for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff = std::chrono::milliseconds(
          static_cast<long long>(static_cast<double>(backoff.count()) * options_.backoff_multiplier));
    }
    auto res = client.Post(path_, headers, body, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200)
      throw ProviderError("completion endpoint returned HTTP " + std::to_string(res->status));
    return apply_stop(parse_response(res->body), params.stop);
  }
  throw ProviderError("completion endpoint " + options_.url + " failed after " +
                      std::to_string(options_.max_retries + 1) + " attempts: " + last_error);
}

}  // namespace stancekit
