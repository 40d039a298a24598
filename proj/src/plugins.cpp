#include "stancekit/plugins.hpp"

#include <cstdlib>
#include <fstream>

#include "stancekit/error.hpp"
#include "stancekit/hashed_bow.hpp"
#include "stancekit/text.hpp"

namespace stancekit {

using nlohmann::json;

std::filesystem::path PluginSpec::resolve(const std::string& key) const {
  if (!options.contains(key) || !options[key].is_string())
    fail(ErrorKind::Validation, "plugin '" + name + "' needs a string option '" + key + "'");
  std::filesystem::path p = options[key].get<std::string>();
  return p.is_absolute() ? p : base_dir / p;
}

PluginSpec PluginSpec::from_json(const json& j, const std::filesystem::path& base_dir) {
  PluginSpec spec;
  spec.base_dir = base_dir;
  if (j.is_string()) {
    spec.name = j.get<std::string>();
    return spec;
  }
  if (!j.is_object() || !j.contains("name") || !j["name"].is_string())
    fail(ErrorKind::Validation, "plugin block needs a 'name'");
  spec.name = j["name"].get<std::string>();
  spec.options = j;
  return spec;
}

namespace {

template <typename Map>
auto find_factory(const Map& map, const std::string& kind, const PluginSpec& spec) {
  auto it = map.find(spec.name);
  if (it == map.end()) fail(ErrorKind::Plugin, "no " + kind + " plugin named '" + spec.name + "'");
  return it->second;
}

void register_builtins(PluginRegistry& r) {
  r.register_classifier("hashed-bow", [](const PluginSpec& spec) {
    return std::make_unique<HashedBowClassifier>(spec.options.value("hash_bits", 16u));
  });
  r.register_provider("fixture", [](const PluginSpec& spec) -> std::shared_ptr<CompletionProvider> {
    return FixtureProvider::from_file(spec.resolve("path"), spec.options.value("strict", false));
  });
  r.register_provider("http", [](const PluginSpec& spec) -> std::shared_ptr<CompletionProvider> {
    HttpProviderOptions o;
    o.url = spec.options.value("url", "");
    if (o.url.empty()) fail(ErrorKind::Validation, "http provider needs 'url'");
    o.model = spec.options.value("model", "");
    if (auto env = spec.options.value("api_key_env", ""); !env.empty()) {
      if (const char* key = std::getenv(env.c_str())) o.api_key = key;
    }
    o.max_retries = spec.options.value("max_retries", 3);
    o.initial_backoff = std::chrono::milliseconds(spec.options.value("initial_backoff_ms", 500));
    o.timeout = std::chrono::seconds(spec.options.value("timeout_s", 60));
    return std::make_shared<HttpCompletionProvider>(std::move(o));
  });
  r.register_scorer("fixture", [](const PluginSpec& spec) -> std::unique_ptr<MaskedTokenScorer> {
    return FixtureScorer::from_file(spec.resolve("path"));
  });
  r.register_encoder("hashed-bow", [](const PluginSpec& spec) -> std::unique_ptr<SentenceEncoder> {
    return std::make_unique<HashedBowEncoder>(spec.options.value("dim", std::size_t{256}));
  });
}

}  // namespace

PluginRegistry& PluginRegistry::global() {
  static PluginRegistry* registry = [] {
    auto* r = new PluginRegistry;
    register_builtins(*r);
    return r;
  }();
  return *registry;
}

void PluginRegistry::register_classifier(const std::string& name, ClassifierFactory f) {
  std::lock_guard lock(mutex_);
  classifiers_[name] = std::move(f);
}
void PluginRegistry::register_provider(const std::string& name, ProviderFactory f) {
  std::lock_guard lock(mutex_);
  providers_[name] = std::move(f);
}
void PluginRegistry::register_scorer(const std::string& name, ScorerFactory f) {
  std::lock_guard lock(mutex_);
  scorers_[name] = std::move(f);
}
void PluginRegistry::register_encoder(const std::string& name, EncoderFactory f) {
  std::lock_guard lock(mutex_);
  encoders_[name] = std::move(f);
}

std::unique_ptr<SequencePairClassifier> PluginRegistry::make_classifier(const PluginSpec& spec) const {
  std::unique_lock lock(mutex_);
  auto f = find_factory(classifiers_, "classifier", spec);
  lock.unlock();
  return f(spec);
}
std::shared_ptr<CompletionProvider> PluginRegistry::make_provider(const PluginSpec& spec) const {
  std::unique_lock lock(mutex_);
  auto f = find_factory(providers_, "provider", spec);
  lock.unlock();
  return f(spec);
}
std::unique_ptr<MaskedTokenScorer> PluginRegistry::make_scorer(const PluginSpec& spec) const {
  std::unique_lock lock(mutex_);
  auto f = find_factory(scorers_, "scorer", spec);
  lock.unlock();
  return f(spec);
}
std::unique_ptr<SentenceEncoder> PluginRegistry::make_encoder(const PluginSpec& spec) const {
  std::unique_lock lock(mutex_);
  auto f = find_factory(encoders_, "encoder", spec);
  lock.unlock();
  return f(spec);
}

std::vector<std::string> PluginRegistry::names(const std::string& kind) const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  const auto collect = [&](const auto& map) {
    for (const auto& [name, _] : map) out.push_back(name);
  };
  if (kind == "classifier") collect(classifiers_);
  else if (kind == "provider") collect(providers_);
  else if (kind == "scorer") collect(scorers_);
  else if (kind == "encoder") collect(encoders_);
  return out;
}

// ---------------------------------------------------------------------------

std::unique_ptr<FixtureScorer> FixtureScorer::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open scorer fixture '" + path.string() + "'");
  std::map<std::string, std::vector<double>> table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.contains("probe") || !record.contains("scores"))
      throw ParseError(line_no, "scorer fixture record needs 'probe' and 'scores'");
    table[record["probe"].get<std::string>()] = record["scores"].get<std::vector<double>>();
  }
  return std::make_unique<FixtureScorer>(std::move(table));
}

std::vector<double> FixtureScorer::score_tokens(const std::string& text_with_mask,
                                                std::span<const std::string> candidates) {
  auto it = table_.find(text_with_mask);
  if (it == table_.end()) fail(ErrorKind::Plugin, "scorer fixture has no entry for: " + text_with_mask);
  if (it->second.size() != candidates.size())
    fail(ErrorKind::Plugin, "scorer fixture entry has the wrong number of scores");
  return it->second;
}

}  // namespace stancekit
