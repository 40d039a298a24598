#include "stancekit/stancekit.h"

#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stancekit/baselines.hpp"
#include "stancekit/corpus.hpp"
#include "stancekit/error.hpp"
#include "stancekit/inference.hpp"
#include "stancekit/reformulate.hpp"
#include "stancekit/run.hpp"
#include "stancekit/weakgen.hpp"

using nlohmann::json;
namespace sk = stancekit;

struct sk_command {
  std::string name;
  std::optional<std::string> config_path;
  std::vector<std::pair<std::string, json>> overrides;
  std::string summary;
  bool has_summary = false;
};

struct sk_dataset {
  std::vector<sk::StanceExample> examples;
};

namespace {

thread_local std::string g_last_error;

int status_of(sk::ErrorKind kind) {
  switch (kind) {
    case sk::ErrorKind::Usage: return SK_ERR_USAGE;
    case sk::ErrorKind::Validation: return SK_ERR_VALIDATION;
    case sk::ErrorKind::Parse: return SK_ERR_PARSE;
    case sk::ErrorKind::EmptyDataset: return SK_ERR_EMPTY_DATASET;
    case sk::ErrorKind::Provider: return SK_ERR_PROVIDER;
    case sk::ErrorKind::Cache: return SK_ERR_CACHE;
    case sk::ErrorKind::Training: return SK_ERR_TRAINING;
    case sk::ErrorKind::PartialCorpus: return SK_ERR_PARTIAL_CORPUS;
    case sk::ErrorKind::Encoding: return SK_ERR_ENCODING;
    case sk::ErrorKind::Plugin: return SK_ERR_PLUGIN;
    case sk::ErrorKind::Io: return SK_ERR_IO;
    case sk::ErrorKind::Internal: return SK_ERR_INTERNAL;
  }
  return SK_ERR_INTERNAL;
}

int set_error(int status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

template <typename F>
int guarded(F&& f) noexcept {
  try {
    g_last_error.clear();
    f();
    return SK_OK;
  } catch (const sk::Error& e) {
    return set_error(status_of(e.kind()), e.what());
  } catch (const json::exception& e) {
    return set_error(SK_ERR_VALIDATION, e.what());
  } catch (const std::bad_alloc&) {
    return set_error(SK_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(SK_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(SK_ERR_INTERNAL, "unknown failure");
  }
}

void require(bool ok, const char* what) {
  if (!ok) sk::fail(sk::ErrorKind::Usage, what);
}

sk::StanceLabel label_of(int v) {
  if (v < SK_SUPPORT || v > SK_NEUTRAL) sk::fail(sk::ErrorKind::Validation, "label code out of range");
  return static_cast<sk::StanceLabel>(v);
}

std::vector<sk::StanceLabel> labels_of(const int* v, std::size_t n) {
  std::vector<sk::StanceLabel> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(label_of(v[i]));
  return out;
}

void copy_out(const std::string& s, char* buf, size_t cap, size_t* needed) {
  if (needed) *needed = s.size() + 1;
  require(buf != nullptr && cap > s.size(), "output buffer too small");
  std::memcpy(buf, s.c_str(), s.size() + 1);
}

}  // namespace

extern "C" {

int sk_exit_class(int status) {
  switch (status) {
    case SK_OK: return 0;
    case SK_ERR_USAGE:
    case SK_ERR_VALIDATION:
    case SK_ERR_PARSE:
    case SK_ERR_EMPTY_DATASET:
    case SK_ERR_PLUGIN:
    case SK_ERR_IO: return 2;
    case SK_ERR_PROVIDER: return 3;
    default: return 4;
  }
}

const char* sk_last_error(void) { return g_last_error.c_str(); }

const char* sk_status_name(int status) {
  if (status == SK_OK) return "ok";
  if (status < SK_ERR_USAGE || status > SK_ERR_INTERNAL) return "unknown";
  return sk::to_string(static_cast<sk::ErrorKind>(status - 1));
}

const char* sk_version(void) { return "0.1.0"; }

int sk_command_create(const char* name, sk_command** out) {
  return guarded([&] {
    require(name && out, "sk_command_create: null argument");
    static const char* kNames[] = {"generate-weak", "train", "evaluate", "baseline", "size-study"};
    bool known = false;
    for (const char* n : kNames) known = known || std::strcmp(n, name) == 0;
    if (!known) sk::fail(sk::ErrorKind::Usage, std::string("unknown command '") + name + "'");
    auto* cmd = new sk_command;
    cmd->name = name;
    *out = cmd;
  });
}

void sk_command_destroy(sk_command* cmd) { delete cmd; }

int sk_command_set_config(sk_command* cmd, const char* path) {
  return guarded([&] {
    require(cmd && path, "sk_command_set_config: null argument");
    cmd->config_path = path;
  });
}

int sk_command_set_out(sk_command* cmd, const char* dir) {
  return guarded([&] {
    require(cmd && dir, "sk_command_set_out: null argument");
    cmd->overrides.emplace_back("out", std::filesystem::absolute(dir).string());
  });
}

int sk_command_set_seed(sk_command* cmd, uint64_t seed) {
  return guarded([&] {
    require(cmd, "sk_command_set_seed: null handle");
    cmd->overrides.emplace_back("seed", seed);
  });
}

int sk_command_set(sk_command* cmd, const char* assignment) {
  return guarded([&] {
    require(cmd && assignment, "sk_command_set: null argument");
    cmd->overrides.push_back(sk::parse_override(assignment));
  });
}

int sk_command_run(sk_command* cmd) {
  return guarded([&] {
    require(cmd, "sk_command_run: null handle");
    if (!cmd->config_path) sk::fail(sk::ErrorKind::Usage, "no config file given");
    cmd->has_summary = false;
    const auto config = sk::RunConfig::load(*cmd->config_path, cmd->overrides);
    cmd->summary = sk::run_command(cmd->name, config).dump();
    cmd->has_summary = true;
  });
}

const char* sk_command_summary(const sk_command* cmd) {
  return cmd && cmd->has_summary ? cmd->summary.c_str() : nullptr;
}

int sk_dataset_load(const char* path, const char* spec_json, sk_dataset** out) {
  return guarded([&] {
    require(path && out, "sk_dataset_load: null argument");
    sk::DatasetSpec spec;
    spec.name = std::filesystem::path(path).stem().string();
    if (spec_json) {
      // Reuse the config parser so the C API accepts the same dataset blocks.
      json block = json::parse(spec_json);
      if (!block.contains("name")) block["name"] = spec.name;
      block["path"] = path;
      const auto cfg = sk::RunConfig::from_json(json{{"out", "."}, {"datasets", json::array({block})}},
                                                std::filesystem::current_path());
      spec = cfg.datasets.front().spec;
    }
    auto ds = std::make_unique<sk_dataset>();
    ds->examples = sk::load_stance_dataset(path, spec);
    *out = ds.release();
  });
}

void sk_dataset_destroy(sk_dataset* ds) { delete ds; }

size_t sk_dataset_size(const sk_dataset* ds) { return ds ? ds->examples.size() : 0; }

int sk_dataset_get(const sk_dataset* ds, size_t index, const char** text, const char** topic, int* label,
                   const char** source_id) {
  return guarded([&] {
    require(ds, "sk_dataset_get: null handle");
    if (index >= ds->examples.size()) sk::fail(sk::ErrorKind::Usage, "sk_dataset_get: index out of range");
    const auto& ex = ds->examples[index];
    if (text) *text = ex.text.c_str();
    if (topic) *topic = ex.topic.c_str();
    if (label) *label = static_cast<int>(ex.label);
    if (source_id) *source_id = ex.source_id.c_str();
  });
}

int sk_mask_topic_prompt(const char* text, int label, char* buf, size_t cap, size_t* needed) {
  return guarded([&] {
    require(text, "sk_mask_topic_prompt: null text");
    copy_out(sk::build_mask_topic_prompt(text, label_of(label)), buf, cap, needed);
  });
}

int sk_mask_text_prompt(const char* topic, int label, char* buf, size_t cap, size_t* needed) {
  return guarded([&] {
    require(topic, "sk_mask_text_prompt: null topic");
    copy_out(sk::build_mask_text_prompt(topic, label_of(label)), buf, cap, needed);
  });
}

int sk_training_hypothesis(const char* topic, char* buf, size_t cap, size_t* needed) {
  return guarded([&] {
    require(topic, "sk_training_hypothesis: null topic");
    copy_out(sk::hypothesis_text(topic, sk::training_template()), buf, cap, needed);
  });
}

int sk_macro_f1(const int* gold, const int* pred, size_t n, const int* labels, size_t n_labels, double* out) {
  return guarded([&] {
    require((gold && pred) || n == 0, "sk_macro_f1: null arrays");
    require(labels && out, "sk_macro_f1: null argument");
    const auto g = labels_of(gold, n);
    const auto p = labels_of(pred, n);
    const auto l = labels_of(labels, n_labels);
    *out = sk::macro_f1(g, p, l).macro_f1;
  });
}

int sk_predict_binary_threshold(double p_support, double p_oppose, double p_neutral, int* out) {
  return guarded([&] {
    require(out, "sk_predict_binary_threshold: null output");
    const sk::ProbTriple probs{.support = p_support, .oppose = p_oppose, .neutral = p_neutral};
    *out = static_cast<int>(sk::predict_binary_threshold(probs));
  });
}

int sk_random_baseline(size_t n, const int* labels, size_t n_labels, uint64_t seed, int* out) {
  return guarded([&] {
    require(labels && out, "sk_random_baseline: null argument");
    const auto l = labels_of(labels, n_labels);
    const auto pred = sk::random_baseline(n, l, seed);
    for (std::size_t i = 0; i < pred.size(); ++i) out[i] = static_cast<int>(pred[i]);
  });
}

}  // extern "C"
