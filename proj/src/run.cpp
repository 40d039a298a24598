#include "stancekit/run.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>

#include "stancekit/baselines.hpp"
#include "stancekit/text.hpp"

namespace stancekit {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  if (!obj.is_object() || !obj.contains(key) || obj[key].is_null()) return fallback;
  try {
    return obj[key].get<T>();
  } catch (const json::exception& e) {
    fail(ErrorKind::Validation, std::string("config key '") + key + "': " + e.what());
  }
}

std::vector<std::string> read_lines(const fs::path& path, const char* what) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, std::string("cannot open ") + what + " file '" + path.string() + "'");
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = text::trim(line);
    if (!t.empty()) out.emplace_back(t);
  }
  if (out.empty()) fail(ErrorKind::EmptyDataset, std::string(what) + " file '" + path.string() + "' is empty");
  return out;
}

void write_text(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << body)) fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
}

void write_jsonl(const fs::path& path, const std::vector<json>& rows) {
  std::ostringstream os;
  for (const auto& r : rows) os << r.dump() << '\n';
  write_text(path, os.str());
}

/// Re-labels an error with the stage it came from, keeping its category.
template <typename Fn>
auto in_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const PartialCorpusError&) {
    throw;
  } catch (const Error& e) {
    throw Error(e.kind(), std::string("stage '") + stage + "': " + e.what());
  }
}

Hyperparams hyperparams_from(const json& section, const char* key, std::uint64_t seed) {
  Hyperparams base;
  base.seed = seed;
  return Hyperparams::from_json(section.is_object() && section.contains(key) ? section[key] : json::object(),
                                base);
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

void apply_override(json& config, std::string_view dotted_key, json value) {
  if (dotted_key.empty()) fail(ErrorKind::Usage, "empty override key");
  json* node = &config;
  std::size_t start = 0;
  while (true) {
    const auto dot = dotted_key.find('.', start);
    const std::string part(dotted_key.substr(start, dot == std::string_view::npos ? dotted_key.npos : dot - start));
    if (part.empty()) fail(ErrorKind::Usage, "malformed override key '" + std::string(dotted_key) + "'");
    json* child = nullptr;
    if (node->is_array()) {
      // Numeric parts index into existing arrays ("datasets.0.policy").
      if (part.find_first_not_of("0123456789") != std::string::npos || std::stoul(part) >= node->size())
        fail(ErrorKind::Usage, "override key '" + std::string(dotted_key) + "': no element '" + part + "'");
      child = &(*node)[std::stoul(part)];
    } else {
      if (!node->is_object()) *node = json::object();
      child = &(*node)[part];
    }
    if (dot == std::string_view::npos) {
      *child = std::move(value);
      return;
    }
    node = child;
    start = dot + 1;
  }
}

std::pair<std::string, json> parse_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    fail(ErrorKind::Usage, "override must look like key=value: '" + std::string(assignment) + "'");
  const std::string key(assignment.substr(0, eq));
  const std::string value(assignment.substr(eq + 1));
  json parsed = json::parse(value, nullptr, false);
  return {key, parsed.is_discarded() ? json(value) : parsed};
}

RunConfig RunConfig::load(const fs::path& path,
                          const std::vector<std::pair<std::string, json>>& overrides) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open config '" + path.string() + "'");
  json raw = json::parse(in, nullptr, false);
  if (raw.is_discarded() || !raw.is_object())
    fail(ErrorKind::Validation, "config '" + path.string() + "' is not a JSON object");
  for (const auto& [key, value] : overrides) apply_override(raw, key, value);
  return from_json(std::move(raw), fs::absolute(path).parent_path());
}

RunConfig RunConfig::from_json(json raw, const fs::path& base_dir) {
  RunConfig c;
  c.base_dir = base_dir;
  c.seed = get_or<std::uint64_t>(raw, "seed", 0);
  const auto out = get_or<std::string>(raw, "out", "");
  if (out.empty()) fail(ErrorKind::Usage, "no output directory: set 'out' or pass --out");
  c.out_dir = resolve(base_dir, out);

  if (raw.contains("datasets")) {
    if (!raw["datasets"].is_array()) fail(ErrorKind::Validation, "'datasets' must be an array");
    for (const auto& d : raw["datasets"]) {
      DatasetEntry e;
      e.spec.name = get_or<std::string>(d, "name", "");
      if (e.spec.name.empty()) fail(ErrorKind::Validation, "dataset entry without a name");
      e.path = resolve(base_dir, get_or<std::string>(d, "path", ""));
      if (d.contains("labels")) {
        e.spec.label_set.clear();
        for (const auto& l : d["labels"]) {
          auto parsed = parse_stance_label(l.get<std::string>());
          if (!parsed) fail(ErrorKind::Validation, "dataset '" + e.spec.name + "': unknown label " + l.dump());
          e.spec.label_set.push_back(*parsed);
        }
      }
      const auto form = get_or<std::string>(d, "topic_form", "phrase");
      const auto mode = get_or<std::string>(d, "eval_mode", "three_way");
      auto pf = parse_topic_form(form);
      auto pm = parse_eval_mode(mode);
      if (!pf || !pm) fail(ErrorKind::Validation, "dataset '" + e.spec.name + "': bad topic_form or eval_mode");
      e.spec.topic_form = *pf;
      e.spec.eval_mode = *pm;
      if (d.contains("policy")) {
        e.policy = parse_policy(d["policy"].get<std::string>());
        if (!e.policy) fail(ErrorKind::Validation, "dataset '" + e.spec.name + "': unknown policy");
      }
      e.spec.validate();
      c.datasets.push_back(std::move(e));
    }
  }

  if (raw.contains("weakgen")) {
    const json& w = raw["weakgen"];
    WeakgenSettings s;
    s.texts = resolve(base_dir, get_or<std::string>(w, "texts", ""));
    s.topics = resolve(base_dir, get_or<std::string>(w, "topics", ""));
    s.assembly.target_size = get_or<std::size_t>(w, "target_size", 0);
    s.assembly.neutral_fraction = get_or<double>(w, "neutral_fraction", 1.0 / 3.0);
    s.assembly.seed = get_or<std::uint64_t>(w, "seed", c.seed);
    s.assembly.max_in_flight = get_or<std::size_t>(w, "max_in_flight", 4);
    s.assembly.retry_budget_factor = get_or<std::size_t>(w, "retry_budget_factor", 5);
    s.assembly.mask_topic = CompletionParams::from_json(w.value("mask_topic", json::object()),
                                                        CompletionParams::mask_topic_defaults());
    s.assembly.mask_text = CompletionParams::from_json(w.value("mask_text", json::object()),
                                                       CompletionParams::mask_text_defaults());
    if (!w.contains("provider")) fail(ErrorKind::Validation, "weakgen needs a 'provider'");
    s.provider = PluginSpec::from_json(w["provider"], base_dir);
    if (w.contains("cache") && w["cache"].is_boolean()) {
      if (w["cache"].get<bool>()) s.cache = c.out_dir / "completion_cache.jsonl";
    } else if (w.contains("cache")) {
      s.cache = resolve(base_dir, w["cache"].get<std::string>());
    } else {
      s.cache = c.out_dir / "completion_cache.jsonl";
    }
    c.weakgen = std::move(s);
  }

  if (raw.contains("train")) {
    const json& t = raw["train"];
    TrainSettings s;
    s.classifier = PluginSpec::from_json(t.value("classifier", json("hashed-bow")), base_dir);
    if (t.contains("nli")) s.nli = resolve(base_dir, t["nli"].get<std::string>());
    s.weak_corpus = t.contains("weak_corpus") ? resolve(base_dir, t["weak_corpus"].get<std::string>())
                                              : c.out_dir / "weak_corpus.jsonl";
    s.weak_provenance = t.contains("weak_provenance")
                            ? resolve(base_dir, t["weak_provenance"].get<std::string>())
                            : s.weak_corpus.parent_path() / "weak_provenance.jsonl";
    s.train_fraction = get_or<double>(t, "train_fraction", 0.8);
    const auto seed = get_or<std::uint64_t>(t, "seed", c.seed);
    s.split_seed = seed;
    s.indirect = hyperparams_from(t, "indirect", seed);
    s.weak = hyperparams_from(t, "weak", seed);
    s.skip_indirect = get_or<bool>(t, "skip_indirect", false);
    s.skip_weak = get_or<bool>(t, "skip_weak", false);
    if (auto scheme = get_or<std::string>(t, "scheme_only", ""); !scheme.empty()) {
      s.scheme_only = parse_provenance(scheme);
      if (!s.scheme_only || *s.scheme_only == Provenance::NeutralSynthesis)
        fail(ErrorKind::Usage, "scheme_only must be mask_topic or mask_text, not '" + scheme + "'");
    }
    c.train = std::move(s);
  }

  if (raw.contains("evaluate")) {
    const json& e = raw["evaluate"];
    if (e.contains("checkpoint")) c.checkpoint = resolve(base_dir, e["checkpoint"].get<std::string>());
    if (auto p = get_or<std::string>(e, "policy", ""); !p.empty()) {
      c.eval_policy = parse_policy(p);
      if (!c.eval_policy) fail(ErrorKind::Validation, "unknown evaluation policy '" + p + "'");
    }
  }

  if (raw.contains("baseline")) {
    const json& b = raw["baseline"];
    BaselineSettings s;
    s.which = get_or<std::string>(b, "which", "");
    if (b.contains("scorer")) s.scorer = PluginSpec::from_json(b["scorer"], base_dir);
    if (b.contains("encoder")) s.encoder = PluginSpec::from_json(b["encoder"], base_dir);
    if (b.contains("provider")) s.provider = PluginSpec::from_json(b["provider"], base_dir);
    s.seed = get_or<std::uint64_t>(b, "seed", c.seed);
    c.baseline = std::move(s);
  }

  if (raw.contains("size_study")) {
    const json& s = raw["size_study"];
    c.sizes = get_or<std::vector<std::size_t>>(s, "sizes", {});
    c.size_seeds = get_or<int>(s, "seeds", 3);
    if (c.size_seeds <= 0) fail(ErrorKind::Validation, "size_study.seeds must be positive");
  }

  c.raw = std::move(raw);
  return c;
}

// ---------------------------------------------------------------------------
// Run directory

RunLock::RunLock(fs::path dir) : path_(std::move(dir) / ".lock") {
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    if (errno == EEXIST)
      fail(ErrorKind::Usage, "run directory is in use (lock file '" + path_.string() + "' exists)");
    fail(ErrorKind::Io, "cannot create lock file '" + path_.string() + "'");
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

RunLock::~RunLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

RunManifest::RunManifest(fs::path dir) : dir_(std::move(dir)) {
  std::ifstream in(dir_ / "manifest.json");
  if (in) {
    data_ = json::parse(in, nullptr, false);
    if (data_.is_discarded() || !data_.is_object())
      fail(ErrorKind::Validation, "existing manifest in '" + dir_.string() + "' is unreadable");
  } else {
    data_ = json{{"created", utc_now()}, {"commands", json::array()}, {"stages", json::array()}};
  }
}

std::string RunManifest::file_digest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  const std::string body{std::istreambuf_iterator<char>(in), {}};
  return text::sha256_hex(body);
}

void RunManifest::begin_command(std::string_view command, const RunConfig& config,
                                const std::vector<fs::path>& inputs) {
  json digests = json::object();
  for (const auto& p : inputs)
    if (fs::exists(p)) digests[p.string()] = file_digest(p);
  data_["commands"].push_back({{"command", command},
                               {"started", utc_now()},
                               {"seed", config.seed},
                               {"config", config.raw},
                               {"config_dir", config.base_dir.string()},
                               {"input_digests", digests}});
  flush();
}

void RunManifest::add_stage(json stage) {
  stage["finished"] = utc_now();
  data_["stages"].push_back(std::move(stage));
  flush();
}

void RunManifest::flush() const {
  const auto tmp = dir_ / "manifest.json.tmp";
  write_text(tmp, data_.dump(2) + "\n");
  fs::rename(tmp, dir_ / "manifest.json");
}

// ---------------------------------------------------------------------------
// Evaluation helpers

Policy resolve_policy(const DatasetEntry& dataset, std::optional<Policy> policy_override) {
  // Command-level choice first, then the dataset's own, then its eval mode.
  Policy policy = policy_override.value_or(
      dataset.policy.value_or(dataset.spec.eval_mode == EvalMode::BinaryThreshold
                                  ? Policy::BinaryThreshold
                                  : Policy::ThreeWay));
  const bool binary = dataset.spec.eval_mode == EvalMode::BinaryThreshold;
  if (binary && policy != Policy::BinaryThreshold)
    fail(ErrorKind::Validation, "dataset '" + dataset.spec.name + "' is binary; policy '" +
                                    to_string(policy) + "' would predict neutral");
  if (!binary && policy == Policy::BinaryThreshold)
    fail(ErrorKind::Validation, "dataset '" + dataset.spec.name +
                                    "' is three-way; binary_threshold cannot predict neutral");
  return policy;
}

std::vector<EvalReport> evaluate_datasets(SequencePairClassifier& classifier,
                                          const std::vector<DatasetEntry>& datasets,
                                          std::optional<Policy> policy_override,
                                          const PredictOptions& options) {
  std::vector<Policy> policies;
  for (const auto& d : datasets) policies.push_back(resolve_policy(d, policy_override));
  std::vector<EvalReport> reports;
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    const auto& d = datasets[i];
    const auto examples = load_stance_dataset(d.path, d.spec);
    std::vector<StanceLabel> gold, pred;
    for (const auto& ex : examples) {
      gold.push_back(ex.label);
      switch (policies[i]) {
        case Policy::ThreeWay:
          pred.push_back(predict_three_way(classifier, ex.text, ex.topic, training_template(), options));
          break;
        case Policy::BinaryThreshold:
          pred.push_back(predict_binary_threshold(
              stance_probs(classifier, ex.text, ex.topic, training_template(), options)));
          break;
        case Policy::Vote:
          pred.push_back(predict_vote(classifier, ex.text, ex.topic, canonical_templates(), options));
          break;
      }
    }
    EvalReport r = macro_f1(gold, pred, d.spec.label_set);
    r.dataset = d.spec.name;
    r.policy = to_string(policies[i]);
    reports.push_back(std::move(r));
  }
  return reports;
}

// ---------------------------------------------------------------------------
// Commands

namespace {

void write_reports(const fs::path& dir, const std::string& stem, const std::string& system,
                   const std::vector<EvalReport>& reports) {
  std::vector<json> rows;
  for (const auto& r : reports) rows.push_back(r.to_json());
  rows.push_back({{"system", system}, {"mean_macro_f1", mean_macro_f1(reports)}});
  write_jsonl(dir / (stem + ".jsonl"), rows);
  std::string body = render_combined_table(reports, system) + "\n";
  for (const auto& r : reports) body += r.render_text() + "\n";
  write_text(dir / (stem + ".txt"), body);
}

json reports_summary(const std::vector<EvalReport>& reports) {
  json per = json::object();
  for (const auto& r : reports) per[r.dataset] = r.macro_f1;
  return json{{"macro_f1", per}, {"mean_macro_f1", mean_macro_f1(reports)}};
}

const TrainSettings& require_train(const RunConfig& c) {
  if (!c.train) fail(ErrorKind::Validation, "config has no 'train' section");
  return *c.train;
}

void require_datasets(const RunConfig& c) {
  if (c.datasets.empty()) fail(ErrorKind::Validation, "config lists no test datasets");
}

std::vector<WeakExample> load_training_weak(const TrainSettings& t) {
  auto weak = load_weak_corpus(t.weak_corpus, t.weak_provenance);
  if (t.scheme_only) {
    // Neutral synthesis does not come from either prompt, so it stays.
    std::erase_if(weak, [&](const WeakExample& ex) {
      return ex.provenance != *t.scheme_only && ex.provenance != Provenance::NeutralSynthesis;
    });
  }
  if (weak.size() < 2) fail(ErrorKind::Validation, "weak corpus has fewer than 2 usable examples");
  return weak;
}

std::size_t eval_pair_budget(const RunConfig& c) {
  if (!c.train) return Hyperparams{}.max_pair_length;
  return c.train->skip_weak ? c.train->indirect.max_pair_length : c.train->weak.max_pair_length;
}

PluginSpec classifier_spec(const RunConfig& c) {
  if (c.train) return c.train->classifier;
  PluginSpec spec;
  spec.name = "hashed-bow";
  spec.base_dir = c.base_dir;
  return spec;
}

}  // namespace

json cmd_generate_weak(const RunConfig& c) {
  if (!c.weakgen) fail(ErrorKind::Validation, "config has no 'weakgen' section");
  const auto& w = *c.weakgen;
  RunManifest manifest(c.out_dir);
  manifest.begin_command("generate-weak", c, {w.texts, w.topics});

  const auto texts = read_lines(w.texts, "texts");
  const auto topics = read_lines(w.topics, "topics");
  auto provider = PluginRegistry::global().make_provider(w.provider);
  if (w.cache)
    provider = std::make_shared<CachingProvider>(provider, std::make_shared<CompletionCache>(*w.cache));

  const auto corpus_path = c.out_dir / "weak_corpus.jsonl";
  const auto provenance_path = c.out_dir / "weak_provenance.jsonl";
  json stage = {{"stage", "generate-weak"},
                {"command", "generate-weak"},
                {"seed", w.assembly.seed},
                {"target_size", w.assembly.target_size},
                {"neutral_fraction", w.assembly.neutral_fraction},
                {"params", {{"mask_topic", w.assembly.mask_topic.to_json()},
                            {"mask_text", w.assembly.mask_text.to_json()}}},
                {"outputs", {{"corpus", corpus_path.string()}, {"provenance", provenance_path.string()}}}};
  if (w.cache) stage["outputs"]["cache"] = w.cache->string();

  WeakCorpus corpus;
  try {
    corpus = assemble_weak_corpus(texts, topics, *provider, w.assembly);
  } catch (const PartialCorpusError& e) {
    write_weak_corpus(corpus_path, provenance_path, e.partial().examples);
    stage["status"] = "partial";
    stage["fill"] = e.partial().stats.to_json();
    stage["error"] = e.what();
    manifest.add_stage(std::move(stage));
    throw;
  }
  write_weak_corpus(corpus_path, provenance_path, corpus.examples);
  stage["status"] = "ok";
  stage["fill"] = corpus.stats.to_json();
  stage["corpus_digest"] = RunManifest::file_digest(corpus_path);
  manifest.add_stage(stage);
  return json{{"command", "generate-weak"}, {"examples", corpus.examples.size()}, {"fill", stage["fill"]}};
}

json cmd_train(const RunConfig& c) {
  const auto& t = require_train(c);
  if (t.skip_indirect && t.skip_weak)
    fail(ErrorKind::Usage, "--skip-indirect and --skip-weak together leave nothing to train");
  std::vector<fs::path> inputs{t.weak_corpus, t.weak_provenance};
  if (t.nli) inputs.push_back(*t.nli);
  RunManifest manifest(c.out_dir);
  manifest.begin_command("train", c, inputs);

  auto classifier = PluginRegistry::global().make_classifier(t.classifier);
  Checkpoint final_checkpoint;
  json summary = {{"command", "train"}, {"stages", json::array()}};

  if (!t.skip_indirect) {
    if (!t.nli) fail(ErrorKind::Validation, "train.nli is required unless indirect pretraining is skipped");
    std::size_t n = 0;
    in_stage("pretrain-indirect", [&] {
      const auto nli = load_nli_dataset(*t.nli);
      n = nli.size();
      final_checkpoint = pretrain_indirect(*classifier, nli, t.indirect);
    });
    const auto path = c.out_dir / "checkpoint_indirect.bin";
    final_checkpoint.save(path);
    manifest.add_stage({{"stage", "pretrain-indirect"},
                        {"command", "train"},
                        {"examples", n},
                        {"hyperparams", t.indirect.to_json()},
                        {"checkpoint", path.string()}});
    summary["stages"].push_back("pretrain-indirect");
  }

  if (!t.skip_weak) {
    TrainReport report;
    std::size_t n_train = 0, n_dev = 0;
    in_stage("finetune-weak", [&] {
      const auto weak = load_training_weak(t);
      const auto split = split_train_dev(weak, t.train_fraction, t.split_seed);
      n_train = split.train.size();
      n_dev = split.dev.size();
      if (split.train.empty() || split.dev.empty())
        fail(ErrorKind::Validation, "weak corpus too small for a train/dev split");
      report = finetune_weak(*classifier, split.train, split.dev, t.weak);
    });
    std::vector<json> rows;
    std::ostringstream table;
    table << "epoch  train_loss  dev_macro_f1\n";
    for (const auto& e : report.epochs) {
      rows.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"dev_macro_f1", e.dev_macro_f1},
                      {"selected", e.epoch == report.selected_epoch}});
      char line[96];
      std::snprintf(line, sizeof line, "%5d  %10.4f  %12.4f%s\n", e.epoch, e.train_loss,
                    e.dev_macro_f1, e.epoch == report.selected_epoch ? "  *" : "");
      table << line;
    }
    write_jsonl(c.out_dir / "train_report.jsonl", rows);
    write_text(c.out_dir / "train_report.txt", table.str());
    final_checkpoint = report.selected_checkpoint;
    json stage = {{"stage", "finetune-weak"},
                  {"command", "train"},
                  {"train_examples", n_train},
                  {"dev_examples", n_dev},
                  {"train_fraction", t.train_fraction},
                  {"split_seed", t.split_seed},
                  {"hyperparams", t.weak.to_json()},
                  {"template", training_template().pattern()},
                  {"selected_epoch", report.selected_epoch},
                  {"epochs", report.to_json()["epochs"]}};
    if (t.scheme_only) stage["scheme_only"] = to_string(*t.scheme_only);
    manifest.add_stage(std::move(stage));
    summary["stages"].push_back("finetune-weak");
    summary["selected_epoch"] = report.selected_epoch;
  }

  const auto checkpoint_path = c.out_dir / "checkpoint.bin";
  final_checkpoint.save(checkpoint_path);
  summary["checkpoint"] = checkpoint_path.string();
  return summary;
}

json cmd_evaluate(const RunConfig& c) {
  require_datasets(c);
  for (const auto& d : c.datasets) resolve_policy(d, c.eval_policy);
  const auto checkpoint_path = c.checkpoint.value_or(c.out_dir / "checkpoint.bin");
  std::vector<fs::path> inputs{checkpoint_path};
  for (const auto& d : c.datasets) inputs.push_back(d.path);
  RunManifest manifest(c.out_dir);
  manifest.begin_command("evaluate", c, inputs);

  auto classifier = PluginRegistry::global().make_classifier(classifier_spec(c));
  classifier->restore(Checkpoint::load(checkpoint_path));
  const PredictOptions options{.max_pair_length = eval_pair_budget(c), .tokenizer = nullptr};
  const auto reports = in_stage("evaluate", [&] {
    return evaluate_datasets(*classifier, c.datasets, c.eval_policy, options);
  });
  write_reports(c.out_dir, "eval_report", "model", reports);
  json summary = reports_summary(reports);
  json stage = summary;
  stage["stage"] = "evaluate";
  stage["command"] = "evaluate";
  stage["checkpoint"] = checkpoint_path.string();
  stage["checkpoint_digest"] = RunManifest::file_digest(checkpoint_path);
  manifest.add_stage(std::move(stage));
  summary["command"] = "evaluate";
  return summary;
}

json cmd_baseline(const RunConfig& c) {
  if (!c.baseline || c.baseline->which.empty())
    fail(ErrorKind::Usage, "choose a baseline: random, mlm, completion or cosine");
  const auto& b = *c.baseline;
  if (b.which != "random" && b.which != "mlm" && b.which != "completion" && b.which != "cosine")
    fail(ErrorKind::Usage, "unknown baseline '" + b.which + "' (expected random, mlm, completion or cosine)");
  require_datasets(c);

  auto& registry = PluginRegistry::global();
  std::unique_ptr<MaskedTokenScorer> scorer;
  std::unique_ptr<SentenceEncoder> encoder;
  std::shared_ptr<CompletionProvider> provider;
  if (b.which == "mlm") {
    if (!b.scorer) fail(ErrorKind::Plugin, "the mlm baseline needs baseline.scorer");
    scorer = registry.make_scorer(*b.scorer);
  } else if (b.which == "cosine") {
    if (!b.encoder) fail(ErrorKind::Plugin, "the cosine baseline needs baseline.encoder");
    encoder = registry.make_encoder(*b.encoder);
  } else if (b.which == "completion") {
    if (!b.provider) fail(ErrorKind::Plugin, "the completion baseline needs baseline.provider");
    provider = registry.make_provider(*b.provider);
  }

  std::vector<fs::path> inputs;
  for (const auto& d : c.datasets) inputs.push_back(d.path);
  RunManifest manifest(c.out_dir);
  manifest.begin_command("baseline", c, inputs);

  std::vector<EvalReport> reports;
  in_stage("baseline", [&] {
    for (std::size_t i = 0; i < c.datasets.size(); ++i) {
      const auto& d = c.datasets[i];
      const auto examples = load_stance_dataset(d.path, d.spec);
      const auto& labels = d.spec.label_set;
      std::vector<StanceLabel> gold, pred;
      std::size_t flagged = 0;
      for (const auto& ex : examples) gold.push_back(ex.label);
      if (b.which == "random") {
        pred = random_baseline(examples.size(), labels, b.seed + i);
      } else {
        for (const auto& ex : examples) {
          if (b.which == "mlm") {
            pred.push_back(argmax_within(mlm_label_scores(ex.text, ex.topic, *scorer), labels));
          } else if (b.which == "cosine") {
            pred.push_back(argmax_within(cosine_label_scores(ex.text, ex.topic, *encoder), labels));
          } else {
            auto p = completion_baseline(ex.text, ex.topic, *provider);
            // A label the dataset cannot hold (neutral on a binary set) is
            // scored as the first allowed label and flagged.
            if (!d.spec.allows(p.label)) p = {labels.front(), true};
            flagged += p.flagged ? 1 : 0;
            pred.push_back(p.label);
          }
        }
      }
      EvalReport r = macro_f1(gold, pred, labels);
      r.dataset = d.spec.name;
      r.policy = "baseline:" + b.which;
      r.flagged = flagged;
      reports.push_back(std::move(r));
    }
  });
  write_reports(c.out_dir, "baseline_" + b.which, b.which, reports);
  json summary = reports_summary(reports);
  json stage = summary;
  stage["stage"] = "baseline";
  stage["command"] = "baseline";
  stage["which"] = b.which;
  stage["seed"] = b.seed;
  manifest.add_stage(std::move(stage));
  summary["command"] = "baseline";
  summary["which"] = b.which;
  return summary;
}

json cmd_size_study(const RunConfig& c) {
  const auto& t = require_train(c);
  require_datasets(c);
  if (c.sizes.empty()) fail(ErrorKind::Usage, "size study needs at least one size");
  for (const auto& d : c.datasets) resolve_policy(d, c.eval_policy);
  std::vector<fs::path> inputs{t.weak_corpus, t.weak_provenance};
  if (t.nli) inputs.push_back(*t.nli);
  RunManifest manifest(c.out_dir);
  manifest.begin_command("size-study", c, inputs);

  const auto weak = load_training_weak(t);
  const auto largest = *std::max_element(c.sizes.begin(), c.sizes.end());
  if (largest > weak.size())
    fail(ErrorKind::Validation, "size " + std::to_string(largest) + " exceeds the weak corpus (" +
                                    std::to_string(weak.size()) + " examples)");
  if (!t.skip_indirect && !t.nli)
    fail(ErrorKind::Validation, "train.nli is required unless indirect pretraining is skipped");
  std::vector<NliExample> nli;
  if (!t.skip_indirect) nli = load_nli_dataset(*t.nli);

  const PredictOptions options{.max_pair_length = t.weak.max_pair_length, .tokenizer = nullptr};
  std::vector<std::vector<double>> per_seed(c.sizes.size());
  in_stage("size-study", [&] {
    for (int k = 0; k < c.size_seeds; ++k) {
      const std::uint64_t seed = t.split_seed + static_cast<std::uint64_t>(k);
      auto shuffled = weak;
      Rng(seed).shuffle(shuffled);
      auto classifier = PluginRegistry::global().make_classifier(t.classifier);
      Checkpoint base;
      if (!t.skip_indirect) {
        Hyperparams hp = t.indirect;
        hp.seed = seed;
        base = pretrain_indirect(*classifier, nli, hp);
      } else {
        base = classifier->snapshot();
      }
      for (std::size_t s = 0; s < c.sizes.size(); ++s) {
        classifier->restore(base);
        const std::vector<WeakExample> subset(shuffled.begin(),
                                              shuffled.begin() + static_cast<std::ptrdiff_t>(c.sizes[s]));
        const auto split = split_train_dev(subset, t.train_fraction, seed);
        if (split.train.empty() || split.dev.empty())
          fail(ErrorKind::Validation, "size " + std::to_string(c.sizes[s]) + " is too small to split");
        Hyperparams hp = t.weak;
        hp.seed = seed;
        finetune_weak(*classifier, split.train, split.dev, hp);
        per_seed[s].push_back(mean_macro_f1(evaluate_datasets(*classifier, c.datasets, c.eval_policy, options)));
      }
    }
  });

  std::vector<json> rows;
  std::ostringstream table;
  table << "    size  mean_macro_f1  seeds\n";
  for (std::size_t s = 0; s < c.sizes.size(); ++s) {
    const double mean = std::accumulate(per_seed[s].begin(), per_seed[s].end(), 0.0) /
                        static_cast<double>(per_seed[s].size());
    rows.push_back({{"size", c.sizes[s]}, {"mean_macro_f1", mean}, {"per_seed", per_seed[s]},
                    {"seeds", per_seed[s].size()}});
    char line[96];
    std::snprintf(line, sizeof line, "%8zu  %13.4f  %5zu\n", c.sizes[s], mean, per_seed[s].size());
    table << line;
  }
  write_jsonl(c.out_dir / "size_curve.jsonl", rows);
  write_text(c.out_dir / "size_curve.txt", table.str());
  manifest.add_stage({{"stage", "size-study"}, {"command", "size-study"}, {"rows", rows},
                      {"seeds", c.size_seeds}, {"base_seed", t.split_seed}});
  return json{{"command", "size-study"}, {"rows", rows}};
}

json run_command(std::string_view command, const RunConfig& config) {
  using Handler = json (*)(const RunConfig&);
  static const std::pair<std::string_view, Handler> kCommands[] = {
      {"generate-weak", cmd_generate_weak}, {"train", cmd_train},         {"evaluate", cmd_evaluate},
      {"baseline", cmd_baseline},           {"size-study", cmd_size_study}};
  Handler handler = nullptr;
  for (const auto& [name, h] : kCommands)
    if (name == command) handler = h;
  if (!handler) fail(ErrorKind::Usage, "unknown command '" + std::string(command) + "'");
  std::error_code ec;
  fs::create_directories(config.out_dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create output directory '" + config.out_dir.string() + "'");
  RunLock lock(config.out_dir);
  return handler(config);
}

}  // namespace stancekit
