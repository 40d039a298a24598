#include "stancekit/weakgen.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <thread>
#include <tuple>

#include "stancekit/text.hpp"

namespace stancekit {

using nlohmann::json;

const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::MaskTopic: return "mask_topic";
    case Provenance::MaskText: return "mask_text";
    case Provenance::NeutralSynthesis: return "neutral_synthesis";
  }
  return "?";
}

std::optional<Provenance> parse_provenance(std::string_view s) {
  for (Provenance p : {Provenance::MaskTopic, Provenance::MaskText, Provenance::NeutralSynthesis})
    if (s == to_string(p)) return p;
  return std::nullopt;
}

const char* to_string(RejectReason r) {
  switch (r) {
    case RejectReason::Empty: return "empty";
    case RejectReason::Echo: return "echo";
    case RejectReason::TooShort: return "too_short";
    case RejectReason::Truncated: return "truncated";
    case RejectReason::Duplicate: return "duplicate";
  }
  return "?";
}

StanceExample to_stance_example(const WeakExample& weak) {
  return StanceExample{.text = weak.text,
                       .topic = weak.topic,
                       .label = weak.label,
                       .topic_form = TopicForm::Phrase,
                       .source_id = weak.id};
}

PremiseHypothesisPair to_entailment(const WeakExample& weak, const HypothesisTemplate& tmpl) {
  return to_entailment(to_stance_example(weak), tmpl);
}

// ---------------------------------------------------------------------------
// Prompts

namespace {
void require_stance_bearing(StanceLabel label, const char* who) {
  if (label == StanceLabel::Neutral)
    fail(ErrorKind::Validation, std::string(who) + ": neutral is never prompted");
}
}  // namespace

std::string build_mask_topic_prompt(std::string_view text, StanceLabel label) {
  require_stance_bearing(label, "build_mask_topic_prompt");
  const char* verb = label == StanceLabel::Support ? "supports" : "opposes";
  return "S/he claims " + text::lower_first(text) + ", so s/he " + verb + " the idea of";
}

std::string build_mask_text_prompt(std::string_view topic, StanceLabel label) {
  require_stance_bearing(label, "build_mask_text_prompt");
  const char* noun = label == StanceLabel::Support ? "support" : "opposition";
  return "His/her attitude towards " + std::string(topic) + " is " + noun +
         " because s/he thinks";
}

// ---------------------------------------------------------------------------
// Filters

namespace {

const std::set<std::string, std::less<>>& dangling_words() {
  static const std::set<std::string, std::less<>> words = {
      "a",      "an",      "the",     "of",     "to",      "for",    "in",    "on",
      "at",     "by",      "with",    "from",   "into",    "onto",   "about", "over",
      "under",  "between", "against", "toward", "towards", "through", "than", "as",
      "and",    "or",      "but",     "nor",    "that",    "which",  "who",   "whose",
      "whom",   "their",   "his",     "her",    "its",     "our",    "your",  "my",
      "this",   "these",   "those",   "being",  "having",  "giving", "making", "allowing",
      "letting", "getting", "taking", "putting", "keeping", "providing", "granting"};
  return words;
}

const std::set<std::string, std::less<>>& two_object_gerunds() {
  static const std::set<std::string, std::less<>> words = {
      "giving", "granting", "handing", "offering", "sending",
      "lending", "awarding", "promising", "affording"};
  return words;
}

std::string strip_edge_punct(std::string_view w) {
  while (!w.empty() && std::ispunct(static_cast<unsigned char>(w.back())) && w.back() != '-')
    w.remove_suffix(1);
  while (!w.empty() && std::ispunct(static_cast<unsigned char>(w.front()))) w.remove_prefix(1);
  return text::to_lower(w);
}

bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }
bool ends_with(std::string_view s, std::string_view p) {
  return s.size() >= p.size() && s.substr(s.size() - p.size()) == p;
}

}  // namespace

std::string clean_topic_completion(std::string_view raw) {
  std::string_view s = text::trim(raw);
  static constexpr std::pair<std::string_view, std::string_view> kQuotes[] = {
      {"\"", "\""}, {"'", "'"}, {"“", "”"}, {"‘", "’"}};
  for (auto [open, close] : kQuotes) {
    if (s.size() >= open.size() + close.size() && starts_with(s, open) && ends_with(s, close)) {
      s = text::trim(s.substr(open.size(), s.size() - open.size() - close.size()));
      break;
    }
  }
  return std::string(s);
}

bool looks_truncated(std::string_view candidate, bool is_topic) {
  const std::string_view s = text::trim(candidate);
  if (s.empty()) return false;
  const char last = s.back();
  if (last == '-' || last == ',' || last == ':' || last == ';') return true;
  const auto tokens = text::split_whitespace(s);
  if (dangling_words().count(strip_edge_punct(tokens.back())) != 0) return true;
  return is_topic && tokens.size() == 2 &&
         two_object_gerunds().count(strip_edge_punct(tokens.front())) != 0;
}

std::optional<RejectReason> check_topic_completion(std::string_view topic,
                                                   std::string_view source_text) {
  if (text::trim(topic).empty()) return RejectReason::Empty;
  if (text::iequals(text::trim(topic), text::trim(source_text))) return RejectReason::Echo;
  if (looks_truncated(topic, true)) return RejectReason::Truncated;
  return std::nullopt;
}

std::optional<RejectReason> check_text_completion(std::string_view text_candidate,
                                                  std::string_view topic) {
  const auto t = text::trim(text_candidate);
  if (t.empty()) return RejectReason::Empty;
  if (text::iequals(t, text::trim(topic))) return RejectReason::Echo;
  if (text::split_whitespace(t).size() < kMinTextTokens) return RejectReason::TooShort;
  if (looks_truncated(t, false)) return RejectReason::Truncated;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Single generations

Generation generate_weak_topic(std::string_view text, StanceLabel label,
                               CompletionProvider& provider, const CompletionParams& params) {
  Generation g;
  g.prompt = build_mask_topic_prompt(text, label);
  g.raw_completion = provider.complete(g.prompt, params);
  std::string topic = clean_topic_completion(g.raw_completion);
  if (auto reject = check_topic_completion(topic, text)) {
    g.rejection = reject;
    return g;
  }
  g.example = WeakExample{.id = {},
                          .text = std::string(text),
                          .topic = std::move(topic),
                          .label = label,
                          .provenance = Provenance::MaskTopic,
                          .raw_completion = g.raw_completion,
                          .prompt_used = g.prompt};
  return g;
}

Generation generate_weak_text(std::string_view topic, StanceLabel label,
                              CompletionProvider& provider, const CompletionParams& params) {
  Generation g;
  g.prompt = build_mask_text_prompt(topic, label);
  g.raw_completion = provider.complete(g.prompt, params);
  std::string body(text::trim(g.raw_completion));
  if (auto reject = check_text_completion(body, topic)) {
    g.rejection = reject;
    return g;
  }
  g.example = WeakExample{.id = {},
                          .text = std::move(body),
                          .topic = std::string(topic),
                          .label = label,
                          .provenance = Provenance::MaskText,
                          .raw_completion = g.raw_completion,
                          .prompt_used = g.prompt};
  return g;
}

// ---------------------------------------------------------------------------
// Neutral synthesis

namespace {

bool is_assigned(const TopicAssignments& assigned, const std::string& text,
                 const std::string& topic) {
  auto it = assigned.find(text);
  return it != assigned.end() && it->second.count(topic) != 0;
}

WeakExample make_neutral(const std::string& text, const std::string& topic) {
  return WeakExample{.id = {},
                     .text = text,
                     .topic = topic,
                     .label = StanceLabel::Neutral,
                     .provenance = Provenance::NeutralSynthesis,
                     .raw_completion = {},
                     .prompt_used = {}};
}

}  // namespace

WeakExample synthesize_neutral(const std::vector<std::string>& texts,
                               const std::vector<std::string>& topics,
                               const TopicAssignments& assigned, Rng& rng) {
  if (topics.size() < 2) fail(ErrorKind::Validation, "synthesize_neutral: need at least 2 topics");
  if (texts.empty()) fail(ErrorKind::Validation, "synthesize_neutral: no texts");

  // Rejection sampling over the full grid is uniform over valid pairs; fall
  // back to exact enumeration when most of the grid is taken.
  constexpr int kRejectionTries = 64;
  for (int i = 0; i < kRejectionTries; ++i) {
    const auto& text = texts[rng.index(texts.size())];
    const auto& topic = topics[rng.index(topics.size())];
    if (!is_assigned(assigned, text, topic)) return make_neutral(text, topic);
  }
  std::size_t valid = 0;
  for (const auto& text : texts)
    for (const auto& topic : topics) valid += is_assigned(assigned, text, topic) ? 0 : 1;
  if (valid == 0)
    fail(ErrorKind::Validation, "synthesize_neutral: every (text, topic) pair is assigned");
  std::size_t pick = rng.index(valid);
  for (const auto& text : texts)
    for (const auto& topic : topics) {
      if (is_assigned(assigned, text, topic)) continue;
      if (pick-- == 0) return make_neutral(text, topic);
    }
  fail(ErrorKind::Internal, "synthesize_neutral: enumeration overran");
}

// ---------------------------------------------------------------------------
// Corpus assembly

json AssemblyStats::to_json() const {
  const auto fill = [](const SchemeFill& f) {
    return json{{"quota", f.quota}, {"filled", f.filled}};
  };
  json rejected = json::object();
  for (RejectReason r : kAllRejectReasons) {
    auto it = rejections.find(r);
    rejected[to_string(r)] = it == rejections.end() ? 0 : it->second;
  }
  return json{{"mask_topic", fill(mask_topic)},
              {"mask_text", fill(mask_text)},
              {"neutral_synthesis", fill(neutral)},
              {"provider_calls", provider_calls},
              {"call_budget", call_budget},
              {"rejections", rejected}};
}

namespace {

/// Runs fn(0..n-1) on up to `width` threads. The exception from the lowest
/// failing index is rethrown after every task has finished.
void run_bounded(std::size_t n, std::size_t width, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  const auto guarded = [&](std::size_t i) {
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  width = std::max<std::size_t>(1, std::min(width, n));
  if (width == 1) {
    for (std::size_t i = 0; i < n; ++i) guarded(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> workers;
    workers.reserve(width);
    for (std::size_t w = 0; w < width; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) guarded(i);
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct Slot {
  Provenance scheme;
  StanceLabel label;
  std::optional<WeakExample> filled;
};

struct Job {
  std::size_t slot;
  std::string source;
  Generation result;
};

using Triple = std::tuple<std::string, std::string, StanceLabel>;

}  // namespace

WeakCorpus assemble_weak_corpus(const std::vector<std::string>& texts,
                                const std::vector<std::string>& topics,
                                CompletionProvider& provider, const AssemblyConfig& config) {
  if (config.target_size < 3) fail(ErrorKind::Validation, "target_size must be at least 3");
  if (texts.empty() || topics.empty())
    fail(ErrorKind::Validation, "weak corpus assembly needs texts and topics");
  if (!(config.neutral_fraction >= 0.0 && config.neutral_fraction <= 1.0))
    fail(ErrorKind::Validation, "neutral_fraction must lie in [0, 1]");
  config.mask_topic.validate();
  config.mask_text.validate();

  const std::size_t n = config.target_size;
  const auto n_neutral = static_cast<std::size_t>(
      std::llround(config.neutral_fraction * static_cast<double>(n)));
  const std::size_t n_stance = n - n_neutral;
  const std::size_t n_text = n_stance / 2;
  const std::size_t n_topic = n_stance - n_text;
  if (n_neutral > 0 && topics.size() < 2)
    fail(ErrorKind::Validation, "neutral synthesis needs at least 2 topics");

  WeakCorpus corpus;
  corpus.target_size = n;
  corpus.seed = config.seed;
  AssemblyStats& stats = corpus.stats;
  stats.mask_topic.quota = n_topic;
  stats.mask_text.quota = n_text;
  stats.neutral.quota = n_neutral;
  stats.call_budget = config.retry_budget_factor * n;

  std::vector<Slot> slots;
  slots.reserve(n_stance);
  for (std::size_t i = 0; i < n_topic; ++i)
    slots.push_back({Provenance::MaskTopic, i % 2 == 0 ? StanceLabel::Support : StanceLabel::Oppose, {}});
  for (std::size_t i = 0; i < n_text; ++i)
    slots.push_back({Provenance::MaskText, i % 2 == 0 ? StanceLabel::Support : StanceLabel::Oppose, {}});

  Rng rng(config.seed);
  std::set<Triple> seen;
  std::vector<std::size_t> pending(slots.size());
  for (std::size_t i = 0; i < pending.size(); ++i) pending[i] = i;

  while (!pending.empty() && stats.provider_calls < stats.call_budget) {
    std::vector<Job> jobs;
    for (std::size_t slot : pending) {
      if (stats.provider_calls + jobs.size() >= stats.call_budget) break;
      const auto& pool = slots[slot].scheme == Provenance::MaskTopic ? texts : topics;
      jobs.push_back({slot, pool[rng.index(pool.size())], {}});
    }
    stats.provider_calls += jobs.size();
    run_bounded(jobs.size(), config.max_in_flight, [&](std::size_t j) {
      Job& job = jobs[j];
      const Slot& slot = slots[job.slot];
      job.result = slot.scheme == Provenance::MaskTopic
                       ? generate_weak_topic(job.source, slot.label, provider, config.mask_topic)
                       : generate_weak_text(job.source, slot.label, provider, config.mask_text);
    });

    std::vector<std::size_t> still_pending;
    for (Job& job : jobs) {
      if (job.result.rejection) {
        ++stats.rejections[*job.result.rejection];
        still_pending.push_back(job.slot);
        continue;
      }
      WeakExample& ex = *job.result.example;
      if (!seen.emplace(ex.text, ex.topic, ex.label).second) {
        ++stats.rejections[RejectReason::Duplicate];
        still_pending.push_back(job.slot);
        continue;
      }
      slots[job.slot].filled = std::move(ex);
    }
    // Slots beyond the budget cut in this round were never attempted.
    for (std::size_t k = jobs.size(); k < pending.size(); ++k) still_pending.push_back(pending[k]);
    std::sort(still_pending.begin(), still_pending.end());
    pending = std::move(still_pending);
  }

  TopicAssignments assigned;
  for (const Slot& slot : slots) {
    if (!slot.filled) continue;
    assigned[slot.filled->text].insert(slot.filled->topic);
    corpus.examples.push_back(*slot.filled);
    ++(slot.scheme == Provenance::MaskTopic ? stats.mask_topic : stats.mask_text).filled;
  }

  std::string neutral_failure;
  for (std::size_t i = 0; i < n_neutral; ++i) {
    try {
      WeakExample ex = synthesize_neutral(texts, topics, assigned, rng);
      assigned[ex.text].insert(ex.topic);
      corpus.examples.push_back(std::move(ex));
      ++stats.neutral.filled;
    } catch (const Error& e) {
      neutral_failure = e.what();
      break;
    }
  }

  for (std::size_t i = 0; i < corpus.examples.size(); ++i)
    corpus.examples[i].id = "weak:" + std::to_string(i);

  if (corpus.examples.size() != n) {
    std::string what = "weak corpus incomplete: mask_topic " + std::to_string(stats.mask_topic.filled) +
                       "/" + std::to_string(n_topic) + ", mask_text " +
                       std::to_string(stats.mask_text.filled) + "/" + std::to_string(n_text) +
                       ", neutral " + std::to_string(stats.neutral.filled) + "/" +
                       std::to_string(n_neutral) + " after " +
                       std::to_string(stats.provider_calls) + " provider calls";
    if (!neutral_failure.empty()) what += " (" + neutral_failure + ")";
    throw PartialCorpusError(what, std::move(corpus));
  }
  return corpus;
}

// ---------------------------------------------------------------------------
// Persistence

void write_weak_corpus(const std::filesystem::path& corpus_path,
                       const std::filesystem::path& provenance_path,
                       const std::vector<WeakExample>& examples) {
  std::vector<StanceExample> records;
  records.reserve(examples.size());
  for (const auto& ex : examples) records.push_back(to_stance_example(ex));
  write_stance_dataset(corpus_path, records);

  std::ofstream side(provenance_path, std::ios::binary | std::ios::trunc);
  if (!side) fail(ErrorKind::Io, "cannot write '" + provenance_path.string() + "'");
  for (const auto& ex : examples) {
    side << json{{"id", ex.id},
                 {"provenance", to_string(ex.provenance)},
                 {"raw_completion", ex.raw_completion},
                 {"prompt", ex.prompt_used}}
                .dump()
         << '\n';
  }
}

std::vector<WeakExample> load_weak_corpus(const std::filesystem::path& corpus_path,
                                          const std::filesystem::path& provenance_path) {
  DatasetSpec spec;
  spec.name = "weak";
  const auto records = load_stance_dataset(corpus_path, spec);

  std::ifstream side(provenance_path);
  if (!side) fail(ErrorKind::Io, "cannot open provenance sidecar '" + provenance_path.string() + "'");
  std::map<std::string, json> by_id;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(side, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.contains("id") || !record.contains("provenance"))
      throw ParseError(line_no, "provenance record needs 'id' and 'provenance'");
    auto id = record["id"].get<std::string>();
    by_id[std::move(id)] = std::move(record);
  }

  std::vector<WeakExample> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    auto it = by_id.find(r.source_id);
    if (it == by_id.end())
      fail(ErrorKind::Validation, "weak example '" + r.source_id + "' has no provenance record");
    const auto provenance = parse_provenance(it->second["provenance"].get<std::string>());
    if (!provenance)
      fail(ErrorKind::Validation, "weak example '" + r.source_id + "' has unknown provenance");
    out.push_back(WeakExample{.id = r.source_id,
                              .text = r.text,
                              .topic = r.topic,
                              .label = r.label,
                              .provenance = *provenance,
                              .raw_completion = it->second.value("raw_completion", ""),
                              .prompt_used = it->second.value("prompt", "")});
  }
  return out;
}

}  // namespace stancekit
