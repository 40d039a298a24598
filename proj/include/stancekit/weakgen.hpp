#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "stancekit/completion.hpp"
#include "stancekit/corpus.hpp"
#include "stancekit/reformulate.hpp"
#include "stancekit/rng.hpp"

namespace stancekit {

enum class Provenance { MaskTopic, MaskText, NeutralSynthesis };

const char* to_string(Provenance p);
std::optional<Provenance> parse_provenance(std::string_view s);

struct WeakExample {
  std::string id;
  std::string text;
  std::string topic;
  StanceLabel label = StanceLabel::Neutral;
  Provenance provenance = Provenance::NeutralSynthesis;
  std::string raw_completion;
  std::string prompt_used;

  friend bool operator==(const WeakExample&, const WeakExample&) = default;
};

StanceExample to_stance_example(const WeakExample& weak);
PremiseHypothesisPair to_entailment(const WeakExample& weak, const HypothesisTemplate& tmpl);

/// "S/he claims <text>, so s/he supports|opposes the idea of". Neutral is rejected.
std::string build_mask_topic_prompt(std::string_view text, StanceLabel label);

/// "His/her attitude towards <topic> is support|opposition because s/he thinks".
std::string build_mask_text_prompt(std::string_view topic, StanceLabel label);

enum class RejectReason { Empty, Echo, TooShort, Truncated, Duplicate };
inline constexpr RejectReason kAllRejectReasons[] = {RejectReason::Empty, RejectReason::Echo,
                                                     RejectReason::TooShort,
                                                     RejectReason::Truncated,
                                                     RejectReason::Duplicate};
const char* to_string(RejectReason r);

/// Minimum whitespace-token count for a MASK-Text completion.
inline constexpr std::size_t kMinTextTokens = 3;

/// Whitespace and one layer of surrounding quotes removed.
std::string clean_topic_completion(std::string_view raw);

/// Heuristic for generations cut off mid-phrase: a final function word or
/// complement-taking gerund, a trailing hyphen, or (for topics) a
/// two-object gerund followed by only one word ("giving 16-year-olds").
bool looks_truncated(std::string_view candidate, bool is_topic);

std::optional<RejectReason> check_topic_completion(std::string_view topic,
                                                   std::string_view source_text);
std::optional<RejectReason> check_text_completion(std::string_view text, std::string_view topic);

/// Result of one generation attempt. Exactly one of example/rejection is set.
struct Generation {
  std::optional<WeakExample> example;
  std::optional<RejectReason> rejection;
  std::string prompt;
  std::string raw_completion;
};

Generation generate_weak_topic(std::string_view text, StanceLabel label,
                               CompletionProvider& provider, const CompletionParams& params);
Generation generate_weak_text(std::string_view topic, StanceLabel label,
                              CompletionProvider& provider, const CompletionParams& params);

using TopicAssignments = std::map<std::string, std::set<std::string>, std::less<>>;

/// Draws (text, topic) uniformly among pairs with topic not in assigned[text].
WeakExample synthesize_neutral(const std::vector<std::string>& texts,
                               const std::vector<std::string>& topics,
                               const TopicAssignments& assigned, Rng& rng);

struct AssemblyConfig {
  std::size_t target_size = 0;
  double neutral_fraction = 1.0 / 3.0;
  CompletionParams mask_topic = CompletionParams::mask_topic_defaults();
  CompletionParams mask_text = CompletionParams::mask_text_defaults();
  std::uint64_t seed = 0;
  std::size_t max_in_flight = 4;
  /// Provider-call budget as a multiple of target_size.
  std::size_t retry_budget_factor = 5;
};

struct SchemeFill {
  std::size_t quota = 0;
  std::size_t filled = 0;
};

struct AssemblyStats {
  SchemeFill mask_topic;
  SchemeFill mask_text;
  SchemeFill neutral;
  std::size_t provider_calls = 0;
  std::size_t call_budget = 0;
  std::map<RejectReason, std::size_t> rejections;

  nlohmann::json to_json() const;
};

struct WeakCorpus {
  std::vector<WeakExample> examples;
  std::size_t target_size = 0;
  std::uint64_t seed = 0;
  AssemblyStats stats;
};

class PartialCorpusError : public Error {
 public:
  PartialCorpusError(const std::string& what, WeakCorpus partial)
      : Error(ErrorKind::PartialCorpus, what), partial_(std::move(partial)) {}
  const WeakCorpus& partial() const noexcept { return partial_; }

 private:
  WeakCorpus partial_;
};

/// Fills neutral, MASK-Topic and MASK-Text quotas. Output order (topic slots,
/// text slots, neutral) depends only on the seed, never on completion timing.
WeakCorpus assemble_weak_corpus(const std::vector<std::string>& texts,
                                const std::vector<std::string>& topics,
                                CompletionProvider& provider, const AssemblyConfig& config);

/// Normalized stance records plus a provenance sidecar keyed by id.
void write_weak_corpus(const std::filesystem::path& corpus_path,
                       const std::filesystem::path& provenance_path,
                       const std::vector<WeakExample>& examples);
/// Inverse of write_weak_corpus. Every corpus id must appear in the sidecar.
std::vector<WeakExample> load_weak_corpus(const std::filesystem::path& corpus_path,
                                          const std::filesystem::path& provenance_path);

}  // namespace stancekit
