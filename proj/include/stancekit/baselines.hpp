#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stancekit/completion.hpp"
#include "stancekit/corpus.hpp"

namespace stancekit {

class MaskedTokenScorer {
 public:
  virtual ~MaskedTokenScorer() = default;
  /// One nonnegative score per candidate for the single [MASK] slot.
  virtual std::vector<double> score_tokens(const std::string& text_with_mask,
                                           std::span<const std::string> candidates) = 0;
};

class SentenceEncoder {
 public:
  virtual ~SentenceEncoder() = default;
  virtual std::vector<double> encode(std::string_view text) = 0;
};

inline constexpr std::string_view kMaskToken = "[MASK]";

/// "{text}, it [MASK] {topic}"
std::string mlm_probe(std::string_view text, std::string_view topic);

/// "supports", "opposes", "neutral", in support/oppose/neutral order.
std::span<const std::string> mlm_candidates();

/// Scores in support/oppose/neutral order.
using LabelScoreTriple = std::array<double, 3>;

/// Highest-scoring label among `allowed`, ties resolved support > oppose > neutral.
StanceLabel argmax_within(const LabelScoreTriple& scores, std::span<const StanceLabel> allowed);

LabelScoreTriple mlm_label_scores(std::string_view text, std::string_view topic,
                                  MaskedTokenScorer& scorer);
StanceLabel mlm_baseline(std::string_view text, std::string_view topic, MaskedTokenScorer& scorer);

/// Instruction prompt ending in "Stance:".
std::string completion_baseline_prompt(std::string_view text, std::string_view topic);

/// Decoding parameters for the instruction prompt: greedy, a few tokens, newline stop.
CompletionParams completion_baseline_params();

struct BaselinePrediction {
  StanceLabel label = StanceLabel::Neutral;
  /// Set when the completion held no recognizable label and neutral was assumed.
  bool flagged = false;
};

/// First of support/against/oppose/neutral (case-insensitive) wins;
/// "against" reads as oppose. Total: falls back to a flagged neutral.
BaselinePrediction parse_stance_completion(std::string_view completion);

BaselinePrediction completion_baseline(std::string_view text, std::string_view topic,
                                       CompletionProvider& provider);

double cosine_similarity(std::span<const double> u, std::span<const double> v);

/// "it supports the {topic}", "it opposes the {topic}", "it is unrelated to the {topic}".
std::vector<std::string> cosine_hypotheses(std::string_view topic);

LabelScoreTriple cosine_label_scores(std::string_view text, std::string_view topic,
                                     SentenceEncoder& encoder);
StanceLabel cosine_baseline(std::string_view text, std::string_view topic, SentenceEncoder& encoder);

/// i.i.d. uniform draws over label_set.
std::vector<StanceLabel> random_baseline(std::size_t n, std::span<const StanceLabel> label_set,
                                         std::uint64_t seed);

/// Feature-hashed bag-of-words encoder (lowercased word counts folded into
/// `dim` buckets). Deterministic, needs no model files.
class HashedBowEncoder final : public SentenceEncoder {
 public:
  explicit HashedBowEncoder(std::size_t dim = 256) : dim_(dim) {}
  std::vector<double> encode(std::string_view text) override;

 private:
  std::size_t dim_;
};

}  // namespace stancekit
