#pragma once

#include <array>
#include <string>
#include <string_view>

#include "stancekit/corpus.hpp"

namespace stancekit {

enum class Polarity { Favor, Oppose };

/// A hypothesis pattern with a single `{topic}` slot.
class HypothesisTemplate {
 public:
  HypothesisTemplate(std::string pattern, Polarity polarity);

  const std::string& pattern() const noexcept { return pattern_; }
  Polarity polarity() const noexcept { return polarity_; }

  friend bool operator==(const HypothesisTemplate&, const HypothesisTemplate&) = default;

 private:
  std::string pattern_;
  Polarity polarity_;
};

inline constexpr std::string_view kTopicPlaceholder = "{topic}";

/// "he is in favor of {topic}" -- the only template used to build training pairs.
const HypothesisTemplate& training_template();

/// he/she x favor/oppose, favor-polarity first.
const std::array<HypothesisTemplate, 4>& canonical_templates();

struct PremiseHypothesisPair {
  std::string premise;
  std::string hypothesis;
  NliLabel nli_label = NliLabel::Neutral;
  std::string origin;

  friend bool operator==(const PremiseHypothesisPair&, const PremiseHypothesisPair&) = default;
};

NliLabel map_stance_to_nli(StanceLabel label);
StanceLabel map_nli_to_stance(NliLabel label);

/// Stance-to-NLI mapping seen through a template's polarity: for an
/// oppose-polarity hypothesis ("he opposes t"), entailment signals oppose.
NliLabel stance_to_nli_for(StanceLabel label, Polarity polarity);
StanceLabel nli_to_stance_for(NliLabel label, Polarity polarity);

/// Strips surrounding whitespace and trailing sentence punctuation from the
/// topic, then fills the placeholder. No case folding.
std::string hypothesis_text(std::string_view topic, const HypothesisTemplate& tmpl);

PremiseHypothesisPair to_entailment(const StanceExample& example, const HypothesisTemplate& tmpl);

}  // namespace stancekit
