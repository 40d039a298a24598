#include "stancekit/reformulate.hpp"

#include "stancekit/text.hpp"

namespace stancekit {

HypothesisTemplate::HypothesisTemplate(std::string pattern, Polarity polarity)
    : pattern_(std::move(pattern)), polarity_(polarity) {
  const auto first = pattern_.find(kTopicPlaceholder);
  if (first == std::string::npos ||
      pattern_.find(kTopicPlaceholder, first + kTopicPlaceholder.size()) != std::string::npos) {
    fail(ErrorKind::Validation,
         "hypothesis template must contain {topic} exactly once: '" + pattern_ + "'");
  }
}

const HypothesisTemplate& training_template() {
  static const HypothesisTemplate tmpl("he is in favor of {topic}", Polarity::Favor);
  return tmpl;
}

const std::array<HypothesisTemplate, 4>& canonical_templates() {
  static const std::array<HypothesisTemplate, 4> templates = {
      HypothesisTemplate("he is in favor of {topic}", Polarity::Favor),
      HypothesisTemplate("she is in favor of {topic}", Polarity::Favor),
      HypothesisTemplate("he opposes {topic}", Polarity::Oppose),
      HypothesisTemplate("she opposes {topic}", Polarity::Oppose),
  };
  return templates;
}

NliLabel map_stance_to_nli(StanceLabel label) {
  switch (label) {
    case StanceLabel::Support: return NliLabel::Entailment;
    case StanceLabel::Oppose: return NliLabel::Contradiction;
    case StanceLabel::Neutral: return NliLabel::Neutral;
  }
  return NliLabel::Neutral;
}

StanceLabel map_nli_to_stance(NliLabel label) {
  switch (label) {
    case NliLabel::Entailment: return StanceLabel::Support;
    case NliLabel::Contradiction: return StanceLabel::Oppose;
    case NliLabel::Neutral: return StanceLabel::Neutral;
  }
  return StanceLabel::Neutral;
}

namespace {
StanceLabel flip(StanceLabel label) {
  if (label == StanceLabel::Support) return StanceLabel::Oppose;
  if (label == StanceLabel::Oppose) return StanceLabel::Support;
  return label;
}
}  // namespace

NliLabel stance_to_nli_for(StanceLabel label, Polarity polarity) {
  return map_stance_to_nli(polarity == Polarity::Favor ? label : flip(label));
}

StanceLabel nli_to_stance_for(NliLabel label, Polarity polarity) {
  const StanceLabel stance = map_nli_to_stance(label);
  return polarity == Polarity::Favor ? stance : flip(stance);
}

std::string hypothesis_text(std::string_view topic, const HypothesisTemplate& tmpl) {
  std::string_view t = text::trim(topic);
  while (!t.empty() && std::string_view(".!?;:").find(t.back()) != std::string_view::npos) {
    t.remove_suffix(1);
    t = text::trim(t);
  }
  if (t.empty()) fail(ErrorKind::Validation, "hypothesis_text: empty topic");
  std::string out = tmpl.pattern();
  out.replace(out.find(kTopicPlaceholder), kTopicPlaceholder.size(), t);
  return out;
}

PremiseHypothesisPair to_entailment(const StanceExample& example, const HypothesisTemplate& tmpl) {
  return PremiseHypothesisPair{
      .premise = example.text,
      .hypothesis = hypothesis_text(example.topic, tmpl),
      .nli_label = stance_to_nli_for(example.label, tmpl.polarity()),
      .origin = example.source_id,
  };
}

}  // namespace stancekit
