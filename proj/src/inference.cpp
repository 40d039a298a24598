#include "stancekit/inference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "stancekit/trainer.hpp"

namespace stancekit {

using nlohmann::json;

double ProbTriple::operator[](StanceLabel label) const {
  switch (label) {
    case StanceLabel::Support: return support;
    case StanceLabel::Oppose: return oppose;
    case StanceLabel::Neutral: return neutral;
  }
  return 0.0;
}

bool ProbTriple::valid() const {
  return support >= 0.0 && oppose >= 0.0 && neutral >= 0.0 &&
         std::abs(support + oppose + neutral - 1.0) <= 1e-6;
}

ProbTriple to_stance_probs(const NliProbs& nli, Polarity polarity) {
  ProbTriple p;
  p.neutral = nli.neutral;
  if (polarity == Polarity::Favor) {
    p.support = nli.entailment;
    p.oppose = nli.contradiction;
  } else {
    p.support = nli.contradiction;
    p.oppose = nli.entailment;
  }
  return p;
}

StanceLabel argmax_stance(const ProbTriple& probs) {
  StanceLabel best = StanceLabel::Support;
  for (StanceLabel l : kAllStanceLabels)
    if (probs[l] > probs[best]) best = l;
  return best;
}

StanceLabel predict_binary_threshold(const ProbTriple& probs) {
  return probs.oppose < 1.0 / 3.0 ? StanceLabel::Support : StanceLabel::Oppose;
}

StanceLabel plurality_vote(std::span<const StanceLabel> votes) {
  if (votes.empty()) fail(ErrorKind::Validation, "plurality_vote: no votes");
  std::size_t counts[3] = {0, 0, 0};
  for (StanceLabel v : votes) ++counts[static_cast<int>(v)];
  StanceLabel best = StanceLabel::Support;
  for (StanceLabel l : kAllStanceLabels)
    if (counts[static_cast<int>(l)] > counts[static_cast<int>(best)]) best = l;
  return best;
}

ProbTriple stance_probs(SequencePairClassifier& classifier, std::string_view text,
                        std::string_view topic, const HypothesisTemplate& tmpl,
                        const PredictOptions& options) {
  std::string hypothesis = hypothesis_text(topic, tmpl);
  NliProbs nli;
  if (options.max_pair_length > 0) {
    static const WhitespaceTokenizer kDefault;
    const Tokenizer& tok = options.tokenizer ? *options.tokenizer : kDefault;
    auto [premise, hyp] = truncate_pair(text, hypothesis, options.max_pair_length, tok);
    nli = classifier.predict_proba(premise, hyp);
  } else {
    nli = classifier.predict_proba(text, hypothesis);
  }
  return to_stance_probs(nli, tmpl.polarity());
}

StanceLabel predict_three_way(SequencePairClassifier& classifier, std::string_view text,
                              std::string_view topic, const HypothesisTemplate& tmpl,
                              const PredictOptions& options) {
  return argmax_stance(stance_probs(classifier, text, topic, tmpl, options));
}

StanceLabel predict_vote(SequencePairClassifier& classifier, std::string_view text,
                         std::string_view topic, std::span<const HypothesisTemplate> templates,
                         const PredictOptions& options) {
  const auto favor = std::count_if(templates.begin(), templates.end(), [](const auto& t) {
    return t.polarity() == Polarity::Favor;
  });
  if (templates.size() != 4 || favor != 2)
    fail(ErrorKind::Validation, "predict_vote needs four templates, two per polarity");
  std::vector<StanceLabel> votes;
  votes.reserve(templates.size());
  for (const auto& t : templates) votes.push_back(predict_three_way(classifier, text, topic, t, options));
  return plurality_vote(votes);
}

const char* to_string(Policy p) {
  switch (p) {
    case Policy::ThreeWay: return "three_way";
    case Policy::BinaryThreshold: return "binary_threshold";
    case Policy::Vote: return "vote";
  }
  return "?";
}

std::optional<Policy> parse_policy(std::string_view s) {
  for (Policy p : {Policy::ThreeWay, Policy::BinaryThreshold, Policy::Vote})
    if (s == to_string(p)) return p;
  return std::nullopt;
}

// ---------------------------------------------------------------------------

EvalReport macro_f1(std::span<const StanceLabel> gold, std::span<const StanceLabel> pred,
                    std::span<const StanceLabel> label_set) {
  if (gold.size() != pred.size())
    fail(ErrorKind::Validation, "macro_f1: gold and prediction lengths differ");
  if (gold.empty()) fail(ErrorKind::Validation, "macro_f1: no instances");
  if (label_set.empty()) fail(ErrorKind::Validation, "macro_f1: empty label set");

  const auto index_of = [&](StanceLabel l) -> std::size_t {
    auto it = std::find(label_set.begin(), label_set.end(), l);
    if (it == label_set.end())
      fail(ErrorKind::Validation, std::string("macro_f1: label '") + to_string(l) +
                                      "' is outside the label set");
    return static_cast<std::size_t>(it - label_set.begin());
  };

  const std::size_t k = label_set.size();
  EvalReport report;
  report.label_set.assign(label_set.begin(), label_set.end());
  report.count = gold.size();
  report.confusion.assign(k, std::vector<std::size_t>(k, 0));
  for (std::size_t i = 0; i < gold.size(); ++i) ++report.confusion[index_of(gold[i])][index_of(pred[i])];

  double sum = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    LabelScores s;
    s.label = label_set[c];
    const std::size_t tp = report.confusion[c][c];
    for (std::size_t j = 0; j < k; ++j) {
      s.gold_count += report.confusion[c][j];
      s.pred_count += report.confusion[j][c];
    }
    s.precision = s.pred_count ? static_cast<double>(tp) / static_cast<double>(s.pred_count) : 0.0;
    s.recall = s.gold_count ? static_cast<double>(tp) / static_cast<double>(s.gold_count) : 0.0;
    s.f1 = s.precision + s.recall > 0.0
               ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
               : 0.0;
    sum += s.f1;
    report.per_label.push_back(s);
  }
  report.macro_f1 = sum / static_cast<double>(k);
  return report;
}

json EvalReport::to_json() const {
  json labels = json::array();
  for (const auto& s : per_label) {
    labels.push_back({{"label", to_string(s.label)},
                      {"precision", s.precision},
                      {"recall", s.recall},
                      {"f1", s.f1},
                      {"gold", s.gold_count},
                      {"predicted", s.pred_count}});
  }
  json names = json::array();
  for (StanceLabel l : label_set) names.push_back(to_string(l));
  return json{{"dataset", dataset}, {"policy", policy},       {"macro_f1", macro_f1},
              {"count", count},     {"labels", labels},       {"label_set", names},
              {"confusion", confusion}, {"flagged", flagged}};
}

namespace {
std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad(std::string_view s, std::size_t width, bool right = false) {
  std::string out(s);
  if (out.size() >= width) return out;
  return right ? std::string(width - out.size(), ' ') + out : out + std::string(width - out.size(), ' ');
}
}  // namespace

std::string EvalReport::render_text() const {
  std::ostringstream os;
  os << "dataset: " << dataset << "  policy: " << policy << "  n=" << count;
  if (flagged) os << "  flagged=" << flagged;
  os << '\n';
  os << pad("label", 10) << pad("precision", 11, true) << pad("recall", 9, true)
     << pad("f1", 9, true) << pad("gold", 8, true) << pad("pred", 8, true) << '\n';
  for (const auto& s : per_label) {
    os << pad(to_string(s.label), 10) << pad(fixed(s.precision, 4), 11, true)
       << pad(fixed(s.recall, 4), 9, true) << pad(fixed(s.f1, 4), 9, true)
       << pad(std::to_string(s.gold_count), 8, true) << pad(std::to_string(s.pred_count), 8, true)
       << '\n';
  }
  os << pad("macro", 10) << pad("", 11) << pad("", 9) << pad(fixed(macro_f1, 4), 9, true)
     << pad(std::to_string(count), 8, true) << '\n';
  os << "confusion (rows gold, columns predicted)\n" << pad("", 10);
  for (StanceLabel l : label_set) os << pad(to_string(l), 9, true);
  os << '\n';
  for (std::size_t i = 0; i < label_set.size(); ++i) {
    os << pad(to_string(label_set[i]), 10);
    for (std::size_t j = 0; j < label_set.size(); ++j) os << pad(std::to_string(confusion[i][j]), 9, true);
    os << '\n';
  }
  return os.str();
}

double mean_macro_f1(const std::vector<EvalReport>& reports) {
  if (reports.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& r : reports) sum += r.macro_f1;
  return sum / static_cast<double>(reports.size());
}

std::string render_combined_table(const std::vector<EvalReport>& reports,
                                  std::string_view system_name) {
  std::size_t first = std::max<std::size_t>(system_name.size(), 6) + 2;
  std::ostringstream os;
  os << pad("", first);
  for (const auto& r : reports) os << pad(r.dataset, std::max<std::size_t>(r.dataset.size(), 6) + 2, true);
  os << pad("mean", 8, true) << '\n';
  os << pad(system_name, first);
  for (const auto& r : reports)
    os << pad(fixed(100.0 * r.macro_f1, 1), std::max<std::size_t>(r.dataset.size(), 6) + 2, true);
  os << pad(fixed(100.0 * mean_macro_f1(reports), 1), 8, true) << '\n';
  return os.str();
}

}  // namespace stancekit
