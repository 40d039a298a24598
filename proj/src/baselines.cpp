#include "stancekit/baselines.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <cmath>

#include "stancekit/error.hpp"
#include "stancekit/rng.hpp"
#include "stancekit/text.hpp"

namespace stancekit {

StanceLabel argmax_within(const LabelScoreTriple& scores, std::span<const StanceLabel> allowed) {
  if (allowed.empty()) fail(ErrorKind::Validation, "argmax_within: no allowed labels");
  std::optional<StanceLabel> best;
  for (StanceLabel l : kAllStanceLabels) {
    if (std::find(allowed.begin(), allowed.end(), l) == allowed.end()) continue;
    if (!best || scores[static_cast<int>(l)] > scores[static_cast<int>(*best)]) best = l;
  }
  return *best;
}

std::string mlm_probe(std::string_view text, std::string_view topic) {
  return std::string(text) + ", it " + std::string(kMaskToken) + " " + std::string(topic);
}

std::span<const std::string> mlm_candidates() {
  static const std::string kCandidates[] = {"supports", "opposes", "neutral"};
  return kCandidates;
}

LabelScoreTriple mlm_label_scores(std::string_view text, std::string_view topic,
                                  MaskedTokenScorer& scorer) {
  const auto scores = scorer.score_tokens(mlm_probe(text, topic), mlm_candidates());
  if (scores.size() != mlm_candidates().size())
    fail(ErrorKind::Validation, "masked-token scorer must return one score per candidate");
  return {scores[0], scores[1], scores[2]};
}

StanceLabel mlm_baseline(std::string_view text, std::string_view topic, MaskedTokenScorer& scorer) {
  return argmax_within(mlm_label_scores(text, topic, scorer), kAllStanceLabels);
}

std::string completion_baseline_prompt(std::string_view text, std::string_view topic) {
  return "Given a topic and a text, determine whether the stance of the text is support, "
         "against, or neutral to the topic.\nTopic: " +
         std::string(topic) + "\nText: " + std::string(text) + "\nStance:";
}

CompletionParams completion_baseline_params() {
  return CompletionParams{
      .temperature = 0.0, .max_tokens = 5, .stop = {"\n"}, .top_p = 1.0, .frequency_penalty = 0.0};
}

BaselinePrediction parse_stance_completion(std::string_view completion) {
  static constexpr std::pair<std::string_view, StanceLabel> kWords[] = {
      {"support", StanceLabel::Support},
      {"against", StanceLabel::Oppose},
      {"oppos", StanceLabel::Oppose},
      {"neutral", StanceLabel::Neutral},
  };
  const std::string lower = text::to_lower(completion);
  std::size_t best_pos = std::string::npos;
  StanceLabel best = StanceLabel::Neutral;
  for (auto [word, label] : kWords) {
    for (std::size_t pos = lower.find(word); pos != std::string::npos; pos = lower.find(word, pos + 1)) {
      const bool word_start = pos == 0 || !std::isalpha(static_cast<unsigned char>(lower[pos - 1]));
      if (!word_start) continue;
      if (pos < best_pos) {
        best_pos = pos;
        best = label;
      }
      break;
    }
  }
  if (best_pos == std::string::npos) return {StanceLabel::Neutral, true};
  return {best, false};
}

BaselinePrediction completion_baseline(std::string_view text, std::string_view topic,
                                       CompletionProvider& provider) {
  return parse_stance_completion(
      provider.complete(completion_baseline_prompt(text, topic), completion_baseline_params()));
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) fail(ErrorKind::Encoding, "cosine: vector dimensions differ");
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) fail(ErrorKind::Encoding, "cosine: zero-norm vector");
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

std::vector<std::string> cosine_hypotheses(std::string_view topic) {
  const std::string t(topic);
  return {"it supports the " + t, "it opposes the " + t, "it is unrelated to the " + t};
}

LabelScoreTriple cosine_label_scores(std::string_view text, std::string_view topic,
                                     SentenceEncoder& encoder) {
  const auto u = encoder.encode(text);
  const auto hyps = cosine_hypotheses(topic);
  LabelScoreTriple sims{};
  for (std::size_t i = 0; i < 3; ++i) sims[i] = cosine_similarity(u, encoder.encode(hyps[i]));
  return sims;
}

StanceLabel cosine_baseline(std::string_view text, std::string_view topic, SentenceEncoder& encoder) {
  return argmax_within(cosine_label_scores(text, topic, encoder), kAllStanceLabels);
}

std::vector<StanceLabel> random_baseline(std::size_t n, std::span<const StanceLabel> label_set,
                                         std::uint64_t seed) {
  if (label_set.empty()) fail(ErrorKind::Validation, "random_baseline: empty label set");
  if (n == 0) fail(ErrorKind::Validation, "random_baseline: n must be positive");
  Rng rng(seed);
  std::vector<StanceLabel> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(label_set[rng.index(label_set.size())]);
  return out;
}

std::vector<double> HashedBowEncoder::encode(std::string_view input) {
  std::vector<double> v(dim_, 0.0);
  const auto bucket = [&](std::string_view w) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : w) {
      h ^= static_cast<unsigned char>(std::tolower(c));
      h *= 1099511628211ULL;
    }
    return static_cast<std::size_t>(h % dim_);
  };
  std::size_t words = 0;
  std::string cur;
  const auto flush = [&] {
    if (cur.empty()) return;
    v[bucket(cur)] += 1.0;
    ++words;
    cur.clear();
  };
  for (char ch : input) {
    if (std::isalnum(static_cast<unsigned char>(ch)) || static_cast<unsigned char>(ch) >= 0x80)
      cur.push_back(ch);
    else
      flush();
  }
  flush();
  const auto trimmed = text::trim(input);
  if (words == 0 && !trimmed.empty()) v[bucket(trimmed)] += 1.0;
  return v;
}

}  // namespace stancekit
