#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "stancekit/classifier.hpp"
#include "stancekit/corpus.hpp"
#include "stancekit/reformulate.hpp"

namespace stancekit {

/// Stance probabilities, already mapped back from NLI space.
struct ProbTriple {
  double support = 0.0;
  double oppose = 0.0;
  double neutral = 0.0;

  double operator[](StanceLabel label) const;
  /// Nonnegative and summing to 1 within 1e-6.
  bool valid() const;
};

ProbTriple to_stance_probs(const NliProbs& nli, Polarity polarity);

/// Argmax with ties resolved support > oppose > neutral.
StanceLabel argmax_stance(const ProbTriple& probs);

/// Oppose iff p_oppose >= 1/3; never neutral.
StanceLabel predict_binary_threshold(const ProbTriple& probs);

/// Plurality with ties resolved support > oppose > neutral.
StanceLabel plurality_vote(std::span<const StanceLabel> votes);

struct PredictOptions {
  /// Pair-length budget applied before every classifier call; 0 disables it.
  std::size_t max_pair_length = 0;
  const Tokenizer* tokenizer = nullptr;
};

ProbTriple stance_probs(SequencePairClassifier& classifier, std::string_view text,
                        std::string_view topic, const HypothesisTemplate& tmpl,
                        const PredictOptions& options = {});

StanceLabel predict_three_way(SequencePairClassifier& classifier, std::string_view text,
                              std::string_view topic, const HypothesisTemplate& tmpl,
                              const PredictOptions& options = {});

/// One vote per template (polarity-aware label mapping), then plurality.
/// Requires four templates, two of each polarity.
StanceLabel predict_vote(SequencePairClassifier& classifier, std::string_view text,
                         std::string_view topic, std::span<const HypothesisTemplate> templates,
                         const PredictOptions& options = {});

enum class Policy { ThreeWay, BinaryThreshold, Vote };
const char* to_string(Policy p);
std::optional<Policy> parse_policy(std::string_view s);

struct LabelScores {
  StanceLabel label = StanceLabel::Support;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t gold_count = 0;
  std::size_t pred_count = 0;
};

struct EvalReport {
  std::string dataset;
  std::string policy;
  std::vector<StanceLabel> label_set;
  std::vector<LabelScores> per_label;
  double macro_f1 = 0.0;
  std::size_t count = 0;
  /// confusion[i][j]: gold label_set[i] predicted as label_set[j].
  std::vector<std::vector<std::size_t>> confusion;
  /// Instances whose prediction came from a fallback (e.g. unparseable completion).
  std::size_t flagged = 0;

  nlohmann::json to_json() const;
  /// Aligned per-label table, macro row and confusion matrix.
  std::string render_text() const;
};

/// Label-oriented macro-F1: per-label F1 = 2PR/(P+R) (0 when P+R = 0),
/// averaged over label_set.
EvalReport macro_f1(std::span<const StanceLabel> gold, std::span<const StanceLabel> pred,
                    std::span<const StanceLabel> label_set);

/// Single row of macro-F1 (x100): one column per dataset and a trailing mean.
std::string render_combined_table(const std::vector<EvalReport>& reports,
                                  std::string_view system_name = "system");
double mean_macro_f1(const std::vector<EvalReport>& reports);

}  // namespace stancekit
