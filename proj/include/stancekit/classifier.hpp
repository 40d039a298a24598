#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "stancekit/reformulate.hpp"

namespace stancekit {

/// Probabilities over (entailment, contradiction, neutral).
struct NliProbs {
  double entailment = 0.0;
  double contradiction = 0.0;
  double neutral = 0.0;

  double operator[](NliLabel label) const {
    switch (label) {
      case NliLabel::Entailment: return entailment;
      case NliLabel::Contradiction: return contradiction;
      case NliLabel::Neutral: return neutral;
    }
    return 0.0;
  }
};

/// Opaque serialized model state. Produced by snapshot(), consumed by restore().
struct Checkpoint {
  std::string blob;

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

struct Hyperparams;

/// Trainable sequence-pair model. The backbone (and its optimizer) lives in a
/// plugin; orchestration only needs these five calls.
class SequencePairClassifier {
 public:
  virtual ~SequencePairClassifier() = default;

  /// Called once per stage before the first fit_batch.
  virtual void configure(const Hyperparams& hp) = 0;
  virtual double fit_batch(std::span<const PremiseHypothesisPair> batch) = 0;
  virtual NliProbs predict_proba(std::string_view premise, std::string_view hypothesis) = 0;
  virtual Checkpoint snapshot() const = 0;
  virtual void restore(const Checkpoint& checkpoint) = 0;
};

/// Pluggable token counter used to enforce the pair-length budget.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::size_t count(std::string_view text) const = 0;
  /// First `max_tokens` tokens of `text`.
  virtual std::string truncate(std::string_view text, std::size_t max_tokens) const = 0;
};

class WhitespaceTokenizer final : public Tokenizer {
 public:
  std::size_t count(std::string_view text) const override;
  std::string truncate(std::string_view text, std::size_t max_tokens) const override;
};

}  // namespace stancekit
