#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "stancekit/classifier.hpp"
#include "stancekit/trainer.hpp"

namespace stancekit {

/// Small linear softmax classifier over hashed lexical features of a
/// (premise, hypothesis) pair: unigrams of each side, premise x hypothesis
/// word crosses, and a lexical-overlap indicator crossed with premise words.
/// Trained with sparse AdamW or plain SGD. Meant for smoke runs and tests,
/// not as an entailment backbone. Snapshots hold weights only; restoring
/// resets the optimizer moments.
class HashedBowClassifier final : public SequencePairClassifier {
 public:
  explicit HashedBowClassifier(unsigned hash_bits = 16);

  void configure(const Hyperparams& hp) override;
  double fit_batch(std::span<const PremiseHypothesisPair> batch) override;
  NliProbs predict_proba(std::string_view premise, std::string_view hypothesis) override;
  Checkpoint snapshot() const override;
  void restore(const Checkpoint& checkpoint) override;

  static std::vector<std::uint64_t> features(std::string_view premise, std::string_view hypothesis);

 private:
  static constexpr int kClasses = 3;

  std::array<double, kClasses> logits(const std::vector<std::uint64_t>& feats) const;
  std::size_t slot(std::uint64_t feature) const { return static_cast<std::size_t>(feature & mask_); }

  unsigned hash_bits_;
  std::uint64_t mask_;
  std::vector<double> weights_;  // [slot * kClasses + class]
  std::vector<double> m_;
  std::vector<double> v_;
  std::uint64_t step_ = 0;
  double learning_rate_ = 0.05;
  double weight_decay_ = 0.01;
  bool adamw_ = true;
};

}  // namespace stancekit
