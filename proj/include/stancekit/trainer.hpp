#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "stancekit/classifier.hpp"
#include "stancekit/corpus.hpp"
#include "stancekit/weakgen.hpp"

namespace stancekit {

struct Hyperparams {
  double learning_rate = 1e-6;
  std::size_t batch_size = 16;
  std::size_t max_pair_length = 200;
  int epochs = 20;
  std::string optimizer = "adamw";
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static Hyperparams from_json(const nlohmann::json& j, const Hyperparams& base);
};

/// Keeps the hypothesis whole and cuts the premise from the right so the pair
/// fits `max_pair_length` tokens.
std::pair<std::string, std::string> truncate_pair(std::string_view premise,
                                                  std::string_view hypothesis,
                                                  std::size_t max_pair_length,
                                                  const Tokenizer& tokenizer);

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_macro_f1 = 0.0;
};

struct TrainReport {
  std::vector<EpochMetrics> epochs;
  int selected_epoch = 0;  // 1-based
  Checkpoint selected_checkpoint;

  nlohmann::json to_json() const;
};

/// Stage one: iterate epochs x batches over entailment data. Returns the
/// final snapshot. Batch order is a shuffle seeded from hp.seed.
Checkpoint pretrain_indirect(SequencePairClassifier& classifier,
                             const std::vector<NliExample>& nli_examples, const Hyperparams& hp,
                             const Tokenizer& tokenizer = WhitespaceTokenizer{});

/// Stage two: train on weak pairs built with `tmpl`, score dev macro-F1 after
/// every epoch, keep the best (earliest on ties) and restore it before returning.
TrainReport finetune_weak(SequencePairClassifier& classifier,
                          const std::vector<WeakExample>& weak_train,
                          const std::vector<WeakExample>& weak_dev, const Hyperparams& hp,
                          const HypothesisTemplate& tmpl = training_template(),
                          const Tokenizer& tokenizer = WhitespaceTokenizer{});

}  // namespace stancekit
