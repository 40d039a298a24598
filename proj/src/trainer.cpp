#include "stancekit/trainer.hpp"

#include <cctype>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>

#include "stancekit/inference.hpp"
#include "stancekit/text.hpp"

namespace stancekit {

using nlohmann::json;

void Checkpoint::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !out.write(blob.data(), static_cast<std::streamsize>(blob.size())))
    fail(ErrorKind::Io, "cannot write checkpoint '" + path.string() + "'");
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open checkpoint '" + path.string() + "'");
  return Checkpoint{std::string(std::istreambuf_iterator<char>(in), {})};
}

std::size_t WhitespaceTokenizer::count(std::string_view text) const {
  return text::split_whitespace(text).size();
}

std::string WhitespaceTokenizer::truncate(std::string_view text, std::size_t max_tokens) const {
  if (max_tokens == 0) return {};
  const auto tokens = text::split_whitespace(text);
  if (tokens.size() <= max_tokens) return std::string(text);
  const auto& last = tokens[max_tokens - 1];
  return std::string(text.substr(0, static_cast<std::size_t>(last.data() + last.size() - text.data())));
}

// ---------------------------------------------------------------------------

void Hyperparams::validate() const {
  if (!(learning_rate > 0.0)) fail(ErrorKind::Validation, "learning_rate must be positive");
  if (batch_size == 0) fail(ErrorKind::Validation, "batch_size must be positive");
  if (epochs <= 0) fail(ErrorKind::Validation, "epochs must be positive");
  if (max_pair_length < 8) fail(ErrorKind::Validation, "max_pair_length must be at least 8");
}

json Hyperparams::to_json() const {
  return json{{"learning_rate", learning_rate}, {"batch_size", batch_size},
              {"max_pair_length", max_pair_length}, {"epochs", epochs},
              {"optimizer", optimizer}, {"seed", seed}};
}

Hyperparams Hyperparams::from_json(const json& j, const Hyperparams& base) {
  Hyperparams hp = base;
  try {
    if (j.contains("learning_rate")) hp.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("batch_size")) hp.batch_size = j.at("batch_size").get<std::size_t>();
    if (j.contains("max_pair_length")) hp.max_pair_length = j.at("max_pair_length").get<std::size_t>();
    if (j.contains("epochs")) hp.epochs = j.at("epochs").get<int>();
    if (j.contains("optimizer")) hp.optimizer = j.at("optimizer").get<std::string>();
    if (j.contains("seed")) hp.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    fail(ErrorKind::Validation, std::string("hyperparams: ") + e.what());
  }
  hp.validate();
  return hp;
}

std::pair<std::string, std::string> truncate_pair(std::string_view premise,
                                                  std::string_view hypothesis,
                                                  std::size_t max_pair_length,
                                                  const Tokenizer& tokenizer) {
  if (max_pair_length < 8) fail(ErrorKind::Validation, "max_pair_length must be at least 8");
  const std::size_t hyp_len = tokenizer.count(hypothesis);
  if (hyp_len > max_pair_length)
    fail(ErrorKind::Validation, "hypothesis alone (" + std::to_string(hyp_len) +
                                    " tokens) exceeds the pair budget of " +
                                    std::to_string(max_pair_length));
  const std::size_t budget = max_pair_length - hyp_len;
  std::string p = tokenizer.count(premise) > budget ? tokenizer.truncate(premise, budget)
                                                     : std::string(premise);
  return {std::move(p), std::string(hypothesis)};
}

json TrainReport::to_json() const {
  json rows = json::array();
  for (const auto& e : epochs)
    rows.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"dev_macro_f1", e.dev_macro_f1}});
  return json{{"epochs", rows}, {"selected_epoch", selected_epoch}};
}

// ---------------------------------------------------------------------------

namespace {

/// Runs one epoch of shuffled mini-batches and returns the size-weighted mean loss.
double run_epoch(SequencePairClassifier& classifier, const std::vector<PremiseHypothesisPair>& pairs,
                 std::size_t batch_size, Rng& rng, int epoch) {
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  double total = 0.0;
  std::vector<PremiseHypothesisPair> batch;
  batch.reserve(batch_size);
  std::size_t batch_index = 0;
  for (std::size_t start = 0; start < order.size(); start += batch_size, ++batch_index) {
    batch.clear();
    for (std::size_t i = start; i < std::min(order.size(), start + batch_size); ++i)
      batch.push_back(pairs[order[i]]);
    try {
      total += classifier.fit_batch(batch) * static_cast<double>(batch.size());
    } catch (const TrainingError&) {
      throw;
    } catch (const std::exception& e) {
      throw TrainingError(epoch, batch_index, e.what());
    }
  }
  return total / static_cast<double>(pairs.size());
}

PremiseHypothesisPair fit_to_budget(PremiseHypothesisPair pair, std::size_t max_len,
                                    const Tokenizer& tok) {
  auto [p, h] = truncate_pair(pair.premise, pair.hypothesis, max_len, tok);
  pair.premise = std::move(p);
  pair.hypothesis = std::move(h);
  return pair;
}

}  // namespace

Checkpoint pretrain_indirect(SequencePairClassifier& classifier,
                             const std::vector<NliExample>& nli_examples, const Hyperparams& hp,
                             const Tokenizer& tokenizer) {
  if (nli_examples.empty()) fail(ErrorKind::Validation, "pretrain_indirect: no entailment examples");
  hp.validate();
  std::vector<PremiseHypothesisPair> pairs;
  pairs.reserve(nli_examples.size());
  for (std::size_t i = 0; i < nli_examples.size(); ++i) {
    const auto& ex = nli_examples[i];
    pairs.push_back(fit_to_budget({ex.premise, ex.hypothesis, ex.label, "nli:" + std::to_string(i)},
                                  hp.max_pair_length, tokenizer));
  }
  classifier.configure(hp);
  Rng rng(hp.seed);
  for (int epoch = 1; epoch <= hp.epochs; ++epoch) run_epoch(classifier, pairs, hp.batch_size, rng, epoch);
  return classifier.snapshot();
}

TrainReport finetune_weak(SequencePairClassifier& classifier,
                          const std::vector<WeakExample>& weak_train,
                          const std::vector<WeakExample>& weak_dev, const Hyperparams& hp,
                          const HypothesisTemplate& tmpl, const Tokenizer& tokenizer) {
  if (weak_train.empty() || weak_dev.empty())
    fail(ErrorKind::Validation, "finetune_weak: train and dev must be non-empty");
  hp.validate();
  std::vector<PremiseHypothesisPair> pairs;
  pairs.reserve(weak_train.size());
  for (const auto& ex : weak_train)
    pairs.push_back(fit_to_budget(to_entailment(ex, tmpl), hp.max_pair_length, tokenizer));

  std::vector<StanceLabel> gold;
  gold.reserve(weak_dev.size());
  for (const auto& ex : weak_dev) gold.push_back(ex.label);
  const PredictOptions options{.max_pair_length = hp.max_pair_length, .tokenizer = &tokenizer};

  classifier.configure(hp);
  Rng rng(hp.seed);
  TrainReport report;
  double best = -1.0;
  for (int epoch = 1; epoch <= hp.epochs; ++epoch) {
    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = run_epoch(classifier, pairs, hp.batch_size, rng, epoch);
    std::vector<StanceLabel> pred;
    pred.reserve(weak_dev.size());
    try {
      for (const auto& ex : weak_dev)
        pred.push_back(predict_three_way(classifier, ex.text, ex.topic, tmpl, options));
    } catch (const std::exception& e) {
      throw TrainingError(epoch, 0, std::string("dev evaluation failed: ") + e.what());
    }
    m.dev_macro_f1 = macro_f1(gold, pred, kAllStanceLabels).macro_f1;
    if (m.dev_macro_f1 > best) {
      best = m.dev_macro_f1;
      report.selected_epoch = epoch;
      report.selected_checkpoint = classifier.snapshot();
    }
    report.epochs.push_back(m);
  }
  classifier.restore(report.selected_checkpoint);
  return report;
}

}  // namespace stancekit
