#include "stancekit/hashed_bow.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <set>
#include <unordered_map>

#include "stancekit/error.hpp"

namespace stancekit {

namespace {

constexpr char kMagic[] = "HBOW1";

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c == '\'' || c == '-' || c >= 0x80) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

bool is_function_word(std::string_view w) {
  static const std::set<std::string, std::less<>> kWords = {
      "a",  "an", "the", "he",  "she", "it",   "they", "we",  "i",    "you",  "is",
      "are", "was", "be", "in", "of",  "to",   "and",  "or",  "for",  "on",   "at",
      "this", "that", "his", "her", "its", "their", "with", "as", "by", "not"};
  return kWords.count(w) != 0;
}

template <typename T>
void put(std::string& out, const T& value) {
  out.append(reinterpret_cast<const char*>(&value), sizeof value);
}

template <typename T>
T take(std::string_view& in) {
  if (in.size() < sizeof(T)) fail(ErrorKind::Validation, "truncated hashed-bow checkpoint");
  T value;
  std::memcpy(&value, in.data(), sizeof value);
  in.remove_prefix(sizeof value);
  return value;
}

}  // namespace

HashedBowClassifier::HashedBowClassifier(unsigned hash_bits)
    : hash_bits_(hash_bits), mask_((std::uint64_t{1} << hash_bits) - 1) {
  if (hash_bits < 4 || hash_bits > 24) fail(ErrorKind::Validation, "hash_bits must lie in [4, 24]");
  weights_.assign((std::size_t{1} << hash_bits) * kClasses, 0.0);
  m_.assign(weights_.size(), 0.0);
  v_.assign(weights_.size(), 0.0);
}

std::vector<std::uint64_t> HashedBowClassifier::features(std::string_view premise,
                                                         std::string_view hypothesis) {
  const auto p = words(premise);
  const auto h = words(hypothesis);
  std::set<std::string> p_content;
  std::set<std::string> h_content;
  for (const auto& w : p)
    if (!is_function_word(w)) p_content.insert(w);
  for (const auto& w : h)
    if (!is_function_word(w)) h_content.insert(w);

  bool overlap = false;
  for (const auto& w : h_content) overlap = overlap || p_content.count(w) != 0;

  std::set<std::uint64_t> feats;
  feats.insert(fnv1a("bias"));
  feats.insert(fnv1a(overlap ? "ov:1" : "ov:0"));
  for (const auto& w : p) feats.insert(fnv1a("p:" + w));
  for (const auto& w : h) feats.insert(fnv1a("h:" + w));
  for (const auto& pw : p_content) {
    feats.insert(fnv1a((overlap ? "po:" : "pn:") + pw));
    for (const auto& hw : h_content) feats.insert(fnv1a("x:" + pw + "|" + hw));
  }
  return {feats.begin(), feats.end()};
}

std::array<double, HashedBowClassifier::kClasses> HashedBowClassifier::logits(
    const std::vector<std::uint64_t>& feats) const {
  std::array<double, kClasses> z{};
  for (auto f : feats) {
    const std::size_t base = slot(f) * kClasses;
    for (int c = 0; c < kClasses; ++c) z[c] += weights_[base + c];
  }
  return z;
}

namespace {
std::array<double, 3> softmax(std::array<double, 3> z) {
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) sum += (v = std::exp(v - mx));
  for (double& v : z) v /= sum;
  return z;
}
}  // namespace

void HashedBowClassifier::configure(const Hyperparams& hp) {
  if (hp.optimizer == "adamw") {
    adamw_ = true;
  } else if (hp.optimizer == "sgd") {
    adamw_ = false;
  } else {
    fail(ErrorKind::Validation, "hashed-bow supports optimizers 'adamw' and 'sgd', not '" +
                                    hp.optimizer + "'");
  }
  learning_rate_ = hp.learning_rate;
  std::fill(m_.begin(), m_.end(), 0.0);
  std::fill(v_.begin(), v_.end(), 0.0);
  step_ = 0;
}

double HashedBowClassifier::fit_batch(std::span<const PremiseHypothesisPair> batch) {
  if (batch.empty()) return 0.0;
  std::unordered_map<std::size_t, std::array<double, kClasses>> grad;
  double loss = 0.0;
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const auto& pair : batch) {
    const auto feats = features(pair.premise, pair.hypothesis);
    const auto probs = softmax(logits(feats));
    const int gold = static_cast<int>(pair.nli_label);
    loss -= std::log(std::max(probs[gold], 1e-12));
    for (auto f : feats) {
      auto& g = grad[slot(f)];
      for (int c = 0; c < kClasses; ++c) g[c] += (probs[c] - (c == gold ? 1.0 : 0.0)) * scale;
    }
  }

  ++step_;
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step_));
  for (const auto& [s, g] : grad) {
    for (int c = 0; c < kClasses; ++c) {
      const std::size_t i = s * kClasses + c;
      if (adamw_) {
        m_[i] = kBeta1 * m_[i] + (1 - kBeta1) * g[c];
        v_[i] = kBeta2 * v_[i] + (1 - kBeta2) * g[c] * g[c];
        weights_[i] -= learning_rate_ * ((m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + kEps) +
                                         weight_decay_ * weights_[i]);
      } else {
        weights_[i] -= learning_rate_ * g[c];
      }
    }
  }
  return loss * scale;
}

NliProbs HashedBowClassifier::predict_proba(std::string_view premise, std::string_view hypothesis) {
  const auto p = softmax(logits(features(premise, hypothesis)));
  return NliProbs{p[0], p[1], p[2]};
}

Checkpoint HashedBowClassifier::snapshot() const {
  std::string blob(kMagic, sizeof kMagic - 1);
  put(blob, static_cast<std::uint32_t>(hash_bits_));
  std::uint64_t nonzero = 0;
  for (double w : weights_) nonzero += w != 0.0 ? 1 : 0;
  put(blob, nonzero);
  for (std::uint64_t i = 0; i < weights_.size(); ++i) {
    if (weights_[i] == 0.0) continue;
    put(blob, i);
    put(blob, weights_[i]);
  }
  return Checkpoint{std::move(blob)};
}

void HashedBowClassifier::restore(const Checkpoint& checkpoint) {
  std::string_view in = checkpoint.blob;
  if (in.substr(0, sizeof kMagic - 1) != std::string_view(kMagic, sizeof kMagic - 1))
    fail(ErrorKind::Validation, "not a hashed-bow checkpoint");
  in.remove_prefix(sizeof kMagic - 1);
  if (take<std::uint32_t>(in) != hash_bits_)
    fail(ErrorKind::Validation, "hashed-bow checkpoint was written with different hash_bits");
  const auto nonzero = take<std::uint64_t>(in);
  std::vector<double> w(weights_.size(), 0.0);
  for (std::uint64_t k = 0; k < nonzero; ++k) {
    const auto i = take<std::uint64_t>(in);
    const auto value = take<double>(in);
    if (i >= w.size()) fail(ErrorKind::Validation, "hashed-bow checkpoint index out of range");
    w[i] = value;
  }
  weights_ = std::move(w);
  std::fill(m_.begin(), m_.end(), 0.0);
  std::fill(v_.begin(), v_.end(), 0.0);
  step_ = 0;
}

}  // namespace stancekit
