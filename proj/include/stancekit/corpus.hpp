#pragma once

#include <cmath>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stancekit/error.hpp"
#include "stancekit/rng.hpp"

namespace stancekit {

enum class StanceLabel { Support, Oppose, Neutral };
enum class NliLabel { Entailment, Contradiction, Neutral };
enum class TopicForm { Phrase, Sentence };
enum class EvalMode { ThreeWay, BinaryThreshold };

inline constexpr StanceLabel kAllStanceLabels[] = {StanceLabel::Support, StanceLabel::Oppose,
                                                   StanceLabel::Neutral};

const char* to_string(StanceLabel label);
const char* to_string(NliLabel label);
const char* to_string(TopicForm form);
const char* to_string(EvalMode mode);

std::optional<StanceLabel> parse_stance_label(std::string_view s);
std::optional<NliLabel> parse_nli_label(std::string_view s);
std::optional<TopicForm> parse_topic_form(std::string_view s);
std::optional<EvalMode> parse_eval_mode(std::string_view s);

struct StanceExample {
  std::string text;
  std::string topic;
  StanceLabel label = StanceLabel::Neutral;
  TopicForm topic_form = TopicForm::Phrase;
  std::string source_id;

  friend bool operator==(const StanceExample&, const StanceExample&) = default;
};

struct NliExample {
  std::string premise;
  std::string hypothesis;
  NliLabel label = NliLabel::Neutral;

  friend bool operator==(const NliExample&, const NliExample&) = default;
};

/// Per-dataset declaration. Label set order is the reporting order.
struct DatasetSpec {
  std::string name;
  std::vector<StanceLabel> label_set{StanceLabel::Support, StanceLabel::Oppose,
                                     StanceLabel::Neutral};
  TopicForm topic_form = TopicForm::Phrase;
  EvalMode eval_mode = EvalMode::ThreeWay;

  /// Throws a validation error when binary_threshold is paired with anything
  /// but {support, oppose}, or the label set is empty or repeats a label.
  void validate() const;
  bool allows(StanceLabel label) const;
};

/// Reads normalized stance records (one JSON object per line). Blank lines are
/// skipped; line indices still count them so ids stay tied to file positions.
std::vector<StanceExample> load_stance_dataset(const std::filesystem::path& path,
                                               const DatasetSpec& spec);
std::vector<StanceExample> parse_stance_records(std::istream& in, const DatasetSpec& spec);

void write_stance_records(std::ostream& out, const std::vector<StanceExample>& examples);
void write_stance_dataset(const std::filesystem::path& path,
                          const std::vector<StanceExample>& examples);

std::vector<NliExample> load_nli_dataset(const std::filesystem::path& path);
std::vector<NliExample> parse_nli_records(std::istream& in);
void write_nli_records(std::ostream& out, const std::vector<NliExample>& examples);

template <typename T>
struct TrainDevSplit {
  std::vector<T> train;
  std::vector<T> dev;
};

/// Shuffles a copy with a seeded generator and cuts at floor(fraction * N).
template <typename T>
TrainDevSplit<T> split_train_dev(const std::vector<T>& examples, double train_fraction,
                                 std::uint64_t seed) {
  if (examples.empty()) fail(ErrorKind::Validation, "split_train_dev: empty input");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    fail(ErrorKind::Validation, "split_train_dev: train fraction must lie in (0, 1)");
  std::vector<T> shuffled = examples;
  Rng rng(seed);
  rng.shuffle(shuffled);
  const auto cut = static_cast<std::size_t>(
      std::floor(train_fraction * static_cast<double>(shuffled.size())));
  TrainDevSplit<T> out;
  out.train.assign(std::make_move_iterator(shuffled.begin()),
                   std::make_move_iterator(shuffled.begin() + static_cast<std::ptrdiff_t>(cut)));
  out.dev.assign(std::make_move_iterator(shuffled.begin() + static_cast<std::ptrdiff_t>(cut)),
                 std::make_move_iterator(shuffled.end()));
  return out;
}

struct TopicSplit {
  std::string held_out_topic;
  std::vector<StanceExample> train;
  std::vector<StanceExample> test;
};

/// One split per distinct topic, in order of first appearance.
std::vector<TopicSplit> leave_one_topic_out_splits(const std::vector<StanceExample>& examples);

}  // namespace stancekit
