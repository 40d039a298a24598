#include "stancekit/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>

#include "stancekit/text.hpp"

namespace stancekit {

using nlohmann::json;

const char* to_string(StanceLabel label) {
  switch (label) {
    case StanceLabel::Support: return "support";
    case StanceLabel::Oppose: return "oppose";
    case StanceLabel::Neutral: return "neutral";
  }
  return "?";
}

const char* to_string(NliLabel label) {
  switch (label) {
    case NliLabel::Entailment: return "entailment";
    case NliLabel::Contradiction: return "contradiction";
    case NliLabel::Neutral: return "neutral";
  }
  return "?";
}

const char* to_string(TopicForm form) {
  return form == TopicForm::Phrase ? "phrase" : "sentence";
}

const char* to_string(EvalMode mode) {
  return mode == EvalMode::ThreeWay ? "three_way" : "binary_threshold";
}

std::optional<StanceLabel> parse_stance_label(std::string_view s) {
  for (StanceLabel l : kAllStanceLabels)
    if (s == to_string(l)) return l;
  return std::nullopt;
}

std::optional<NliLabel> parse_nli_label(std::string_view s) {
  for (NliLabel l : {NliLabel::Entailment, NliLabel::Contradiction, NliLabel::Neutral})
    if (s == to_string(l)) return l;
  return std::nullopt;
}

std::optional<TopicForm> parse_topic_form(std::string_view s) {
  if (s == "phrase") return TopicForm::Phrase;
  if (s == "sentence") return TopicForm::Sentence;
  return std::nullopt;
}

std::optional<EvalMode> parse_eval_mode(std::string_view s) {
  if (s == "three_way") return EvalMode::ThreeWay;
  if (s == "binary_threshold") return EvalMode::BinaryThreshold;
  return std::nullopt;
}

void DatasetSpec::validate() const {
  if (label_set.empty()) fail(ErrorKind::Validation, "dataset '" + name + "': empty label set");
  for (std::size_t i = 0; i < label_set.size(); ++i)
    for (std::size_t j = i + 1; j < label_set.size(); ++j)
      if (label_set[i] == label_set[j])
        fail(ErrorKind::Validation, "dataset '" + name + "': repeated label in label set");
  if (eval_mode == EvalMode::BinaryThreshold &&
      (label_set.size() != 2 || !allows(StanceLabel::Support) || !allows(StanceLabel::Oppose))) {
    fail(ErrorKind::Validation,
         "dataset '" + name + "': binary_threshold requires label set {support, oppose}");
  }
}

bool DatasetSpec::allows(StanceLabel label) const {
  return std::find(label_set.begin(), label_set.end(), label) != label_set.end();
}

namespace {

std::string required_string(const json& record, const char* field, std::size_t line_no) {
  auto it = record.find(field);
  if (it == record.end()) throw ParseError(line_no, std::string("missing field '") + field + "'");
  if (!it->is_string()) throw ParseError(line_no, std::string("field '") + field + "' is not a string");
  return it->get<std::string>();
}

template <typename Fn>
void for_each_record(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t index = 0;
  while (std::getline(in, line)) {
    const std::size_t line_no = index + 1;
    if (!text::trim(line).empty()) {
      json record;
      try {
        record = json::parse(line);
      } catch (const json::parse_error& e) {
        throw ParseError(line_no, std::string("malformed record: ") + e.what());
      }
      if (!record.is_object()) throw ParseError(line_no, "record is not an object");
      fn(record, index, line_no);
    }
    ++index;
  }
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path.string() + "'");
  return in;
}

}  // namespace

std::vector<StanceExample> parse_stance_records(std::istream& in, const DatasetSpec& spec) {
  spec.validate();
  std::vector<StanceExample> out;
  for_each_record(in, [&](const json& record, std::size_t index, std::size_t line_no) {
    StanceExample ex;
    ex.text = required_string(record, "text", line_no);
    ex.topic = required_string(record, "topic", line_no);
    const std::string label = required_string(record, "label", line_no);
    if (text::trim(ex.text).empty() || text::trim(ex.topic).empty())
      fail(ErrorKind::Validation, "line " + std::to_string(line_no) + ": empty text or topic");
    auto parsed = parse_stance_label(label);
    if (!parsed || !spec.allows(*parsed))
      fail(ErrorKind::Validation, "line " + std::to_string(line_no) + ": label '" + label +
                                      "' is not in the label set of '" + spec.name + "'");
    ex.label = *parsed;
    ex.topic_form = spec.topic_form;
    if (auto id = record.find("id"); id != record.end()) {
      if (!id->is_string()) throw ParseError(line_no, "field 'id' is not a string");
      ex.source_id = id->get<std::string>();
    } else {
      ex.source_id = spec.name + ":" + std::to_string(index);
    }
    out.push_back(std::move(ex));
  });
  if (out.empty()) fail(ErrorKind::EmptyDataset, "dataset '" + spec.name + "' has no records");
  return out;
}

std::vector<StanceExample> load_stance_dataset(const std::filesystem::path& path,
                                               const DatasetSpec& spec) {
  auto in = open_input(path);
  return parse_stance_records(in, spec);
}

void write_stance_records(std::ostream& out, const std::vector<StanceExample>& examples) {
  for (const auto& ex : examples) {
    json record = {{"text", ex.text}, {"topic", ex.topic}, {"label", to_string(ex.label)}};
    if (!ex.source_id.empty()) record["id"] = ex.source_id;
    out << record.dump() << '\n';
  }
}

void write_stance_dataset(const std::filesystem::path& path,
                          const std::vector<StanceExample>& examples) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
  write_stance_records(out, examples);
}

std::vector<NliExample> parse_nli_records(std::istream& in) {
  std::vector<NliExample> out;
  for_each_record(in, [&](const json& record, std::size_t, std::size_t line_no) {
    NliExample ex;
    ex.premise = required_string(record, "premise", line_no);
    ex.hypothesis = required_string(record, "hypothesis", line_no);
    const std::string label = required_string(record, "label", line_no);
    if (text::trim(ex.premise).empty() || text::trim(ex.hypothesis).empty())
      fail(ErrorKind::Validation,
           "line " + std::to_string(line_no) + ": empty premise or hypothesis");
    auto parsed = parse_nli_label(label);
    if (!parsed)
      fail(ErrorKind::Validation,
           "line " + std::to_string(line_no) + ": unknown entailment label '" + label + "'");
    ex.label = *parsed;
    out.push_back(std::move(ex));
  });
  if (out.empty()) fail(ErrorKind::EmptyDataset, "entailment dataset has no records");
  return out;
}

std::vector<NliExample> load_nli_dataset(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_nli_records(in);
}

void write_nli_records(std::ostream& out, const std::vector<NliExample>& examples) {
  for (const auto& ex : examples) {
    json record = {
        {"premise", ex.premise}, {"hypothesis", ex.hypothesis}, {"label", to_string(ex.label)}};
    out << record.dump() << '\n';
  }
}

std::vector<TopicSplit> leave_one_topic_out_splits(const std::vector<StanceExample>& examples) {
  std::vector<std::string> order;
  std::map<std::string, std::size_t> seen;
  for (const auto& ex : examples) {
    if (seen.emplace(ex.topic, order.size()).second) order.push_back(ex.topic);
  }
  if (order.size() < 2)
    fail(ErrorKind::Validation, "leave-one-topic-out needs at least 2 distinct topics");
  std::vector<TopicSplit> splits;
  splits.reserve(order.size());
  for (const auto& topic : order) {
    TopicSplit split;
    split.held_out_topic = topic;
    for (const auto& ex : examples) (ex.topic == topic ? split.test : split.train).push_back(ex);
    splits.push_back(std::move(split));
  }
  return splits;
}

}  // namespace stancekit
