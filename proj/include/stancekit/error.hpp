#pragma once

#include <stdexcept>
#include <string>

namespace stancekit {

/// Failure categories. The C API reports these as integer codes and the CLI
/// folds them into three exit classes (usage/validation, external service,
/// internal stage).
enum class ErrorKind {
  Usage,
  Validation,
  Parse,
  EmptyDataset,
  Provider,
  Cache,
  Training,
  PartialCorpus,
  Encoding,
  Plugin,
  Io,
  Internal,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(ErrorKind::Parse, "line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Transport-level failure talking to a completion service. Retriable, and
/// never confused with a filter rejection.
class ProviderError : public Error {
 public:
  explicit ProviderError(const std::string& what) : Error(ErrorKind::Provider, what) {}
};

class TrainingError : public Error {
 public:
  TrainingError(int epoch, std::size_t batch, const std::string& what)
      : Error(ErrorKind::Training, "epoch " + std::to_string(epoch) + ", batch " +
                                       std::to_string(batch) + ": " + what),
        epoch_(epoch),
        batch_(batch) {}
  int epoch() const noexcept { return epoch_; }
  std::size_t batch() const noexcept { return batch_; }

 private:
  int epoch_;
  std::size_t batch_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace stancekit
