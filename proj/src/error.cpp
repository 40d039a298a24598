#include "stancekit/error.hpp"

namespace stancekit {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage: return "usage";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::EmptyDataset: return "empty_dataset";
    case ErrorKind::Provider: return "provider";
    case ErrorKind::Cache: return "cache";
    case ErrorKind::Training: return "training";
    case ErrorKind::PartialCorpus: return "partial_corpus";
    case ErrorKind::Encoding: return "encoding";
    case ErrorKind::Plugin: return "plugin";
    case ErrorKind::Io: return "io";
    case ErrorKind::Internal: return "internal";
  }
  return "internal";
}

}  // namespace stancekit
