#ifndef NEGSPAN_ERRORS_HPP
#define NEGSPAN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace negspan {

// Malformed input files (CoNLL, sidecar, embeddings, checkpoints).
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// A caller broke a documented precondition (bad shape, index out of range).
struct ContractViolation : std::logic_error {
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

// Invalid argument values (probability out of range, non-disjoint lexicons).
struct ArgumentError : std::invalid_argument {
  explicit ArgumentError(const std::string& what) : std::invalid_argument(what) {}
};

// Inconsistent run configuration (oracle regime without a sidecar, ...).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Numeric failure during optimization (non-finite loss or gradient).
struct TrainingError : std::runtime_error {
  explicit TrainingError(const std::string& what) : std::runtime_error(what) {}
};

// Checkpoint/vocabulary mismatch or unreadable model file.
struct LoadError : std::runtime_error {
  explicit LoadError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace negspan

#endif  // NEGSPAN_ERRORS_HPP
