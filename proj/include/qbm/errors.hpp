#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qbm {

/// Input violated an operation's precondition (bad dimension, index, value).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed row or header in a data file. `line()` is 1-based.
class FormatError : public InvalidInput {
 public:
  FormatError(std::size_t line, const std::string& what)
      : InvalidInput(what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Request exceeds what an operation supports (enumeration limits, too few
/// groups for a split).
class CapabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Metric is not defined for the given inputs (e.g. AUC with one class).
class UndefinedMetric : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Failure reading a persisted model or data file.
class LoadError : public std::runtime_error {
 public:
  enum class Kind { kMissingFile, kCorruptFile, kVersionMismatch, kWrongKind };

  LoadError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace qbm
