#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace olap {

/// Linear predictor left the range where exp() is representable.
class OverflowError : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

/// Vector/matrix sizes disagree with the support or dataset they are used with.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Inputs violate a documented precondition (bad config, bad data, bad range).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// CSV/config parse failure. Line and column are 1-based; 0 means unknown.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : ValidationError(what), line_(line), column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Numerical failure that "cannot happen" in exact arithmetic. Carries the
/// active indices (0-based) of the offending model.
class DiagnosticsError : public std::runtime_error {
 public:
  DiagnosticsError(const std::string& what, std::vector<std::size_t> active)
      : std::runtime_error(what), active_(std::move(active)) {}
  const std::vector<std::size_t>& active() const { return active_; }

 private:
  std::vector<std::size_t> active_;
};

}  // namespace olap
