#ifndef METRICQ_ERROR_HPP
#define METRICQ_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace metricq {

/// Input violates a documented precondition (wrong dimension, invalid
/// parameter, point outside its space).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical routine could not produce a trustworthy result.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed dataset text. Line and column are 1-based; column 0 means the
/// whole line.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ", column " +
                           std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace metricq

#endif  // METRICQ_ERROR_HPP
