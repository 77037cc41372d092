#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sparfima {

enum class ErrorKind {
  invalid_argument,
  invalid_state,
  domain,
  numerical_failure,
  unsupported_matrix,
  convergence_failure,
  degenerate_geometry,
  degenerate_input,
  unsupported_layout,
  parse,
  io,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Raised by the truncated binomial series when max_terms is hit first.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& message, double achieved_bound)
      : Error(ErrorKind::convergence_failure, message), achieved_bound_(achieved_bound) {}

  double achieved_bound() const noexcept { return achieved_bound_; }

 private:
  double achieved_bound_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line)
      : Error(ErrorKind::parse, "line " + std::to_string(line) + ": " + message), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace sparfima
