#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace segflow {

// Shapes disagree (matmul inner dims, concat row counts, mse operands).
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A documented precondition was violated by the caller.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Input data is well-formed but inconsistent (decreasing timestamps,
// overlapping segments, structures that do not cover the lyrics).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// NaN/Inf showed up during training or sampling.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace segflow
