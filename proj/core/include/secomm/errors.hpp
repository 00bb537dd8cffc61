#pragma once

#include <stdexcept>
#include <string>

namespace secomm {

// Thrown when an input file is missing or unreadable.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when a file parses but violates the expected layout
// (ragged rows, out-of-range node ids, unknown tokens).
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape mismatch between operands of a matrix operation.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Violated precondition of an API call (bad sizes, empty inputs, ...).
struct ContractError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// NaN/Inf detected where a finite value is required.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed command line or configuration (maps to exit code 2).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ContractError(msg);
}

inline void require_shape(bool cond, const std::string& msg) {
  if (!cond) throw DimensionError(msg);
}

}  // namespace secomm
