// Exception hierarchy shared by all attnlab components.
#pragma once

#include <stdexcept>
#include <string>

namespace attnlab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dimension mismatch between tensors.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Value outside its documented domain (token id, level k, N <= 0, ...).
class RangeError : public Error {
 public:
  using Error::Error;
};

// Malformed text input (JSON, CSV, merges file).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Malformed binary container (bad magic, truncation, offsets).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Structurally valid input that does not match the expected contract
// (wrong vocab size, missing tensor, shape mismatch against config).
class CompatError : public Error {
 public:
  using Error::Error;
};

// Invalid experiment / run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// API contract violation (reused cache, fully-masked softmax row,
// no valid loss targets).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Non-finite value where finiteness is an invariant.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace attnlab
