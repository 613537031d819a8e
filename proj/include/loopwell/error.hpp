#pragma once

#include <stdexcept>
#include <string>

namespace loopwell {

// Violated pre/postcondition of a numerical operation (truncation too short,
// non-Hermitian input, divisibility failure, ...). Maps to CLI exit code 1.
class ContractError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a basis truncation is too small for the requested window.
class TruncationError : public ContractError {
 public:
  using ContractError::ContractError;
};

// Malformed or schema-violating input configuration. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace loopwell
