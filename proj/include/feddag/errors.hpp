#pragma once

#include <stdexcept>
#include <string>

namespace feddag {

/// Raised when a caller violates an operation's preconditions
/// (dimension mismatch, out-of-range hyperparameter, empty input).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Training produced non-finite values or the feature space collapsed.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractError(message);
}

}  // namespace feddag
