#pragma once

#include <stdexcept>
#include <string>

namespace igs {

/// Invalid configuration or incompatible shapes. Maps to CLI exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dataset files that are missing or malformed. Maps to CLI exit code 1.
class IngestionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Violated precondition of an operation (empty split, non-scalar root, ...).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// NaN/Inf produced during evaluation or training.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace igs
