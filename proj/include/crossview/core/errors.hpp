#pragma once

#include <stdexcept>
#include <string>

namespace crossview {

// Bad caller input: shapes, ranges, malformed files.
class InputDomainError : public std::runtime_error {
 public:
  explicit InputDomainError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid configuration values (schedule params, empty splits, ...).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem / codec failures.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Numerics went sideways (non-PSD covariance, broken schedule, ...).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Training diverged; the offending state has been dumped before throwing.
class TrainingError : public std::runtime_error {
 public:
  explicit TrainingError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace crossview
