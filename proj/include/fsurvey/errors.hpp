#pragma once

#include <stdexcept>
#include <string>

namespace fsurvey {

/// Invalid configuration or violated input contract.
class config_error : public std::invalid_argument {
 public:
  explicit config_error(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Numerical routine failed to meet its accuracy/convergence contract.
class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A sampling design cannot support the requested estimator
/// (e.g. a pair inclusion probability of zero).
class design_violation : public std::runtime_error {
 public:
  explicit design_violation(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace fsurvey
