#pragma once

#include <stdexcept>
#include <string>

namespace etcon {

/// Raised when a graph, trigger law or scenario violates a standing assumption.
class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a run exceeds its event budget.
class SafetyCapExceeded : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Raised when a quantity is requested for a law it is not defined for.
class NotApplicable : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

}  // namespace etcon
