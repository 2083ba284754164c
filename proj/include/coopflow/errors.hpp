#pragma once

#include <stdexcept>
#include <string>

namespace coopflow {

/// A caller-supplied argument violates an operation's precondition.
class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Two nodes coincide at a linearization point, so the range Jacobian is undefined.
class SingularGeometry : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A factorization or inversion failed.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every importance weight vanished (or became NaN) after exponentiation.
class DegenerateWeights : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration parse or validation failure. `key()` names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(key.empty() ? message : key + ": " + message), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace coopflow
