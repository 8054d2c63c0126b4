#pragma once

#include <stdexcept>
#include <string>

namespace vprop {

// Invalid arguments are reported with std::invalid_argument. The types below
// cover the remaining failure kinds.

/// An operation was requested in a state that does not allow it, such as
/// stepping an environment after its episode ended.
class InvalidState : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A table or solve would exceed a fixed memory/size budget.
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// A configuration value is malformed, unknown, or out of bounds.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(key.empty() ? message : "config key '" + key + "': " + message),
        key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace vprop
