#pragma once

#include <stdexcept>
#include <string>

namespace abx {

/// Caller misuse: bad argument, dimension mismatch, out-of-order calls.
class UsageError : public std::invalid_argument {
 public:
  explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

/// Invalid configuration: bad dimensions, contradictory experiment setup,
/// unparsable config files.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace abx
