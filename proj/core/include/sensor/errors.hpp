#pragma once

#include <stdexcept>
#include <string>

namespace sensor {

/// Unrecoverable runtime failure (I/O, non-finite losses, protocol misuse).
class FatalError : public std::runtime_error {
 public:
  explicit FatalError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad configuration or malformed inputs (shape mismatches, unknown keys).
class ConfigError : public FatalError {
 public:
  explicit ConfigError(const std::string& msg) : FatalError(msg) {}
};

}  // namespace sensor
