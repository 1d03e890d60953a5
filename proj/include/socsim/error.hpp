#pragma once

#include <stdexcept>
#include <string>

namespace socsim {

/// Invalid configuration or model input, detected before any simulation work.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A malformed record in a match log. `line` is 1-based; `last_valid` is the index of the
/// last record that parsed, or -1 when none did.
class LogParseError : public std::runtime_error {
 public:
  LogParseError(const std::string& what, long line, long last_valid)
      : std::runtime_error(what), line(line), last_valid(last_valid) {}
  long line;
  long last_valid;
};

}  // namespace socsim
