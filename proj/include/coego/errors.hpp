#pragma once

#include <stdexcept>
#include <string>

namespace coego {

struct FrameMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidGrid : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct RoiOutOfBounds : std::out_of_range {
  using std::out_of_range::out_of_range;
};

struct DescriberUnavailable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Scenario loading. ParseError covers malformed input and unknown keys;
// ValidationError covers well-formed values that break an invariant.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : ConfigError {
  using ConfigError::ConfigError;
};

struct ValidationError : ConfigError {
  ValidationError(std::string field, const std::string& what)
      : ConfigError(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct TraceFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace coego
