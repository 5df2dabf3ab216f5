#pragma once

#include <stdexcept>
#include <string>

namespace stj {

/// Raised for unknown/invalid configuration keys or values.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when an input file cannot be parsed; the message names the
/// offending file and line.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when a command needs an upstream artifact that does not exist.
struct MissingArtifact : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when a metric has no defined value (e.g. single-class AUROC).
struct MetricUndefined : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace stj
