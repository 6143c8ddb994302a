#pragma once

#include <stdexcept>
#include <string>

namespace twpa {

// Error categories map one-to-one onto CLI exit codes.

/// Malformed configuration, schema violation or unreadable input file.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A fit did not converge or the data could not identify the parameters.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Singular operating point, integrator instability and similar failures.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace twpa
