#pragma once

#include <stdexcept>
#include <string>

namespace hcqrf {

// Invalid command line or run configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (CLI exit code 3).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical failure: degenerate designs, empty risk sets, singular systems
// (CLI exit code 4).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace hcqrf
