#pragma once

#include <stdexcept>
#include <string>

namespace cet {

// Error taxonomy shared across modules. The CLI maps these onto exit codes:
// usage errors -> 1, DataError/ConfigError -> 2, NumericError -> 3.

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Violation of an internal API contract (missing gradient, write to a
// frozen parameter, unstandardized input where standardized is required).
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace cet
