#pragma once

#include <stdexcept>

namespace kpg {

// Dimension mismatch between an input and a model or matrix.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Violated precondition on an argument value.
struct ContractError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A non-finite value appeared where a finite one is required.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Config text could not be parsed; the message names the offending key.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace kpg
