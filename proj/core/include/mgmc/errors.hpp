#pragma once

#include <stdexcept>
#include <string>

namespace mgmc {

/// Malformed or out-of-contract caller input.
struct InvalidInputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Problem size exceeds what a dense code path supports.
struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Numerical failure: NaN/Inf, diverging solver, failed factorization.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// File parsing failure, carries path and line context in the message.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace mgmc
