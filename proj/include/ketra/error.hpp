#pragma once

#include <stdexcept>
#include <string>

namespace ketra {

/// Malformed input file or unparsable token.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Arguments or data that violate a documented precondition.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A linear system or decomposition that cannot be solved as requested.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ketra
