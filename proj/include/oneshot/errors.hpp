#pragma once

#include <stdexcept>
#include <string>

namespace oneshot {

/// Bad input: wrong dimensions, domain violations, malformed files or configs.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file that could not be parsed. The message carries line and field context.
class ParseError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A computation that produced non-finite values or failed to converge.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace oneshot
