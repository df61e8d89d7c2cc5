#pragma once

#include <stdexcept>
#include <string>

namespace calibre {

/// Input violates a documented contract (bad row, label out of range, bad flag value).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed file content. Reported as a validation failure by the CLI.
class ParseError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Factorization or other numerical breakdown (non-SPD system, NaN input).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace calibre
