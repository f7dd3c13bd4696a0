#pragma once

#include <stdexcept>
#include <string>

namespace epam {

/// Base for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: malformed files, violated invariants, inconsistent arguments.
/// The CLI maps these to exit status 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Model files with a wrong magic, version, size or checksum.
class FormatError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Factorization or optimization breakdown. The CLI maps these to exit status 3.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace epam
