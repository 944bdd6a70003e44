#ifndef THUNDERNNA_ERRORS_HPP
#define THUNDERNNA_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace thundernna {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or layer extents that do not compose.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A precondition on an argument value was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

// data-io failures. Each malformed-input case gets its own type so callers
// (and tests) can tell them apart without parsing messages.
class IoError : public Error {
 public:
  using Error::Error;
};
class BadMagicError : public IoError {
 public:
  using IoError::IoError;
};
class TruncatedError : public IoError {
 public:
  using IoError::IoError;
};
class CountMismatchError : public IoError {
 public:
  using IoError::IoError;
};
class VersionMismatchError : public IoError {
 public:
  using IoError::IoError;
};
class PayloadLengthError : public IoError {
 public:
  using IoError::IoError;
};

}  // namespace thundernna

#endif  // THUNDERNNA_ERRORS_HPP
