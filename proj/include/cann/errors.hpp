#pragma once

#include <stdexcept>
#include <string>

namespace cann {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Caller-supplied data is unusable (empty image, short collection, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A precondition of the API was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// A text or binary record could not be parsed.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A parsed record violates a dataset constraint.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Unreadable, truncated, or incompatible checkpoint.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

}  // namespace cann
