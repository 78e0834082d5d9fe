#pragma once

#include <stdexcept>
#include <string>

namespace fincon {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad files, inconsistent dimensions, out-of-range parameters.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A numerical routine could not proceed (non-PD matrix, non-finite draw,
/// singular system).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace fincon
