#pragma once

#include <stdexcept>
#include <string>

namespace ogsf {

// Root of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not conform to what an operation requires.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A documented precondition was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Operation is illegal in the current object state (e.g. a consumed graph).
class StateError : public Error {
 public:
  using Error::Error;
};

class UnsupportedPrimitive : public Error {
 public:
  using Error::Error;
};

// Binary file has an unexpected magic number or version.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Binary file is shorter than its header promises.
class LengthError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Dataset content is unusable for the requested workflow.
class DataError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Non-finite loss or gradient encountered.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace ogsf
