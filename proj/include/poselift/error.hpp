#pragma once

#include <stdexcept>
#include <string>

namespace poselift {

// Process exit codes, one per error class. The CLI maps every thrown
// poselift::Error onto the code of its class.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,   // unclassified
  kExitArgument = 2,  // bad arguments, shapes, state
  kExitIo = 3,        // filesystem problems
  kExitSchema = 4,    // malformed or incompatible files
  kExitNumeric = 5,   // non-convergence, non-finite values
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return kExitFailure; }
};

class ArgumentError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return kExitArgument; }
};

// Dimension mismatch between operands.
class ShapeError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

// Operation invoked before its prerequisites (e.g. backward without forward).
class StateError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

class IoError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return kExitIo; }
};

class SchemaError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return kExitSchema; }
};

// Malformed file content; message names the offending line or record.
class ParseError : public SchemaError {
 public:
  using SchemaError::SchemaError;
};

class NumericError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return kExitNumeric; }
};

}  // namespace poselift
