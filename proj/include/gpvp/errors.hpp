#pragma once

#include <stdexcept>
#include <string>

namespace gpvp {

// Base of every error raised by the library. The CLI maps the two families
// below onto distinct exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad caller input: arguments, shapes, file contents. Exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class FormatError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class LengthError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class InsufficientDataError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class UndefinedMetricError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Failure of a numerical routine on otherwise valid input. Exit code 3.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class StabilityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace gpvp
