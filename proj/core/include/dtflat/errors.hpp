#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dtflat {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t position)
      : Error("parse error at " + std::to_string(position) + ": " + message),
        position_(position) {}

  [[nodiscard]] std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

class MissingVariableError : public Error {
 public:
  using Error::Error;
};

class DivisionNearZeroError : public Error {
 public:
  using Error::Error;
};

// Backward shifts need the inverse map of the extended system; systems
// loaded without one can only be shifted forward.
class MissingInverseError : public Error {
 public:
  using Error::Error;
};

class SingularTrajectoryError : public Error {
 public:
  using Error::Error;
};

class SingularParameterizationError : public Error {
 public:
  using Error::Error;
};

class NoConvergenceError : public Error {
 public:
  using Error::Error;
};

// Raised when an exclusion predicate (or evaluation failures) rejected every
// candidate sample, so a verification verdict would be vacuous.
class AllSamplesSingularError : public Error {
 public:
  using Error::Error;
};

class FileFormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace dtflat
