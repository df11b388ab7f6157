#pragma once

#include <stdexcept>
#include <string>

namespace chmix {

// Error families map one-to-one onto the C API status codes and the CLI exit
// codes: configuration -> 1, numerical -> 2, I/O -> 3.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

/// Power iteration / bracketing failed to produce an estimate.
class EstimationError : public NumericError {
 public:
  EstimationError(const std::string& what, double lower, double upper)
      : NumericError(what), lower_(lower), upper_(upper) {}
  double lower() const { return lower_; }
  double upper() const { return upper_; }

 private:
  double lower_;
  double upper_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace chmix
