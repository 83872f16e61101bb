#pragma once

#include <stdexcept>
#include <string>

namespace cbiqa {

// Base of every error thrown by the library. The CLI maps these to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes that do not fit: plane smaller than a patch, d mismatch, empty input.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Out-of-range parameters (gamma <= 1, K > m, nu outside (0, 1], ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Malformed files: bad magic, truncated records, unparsable CSV/TOML.
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace cbiqa
