#pragma once

#include <stdexcept>
#include <string>

namespace qe {

// Base of every error raised by the library. The CLI maps the concrete kind
// to a process exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class UsageError : public Error { using Error::Error; };
class DataError : public Error { using Error::Error; };
class FormatError : public Error { using Error::Error; };
class BindingError : public Error { using Error::Error; };
class ComputationError : public Error { using Error::Error; };
class NumericError : public Error { using Error::Error; };

}  // namespace qe
