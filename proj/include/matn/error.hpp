#pragma once

#include <stdexcept>
#include <string>

namespace matn {

// Error taxonomy shared by all modules. The CLI maps these onto exit codes:
// data/parse/io/numeric -> 1, config/usage/format -> 2.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf escaped a numeric kernel. Never silent.
class NumericError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Serialized artifact has wrong magic/version/layout.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace matn
