#pragma once

#include <stdexcept>
#include <string>

namespace fogsched {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user-supplied configuration or input file. The CLI maps this to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed dataset/infrastructure/checkpoint content.
class ParseError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

}  // namespace fogsched
