#pragma once

#include <stdexcept>
#include <string>

namespace bcirepair {

/// Raised for violated preconditions and malformed inputs anywhere in the pipeline.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised while validating a run configuration; the CLI maps it to exit code 1.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace bcirepair
