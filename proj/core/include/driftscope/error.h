#pragma once

#include <stdexcept>

namespace driftscope {

// Invalid configuration, arguments or preconditions.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input or data that does not conform to its schema.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace driftscope
