#pragma once

#include <stdexcept>
#include <string>

namespace holotrack {

/// Invalid parameters, unknown configuration keys, bad command-line usage.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Problems with the input data itself: unreadable images, shape mismatches,
/// numerical corruption.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace holotrack
