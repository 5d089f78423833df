#pragma once

#include <stdexcept>
#include <string>

namespace activetest {

/// Malformed or out-of-contract input data. The CLI maps this to exit code 3.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or infeasible configuration (H < 2, M < H_eff, delta <= 0, ...).
/// The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace activetest
