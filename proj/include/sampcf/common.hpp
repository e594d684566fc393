#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sampcf {

using NodeId = std::uint32_t;
using Count = std::uint64_t;

// One positive interaction (user, item).
struct Link {
  NodeId user = 0;
  NodeId item = 0;

  friend bool operator==(const Link& a, const Link& b) {
    return a.user == b.user && a.item == b.item;
  }
  friend bool operator<(const Link& a, const Link& b) {
    if (a.user != b.user) return a.user < b.user;
    return a.item < b.item;
  }
};

// Bad option / config-file key. CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or inconsistent input data. CLI maps this to exit code 2.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure (divergence, NaN loss). CLI maps this to exit code 3.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Internal invariant violation.
struct InternalError : std::logic_error {
  explicit InternalError(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace sampcf
