#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace akpz {

struct error : std::runtime_error {
  explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad user input: malformed config file, out-of-range parameter.
struct config_error : error {
  explicit config_error(const std::string& msg) : error(msg) {}
};

// A lattice window does not cover the data a computation needs.
struct window_error : error {
  explicit window_error(const std::string& msg) : error(msg) {}
};

// A structural invariant of a configuration or field is broken.
struct invariant_error : error {
  explicit invariant_error(const std::string& msg) : error(msg) {}
};

// A request would exceed a configured memory budget.
struct budget_error : error {
  explicit budget_error(const std::string& msg) : error(msg) {}
};

}  // namespace akpz
