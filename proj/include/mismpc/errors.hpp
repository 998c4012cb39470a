#pragma once

#include <stdexcept>
#include <string>

namespace mismpc {

// Error taxonomy used across the library. Callers that can recover catch the
// specific type; everything derives from std::runtime_error except bad inputs.

struct invalid_input : std::invalid_argument {
  explicit invalid_input(const std::string& what) : std::invalid_argument(what) {}
};

struct numerical_overflow : std::runtime_error {
  explicit numerical_overflow(const std::string& what) : std::runtime_error(what) {}
};

struct no_solution : std::runtime_error {
  explicit no_solution(const std::string& what) : std::runtime_error(what) {}
};

struct division_domain : std::runtime_error {
  explicit division_domain(const std::string& what) : std::runtime_error(what) {}
};

struct unsupported : std::runtime_error {
  explicit unsupported(const std::string& what) : std::runtime_error(what) {}
};

struct infeasible_start : std::runtime_error {
  explicit infeasible_start(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mismpc
