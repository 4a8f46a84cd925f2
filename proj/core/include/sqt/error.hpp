#pragma once

#include <stdexcept>
#include <string>

namespace sqt {

// Dimension or index mismatch between containers that must agree.
struct ShapeError : std::invalid_argument {
  explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

// Invalid configuration value: unknown id, parameter out of range,
// inconsistent variant settings, misuse of a terminal state.
struct ConfigError : std::invalid_argument {
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Non-finite value where a finite one is required (poisoned update or
// target), or failure of an iterative solver to converge.
struct NumericsError : std::runtime_error {
  explicit NumericsError(const std::string& what) : std::runtime_error(what) {}
};

// Unparseable or schema-mismatched input file.
struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sqt
