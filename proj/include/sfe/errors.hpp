#pragma once
#include <stdexcept>
#include <string>

namespace sfe {

// Thrown for malformed input files (case files, JSON documents).
struct parse_error : std::runtime_error {
  explicit parse_error(const std::string& m) : std::runtime_error(m) {}
};

// Thrown when a market or request violates a model assumption or precondition.
struct validation_error : std::runtime_error {
  explicit validation_error(const std::string& m) : std::runtime_error(m) {}
};

// Thrown when a topology/operation is outside the supported class
// (e.g. a network that is not weakly cyclic where that is required).
struct unsupported_error : std::runtime_error {
  explicit unsupported_error(const std::string& m) : std::runtime_error(m) {}
};

// Thrown when a numeric routine cannot reach its accuracy contract.
struct solver_error : std::runtime_error {
  explicit solver_error(const std::string& m) : std::runtime_error(m) {}
};

}  // namespace sfe
