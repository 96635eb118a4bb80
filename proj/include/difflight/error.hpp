#pragma once

#include <stdexcept>
#include <string>

namespace difflight {

// Precondition violated by a numeric argument (negative length, beta outside (0,1), ...).
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// Tensor or layer shapes that do not line up.
class ShapeError : public std::invalid_argument {
 public:
  explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

// Malformed workload document or config file.
class SchemaError : public std::runtime_error {
 public:
  explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

// Architecture config that cannot be built (waveguide limit, link budget).
class InfeasibleConfig : public std::runtime_error {
 public:
  explicit InfeasibleConfig(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace difflight
