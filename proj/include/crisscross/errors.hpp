#pragma once

#include <stdexcept>
#include <string>

namespace crisscross {

// Invalid configuration or arguments. CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input outside a mathematical domain (sigma <= 0, link singularity, ...).
// Treated as a configuration problem by the CLI.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Malformed or inconsistent data. CLI exit code 3.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Solver non-convergence, singular systems, failed quadrature. CLI exit code 4.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace crisscross
