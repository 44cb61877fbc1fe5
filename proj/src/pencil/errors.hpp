#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pencil {

// Malformed expression text. `offset` is the 1-based byte column of the fault.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Evaluation left the real domain of an operator (division by zero, sqrt of a
// negative, non-finite intermediate, ...).
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inputs violate an operation's precondition: a spectral pole, a grid too
// small for the stencil, an umbilic point, inconsistent boundary data.
class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numerical procedure failed on admissible inputs (blow-up guard,
// non-convergence, orthogonality drift).
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Run configuration is malformed or inconsistent.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pencil
