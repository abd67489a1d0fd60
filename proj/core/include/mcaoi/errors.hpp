#pragma once

#include <stdexcept>
#include <string>

namespace mcaoi {

// Argument outside the mathematical domain of an operation (negative SNR,
// zero-order gamma, mismatched matrix dimensions, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A closed form diverges: average BLEP of 1 means no update is ever
// delivered and every age metric is infinite.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// No number of connections satisfies the optimizer constraints.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(std::string constraint, const std::string& what)
      : std::runtime_error(what), constraint_(std::move(constraint)) {}

  const std::string& constraint() const noexcept { return constraint_; }

 private:
  std::string constraint_;
};

// Quadrature or iteration failed to reach its tolerance.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mcaoi
