#pragma once

#include <stdexcept>
#include <string>

namespace rankone {

// Input outside the domain of an operation (non-integrable weight, point
// on the support, shared nodes, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// An iterative method hit its iteration cap.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or invariant-violating user input (scenario files, measures).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace rankone
