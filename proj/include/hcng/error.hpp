#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hcng {

// Scenario or configuration content that violates a documented invariant.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

// Malformed input file (syntax, missing keys, wrong types).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A solve ended without an optimal point (infeasible, unbounded, numerical).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An iterative protocol (ADMM, blend loop, C&CG, BCD) hit its iteration cap.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of a formula.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace hcng
