#pragma once

#include <stdexcept>
#include <string>

namespace lne {

/// Thrown when an iterative solver fails to converge within its iteration
/// budget. Carries enough context (iterations, residual) for diagnostics.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, std::size_t iterations, double residual)
      : std::runtime_error(what), iterations_(iterations), residual_(residual) {}

  std::size_t iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }

 private:
  std::size_t iterations_;
  double residual_;
};

}  // namespace lne
