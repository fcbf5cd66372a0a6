#pragma once

#include <stdexcept>
#include <string>

namespace rrpi {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-range input (bad shapes, invalid distributions, bad config).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A fixed-point loop hit its iteration cap. All loops in this library iterate
/// contractions, so this means the inputs or the configuration are wrong.
class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& where, int iterations, double residual)
      : Error(where + ": no convergence after " + std::to_string(iterations) +
              " iterations (last residual " + std::to_string(residual) + ")"),
        iterations_(iterations),
        residual_(residual) {}

  int iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }

 private:
  int iterations_;
  double residual_;
};

/// The outer loop observed J decrease beyond tolerance.
class TheoremViolation : public Error {
 public:
  using Error::Error;
};

/// File or stream failure.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace rrpi
