#pragma once

#include <stdexcept>
#include <string>

namespace mvic {

// Structural problems with inputs: bad shapes, unparsable files, invalid
// experiment descriptions. Maps to CLI exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failure states: rank deficiency, non-SPD covariances, degrees of
// freedom too small for a formula to exist. Maps to CLI exit code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Rank-deficient input detected via its smallest singular value (or a failed
// Cholesky factorization, in which case the value is 0).
class SingularityError : public NumericError {
 public:
  SingularityError(const std::string& what, double smallest_singular_value)
      : NumericError(what), smallest_singular_value_(smallest_singular_value) {}

  double smallest_singular_value() const { return smallest_singular_value_; }

 private:
  double smallest_singular_value_;
};

class DegreesOfFreedomError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace mvic
