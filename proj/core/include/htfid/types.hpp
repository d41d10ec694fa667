#ifndef HTFID_TYPES_HPP
#define HTFID_TYPES_HPP

#include <complex>
#include <stdexcept>
#include <string>

namespace htfid {

using Complex = std::complex<double>;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// Thrown for malformed input files; message carries row/column context.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown for inconsistent options or topology/kind mismatches.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when an identification step cannot proceed (singular system,
// unusable data).  A fit that merely misses tolerance does not throw;
// it returns a model with the quality flag cleared.
struct FitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown for numeric singularities: evaluation at a pole, algebraic
// loops, non-convergent integration.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace htfid

#endif  // HTFID_TYPES_HPP
