#ifndef HTFID_STRIP_HPP
#define HTFID_STRIP_HPP

#include <cmath>
#include <span>
#include <vector>

#include "htfid/types.hpp"

namespace htfid {

// Poles of a periodically time-varying system repeat at j*m*w0 offsets.
// The principal strip is Im(s) in (-w0/2, w0/2].

inline Complex map_to_strip(Complex lambda, double omega0) {
  const double m = std::floor(lambda.imag() / omega0 + 0.5);
  double im = lambda.imag() - m * omega0;
  if (im > 0.5 * omega0) im -= omega0;
  if (im <= -0.5 * omega0) im += omega0;
  return {lambda.real(), im};
}

// Distance between two poles modulo the j*w0 repetition lattice.
inline double strip_distance(Complex a, Complex b, double omega0,
                             int max_shift = 2) {
  double best = std::abs(a - b);
  for (int m = -max_shift; m <= max_shift; ++m) {
    const double d = std::abs(a - b + Complex(0.0, m * omega0));
    if (d < best) best = d;
  }
  return best;
}

inline std::vector<Complex> in_strip(std::span<const Complex> poles,
                                     double omega0) {
  std::vector<Complex> out;
  for (const Complex& p : poles) {
    if (p.imag() > -0.5 * omega0 && p.imag() <= 0.5 * omega0) out.push_back(p);
  }
  return out;
}

// One representative per Floquet repetition class, mapped to the
// principal strip.  A pole sitting numerically on the strip boundary
// (the parametric-resonance case, Im = w0/2 exactly) keeps a single
// representative regardless of which side its copies landed on.
inline std::vector<Complex> strip_representatives(
    std::span<const Complex> poles, double omega0,
    double dedupe_rel_tol = 1e-6) {
  std::vector<Complex> out;
  for (const Complex& p : poles) {
    const Complex rep = map_to_strip(p, omega0);
    bool dup = false;
    for (const Complex& q : out) {
      if (strip_distance(rep, q, omega0) <=
          dedupe_rel_tol * std::max(std::abs(q), 1.0)) {
        dup = true;
        break;
      }
    }
    if (!dup) out.push_back(rep);
  }
  return out;
}

}  // namespace htfid

#endif  // HTFID_STRIP_HPP
