#ifndef HTFID_TESTS_HELPERS_HPP
#define HTFID_TESTS_HELPERS_HPP

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "htfid/freqdata.hpp"
#include "htfid/oracle.hpp"
#include "htfid/strip.hpp"
#include "htfid/types.hpp"

namespace testutil {

using htfid::Complex;

inline double ulp_of(double x) {
  const double a = std::abs(x);
  return std::nextafter(a, std::numeric_limits<double>::infinity()) - a;
}

inline bool within_ulps(double a, double b, int n) {
  if (a == b) return true;
  return std::abs(a - b) <=
         n * ulp_of(std::max(std::abs(a), std::abs(b)));
}

inline bool within_ulps(Complex a, Complex b, int n) {
  return within_ulps(a.real(), b.real(), n) &&
         within_ulps(a.imag(), b.imag(), n);
}

// Round-trip comparison at the scale of the sideband pair: the Hermitian
// transform mixes H_k with H_{-k}, so the reconstruction error floor is
// eps * max(|H_k|, |H_{-k}|) regardless of how small one member is.
inline bool round_trip_close(Complex back, Complex orig, double pair_scale,
                             int n) {
  const double tol = n * ulp_of(pair_scale);
  return std::abs(back.real() - orig.real()) <= tol &&
         std::abs(back.imag() - orig.imag()) <= tol;
}

// --- polynomial utilities (independent oracle for root-locus checks) ---

// coefficients ascending in s: c[0] + c[1] s + c[2] s^2 + ...
inline std::vector<Complex> poly_mul(const std::vector<Complex>& a,
                                     const std::vector<Complex>& b) {
  std::vector<Complex> out(a.size() + b.size() - 1, Complex(0, 0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

inline std::vector<Complex> poly_from_roots(const std::vector<Complex>& roots) {
  std::vector<Complex> p{Complex(1, 0)};
  for (const Complex& r : roots) p = poly_mul(p, {-r, Complex(1, 0)});
  return p;
}

// roots via the companion matrix of the monic polynomial
inline std::vector<Complex> companion_roots(std::vector<Complex> coeffs) {
  while (coeffs.size() > 1 && std::abs(coeffs.back()) == 0.0)
    coeffs.pop_back();
  const std::size_t deg = coeffs.size() - 1;
  if (deg == 0) return {};
  const Complex lead = coeffs.back();
  Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(deg, deg);
  for (std::size_t i = 0; i + 1 < deg; ++i) comp(i + 1, i) = 1.0;
  for (std::size_t i = 0; i < deg; ++i) comp(i, deg - 1) = -coeffs[i] / lead;
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(comp, false);
  return {es.eigenvalues().data(),
          es.eigenvalues().data() + es.eigenvalues().size()};
}

// characteristic polynomial of 1 + K H0(s) = 0 for a partial-fraction H0:
//   prod(s - p_i)(1 + K d) + K sum_i r_i prod_{j != i}(s - p_j)
inline std::vector<Complex> root_locus_poly(const std::vector<Complex>& poles,
                                            const std::vector<Complex>& residues,
                                            Complex d, double k) {
  std::vector<Complex> acc = poly_from_roots(poles);
  for (Complex& c : acc) c *= (1.0 + k * d);
  for (std::size_t i = 0; i < poles.size(); ++i) {
    std::vector<Complex> others;
    for (std::size_t j = 0; j < poles.size(); ++j)
      if (j != i) others.push_back(poles[j]);
    std::vector<Complex> term = poly_from_roots(others);
    for (std::size_t c = 0; c < term.size(); ++c)
      acc[c] += k * residues[i] * term[c];
  }
  return acc;
}

// --- pole-set matching ---

// max over `expect` of the distance to the nearest element of `got`,
// relative to |expect|; omega0 > 0 matches modulo the j*m*w0 lattice.
inline double worst_match(const std::vector<Complex>& got,
                          const std::vector<Complex>& expect,
                          double omega0 = 0.0) {
  double worst = 0.0;
  for (const Complex& e : expect) {
    double best = std::numeric_limits<double>::infinity();
    for (const Complex& g : got) {
      const double d = omega0 > 0.0 ? htfid::strip_distance(g, e, omega0)
                                    : std::abs(g - e);
      best = std::min(best, d);
    }
    worst = std::max(worst, best / std::max(std::abs(e), 1.0));
  }
  return worst;
}

// --- data generators ---

inline htfid::FrequencyGrid linear_grid(double lo_hz, double hi_hz, int points,
                                        double f0_hz, int nh) {
  htfid::FrequencyGrid grid;
  grid.points_hz.resize(points);
  for (int i = 0; i < points; ++i)
    grid.points_hz[i] = lo_hz + (hi_hz - lo_hz) * i / (points - 1);
  grid.f0_hz = f0_hz;
  grid.nh = nh;
  return grid;
}

inline htfid::SidebandResponseSet random_response_set(std::mt19937& rng,
                                                      int nh, int points) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const htfid::FrequencyGrid grid = linear_grid(1e8, 6e8, points, 1e9, nh);
  std::vector<std::vector<Complex>> responses(2 * nh + 1);
  for (auto& v : responses) {
    v.resize(points);
    for (auto& z : v) z = Complex(unit(rng), unit(rng));
  }
  return {grid, htfid::ResponseKind::Impedance, std::move(responses)};
}

// --- reference Mathieu configuration (regression constants) ---

inline htfid::MathieuSpec strong_pump_mathieu(
    htfid::MathieuOutput output = htfid::MathieuOutput::Velocity) {
  htfid::MathieuSpec spec;
  spec.omega_n = htfid::kTwoPi * 5.0e8;  // resonance at half the pump
  spec.zeta = 0.02;
  spec.epsilon = 0.3;
  spec.omega0 = htfid::kTwoPi * 1.0e9;
  spec.output = output;
  return spec;
}

inline constexpr int kOracleTrunc = 18;  // 2*NH + 2 for NH = 8

// dominant (max real part) retained eigenvalue of the closed-loop operator
inline double dominant_real_part(const htfid::PltvSystem& sys, double k_gain,
                                 int m_trunc) {
  const auto poles = htfid::closed_loop_poles_direct(sys, k_gain, m_trunc);
  double worst = -std::numeric_limits<double>::infinity();
  for (const Complex& p : poles) worst = std::max(worst, p.real());
  return worst;
}

// bisection on the dominant real part: the independent stabilization
// threshold oracle
inline double bisect_threshold(const htfid::PltvSystem& sys, int m_trunc,
                               double k_lo, double k_hi,
                               double rel_tol = 1e-6) {
  double lo = k_lo, hi = k_hi;
  if (!(dominant_real_part(sys, lo, m_trunc) > 0.0) ||
      !(dominant_real_part(sys, hi, m_trunc) < 0.0))
    throw std::runtime_error("bisection bracket does not straddle the threshold");
  while ((hi - lo) > rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    if (dominant_real_part(sys, mid, m_trunc) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// --- scratch files ---

class TempDir {
 public:
  TempDir() {
    const auto base = std::filesystem::temp_directory_path();
    for (int i = 0; i < 10000; ++i) {
      auto candidate = base / ("htfid_test_" + std::to_string(counter_++));
      std::error_code ec;
      if (std::filesystem::create_directory(candidate, ec)) {
        path_ = candidate;
        return;
      }
    }
    throw std::runtime_error("cannot create temp dir");
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  static inline int counter_ = 0;
  std::filesystem::path path_;
};

}  // namespace testutil

#endif  // HTFID_TESTS_HELPERS_HPP
