#ifndef HTFID_VECFIT_HPP
#define HTFID_VECFIT_HPP

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "htfid/freqdata.hpp"
#include "htfid/types.hpp"

namespace htfid {

enum class Weighting { Uniform, InverseMagnitude };
enum class CoeffField { Real, Complex };

struct FitConfig {
  int order_min = 2;
  int order_max = 50;
  int max_iterations = 30;
  double rms_tolerance = 1e-4;   // relative RMS over all elements
  Weighting weighting = Weighting::InverseMagnitude;
};

// Common-pole rational model of a vector of responses:
//   H_e(s) = sum_i residues[i][e] / (s - poles[i]) + direct[e]
// A Real coeff_field model has poles and residues closed under
// conjugation, so each element evaluates to conj-symmetric responses.
struct RationalModel {
  std::vector<Complex> poles;                  // rad/s
  std::vector<std::vector<Complex>> residues;  // [pole][element]
  std::vector<Complex> direct;                 // [element]
  CoeffField coeff_field = CoeffField::Real;

  // fit metadata
  double achieved_rms = 0.0;
  int iterations = 0;
  bool converged = true;

  int order() const { return static_cast<int>(poles.size()); }
  int element_count() const { return static_cast<int>(direct.size()); }
};

// Diagonal canonical realization shared by the SISO element vector
// (inputs() == 1) and the assembled multi-sideband matrix.
struct StateSpaceRealization {
  Eigen::VectorXcd a_diag;  // poles on the diagonal of A
  Eigen::MatrixXcd b;       // order x inputs
  Eigen::MatrixXcd c;       // outputs x order
  Eigen::MatrixXcd d;       // outputs x inputs

  int order() const { return static_cast<int>(a_diag.size()); }
  int inputs() const { return static_cast<int>(b.cols()); }
  int outputs() const { return static_cast<int>(c.rows()); }
};

// Conjugate pole pairs with imaginary parts log-spaced over the grid band
// and real parts -imag/100; an odd order adds one real pole at -w_max.
std::vector<Complex> initial_poles(const FrequencyGrid& grid, int order);

struct IterateResult {
  std::vector<Complex> poles;  // relocated: zeros of the sigma function
  double rel_rms;              // relative RMS of a residue fit at the new poles
};

// One pole-relocation step of the vector-fitting iteration (relaxed
// nontriviality constraint).  The returned poles are the raw zeros of
// sigma; no stability reflection is applied here.
IterateResult vf_iterate(const HermitianResponseSet& data,
                         const std::vector<Complex>& poles,
                         const FitConfig& cfg);

// Order-escalating vector fit.  Relocation trajectories use left-half-plane
// reflected basis poles for numerical health, but the returned model keeps
// the final sigma zeros as-is: right-half-plane poles are the signal.
RationalModel fit(const HermitianResponseSet& data, const FitConfig& cfg);

// Reverses the Hermitian transform on a fitted element vector ordered
// ~H_{-n}..~H_n: element H_k gets residues r(~H_k) - j r(~H_{-k}),
// H_{-k} gets r(~H_k) + j r(~H_{-k}), H_0 passes through.  Poles are
// shared and unchanged; the result has complex coefficients.
RationalModel recombine(const RationalModel& h_tilde, int n);

StateSpaceRealization realize(const RationalModel& model);

// Samples per element at s = jw; throws NumericError within
// 1e-12*|p| of a pole.
std::vector<std::vector<Complex>> evaluate(const RationalModel& model,
                                           std::span<const double> omega);
std::vector<std::vector<Complex>> evaluate(const StateSpaceRealization& ss,
                                           std::span<const double> omega);

// Serialization (key-value tree, JSON): f0_hz, coeff_field, poles,
// residues[pole][element], direct terms, element labels, fit metadata.
void save_model(const RationalModel& model, double f0_hz,
                const std::vector<std::string>& element_labels,
                const std::string& path);
RationalModel load_model(const std::string& path, double* f0_hz = nullptr,
                         std::vector<std::string>* element_labels = nullptr);

}  // namespace htfid

#endif  // HTFID_VECFIT_HPP
