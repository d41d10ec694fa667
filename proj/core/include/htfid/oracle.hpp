#ifndef HTFID_ORACLE_HPP
#define HTFID_ORACLE_HPP

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "htfid/freqdata.hpp"
#include "htfid/types.hpp"

namespace htfid {

// Synthetic periodic linear time-varying system with known Fourier
// coefficients of the state-space matrices:
//   xdot(t) = G(t) x(t) + B(t) u(t)
//   y(t)    = C(t) x(t) + D(t) u(t)
// G(t) = sum_m G_m exp(j m w0 t), with G_{-m} = conj(G_m) so the
// reconstructed matrices are real.  Scalar input and output.
struct PltvSystem {
  double omega0 = 0.0;
  int state_dim = 0;
  std::map<int, Eigen::MatrixXcd> g_coeffs;  // state_dim x state_dim
  std::map<int, Eigen::MatrixXcd> b_coeffs;  // state_dim x 1
  std::map<int, Eigen::MatrixXcd> c_coeffs;  // 1 x state_dim
  std::map<int, Eigen::MatrixXcd> d_coeffs;  // 1 x 1

  int max_harmonic() const;
  // Throws std::invalid_argument on shape or conjugate-symmetry violations.
  void validate() const;

  Eigen::MatrixXd g_at(double t) const;
  Eigen::MatrixXd b_at(double t) const;
  Eigen::MatrixXd c_at(double t) const;
  Eigen::MatrixXd d_at(double t) const;
};

// Truncated harmonic state-space operator: block Toeplitz matrices of
// the Fourier coefficients for sidebands m in [-M, M], plus the modulation
// matrix N = blkdiag{ j m w0 I }.  The open-loop dynamics matrix is
// Ghat - N.
struct HarmonicStateSpace {
  int m_trunc = 0;  // M
  double omega0 = 0.0;
  int state_dim = 0;
  Eigen::MatrixXcd ghat;  // (2M+1)*sd x (2M+1)*sd
  Eigen::MatrixXcd bhat;  // (2M+1)*sd x (2M+1)
  Eigen::MatrixXcd chat;  // (2M+1)   x (2M+1)*sd
  Eigen::MatrixXcd dhat;  // (2M+1)   x (2M+1)

  int blocks() const { return 2 * m_trunc + 1; }
  Eigen::MatrixXcd dynamics() const;  // Ghat - N
};

enum class MathieuOutput { Position, Velocity };

// Damped Mathieu oscillator with force input:
//   x1' = x2
//   x2' = -wn^2 (1 + eps cos(w0 t)) x1 - 2 zeta wn x2 + u
struct MathieuSpec {
  double omega_n = 0.0;  // rad/s
  double zeta = 0.0;
  double epsilon = 0.0;
  double omega0 = 0.0;  // pump, rad/s
  MathieuOutput output = MathieuOutput::Position;
};

HarmonicStateSpace assemble(const PltvSystem& sys, int m_trunc);

// Central column of the analytic HTF sampled on the grid:
// H_k(jw) = row k of Chat (jw I - (Ghat - N))^-1 Bhat e_0 + Dhat e_0.
// Emits sidebands |k| <= grid.nh; requires grid.nh <= M.
SidebandResponseSet analytic_htf_sample(const HarmonicStateSpace& hss,
                                        const FrequencyGrid& grid,
                                        ResponseKind kind);

// Eigenvalues of (Ghat - N) with truncation-edge artifacts removed:
// eigenvectors carrying more than edge_energy_tol of their energy in the
// two outermost sideband blocks are discarded.
std::vector<Complex> open_loop_poles(const HarmonicStateSpace& hss,
                                     double edge_energy_tol = 0.10);

// Scalar negative feedback u = -K y applied inside the PLTV model:
// G_cl(t) = G(t) - B(t) K (I + D K)^-1 C(t).  Time-varying D is rejected.
PltvSystem apply_scalar_feedback(const PltvSystem& sys, double k_gain);

std::vector<Complex> closed_loop_poles_direct(const PltvSystem& sys,
                                              double k_gain, int m_trunc);

struct FloquetOptions {
  int initial_steps = 256;    // RK4 steps per period to start from
  int max_refinements = 8;    // step count doubles per refinement
  double rel_tolerance = 1e-8;
};

// Floquet exponents in the principal strip from the monodromy matrix,
// integrated with fixed-step RK4 and step-doubling verification.
std::vector<Complex> floquet_exponents(const PltvSystem& sys, double k_gain,
                                       const FloquetOptions& opts = {});

PltvSystem mathieu_system(const MathieuSpec& spec);

// analytic_htf_sample followed by save_responses, with NH = grid.nh and the
// operator truncated at m_trunc.  Stand-in for a circuit-simulator export.
void emit_responses(const PltvSystem& sys, int m_trunc,
                    const FrequencyGrid& grid, ResponseKind kind,
                    const std::string& path);

}  // namespace htfid

#endif  // HTFID_ORACLE_HPP
