#include "htfid/oracle.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

#include "htfid/parallel.hpp"
#include "htfid/strip.hpp"
#include "internal/balance.hpp"

namespace htfid {

namespace {

void check_coeff_map(const std::map<int, Eigen::MatrixXcd>& coeffs, int rows,
                     int cols, const char* name) {
  for (const auto& [m, mat] : coeffs) {
    if (mat.rows() != rows || mat.cols() != cols)
      throw std::invalid_argument(std::string(name) + "_" + std::to_string(m) +
                                  " has wrong shape");
    auto it = coeffs.find(-m);
    if (it == coeffs.end())
      throw std::invalid_argument(std::string(name) + "_" + std::to_string(-m) +
                                  " missing (conjugate of harmonic " +
                                  std::to_string(m) + ")");
    if ((it->second - mat.conjugate()).norm() >
        1e-12 * (1.0 + mat.norm()))
      throw std::invalid_argument(std::string(name) +
                                  " coefficients violate conjugate symmetry at m=" +
                                  std::to_string(m));
  }
}

Eigen::MatrixXd reconstruct(const std::map<int, Eigen::MatrixXcd>& coeffs,
                            double omega0, double t, int rows, int cols) {
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(rows, cols);
  for (const auto& [m, mat] : coeffs)
    acc += mat * std::exp(Complex(0.0, m * omega0 * t));
  return acc.real();
}

int map_support(const std::map<int, Eigen::MatrixXcd>& coeffs) {
  int s = 0;
  for (const auto& [m, mat] : coeffs)
    if (mat.norm() > 0.0) s = std::max(s, std::abs(m));
  return s;
}

// Block-Toeplitz layout: block (r, c) = X_{r-c}, block indices r, c
// running over m = -M..M (offset by +M).
Eigen::MatrixXcd toeplitz(const std::map<int, Eigen::MatrixXcd>& coeffs,
                          int m_trunc, int block_rows, int block_cols) {
  const int nb = 2 * m_trunc + 1;
  Eigen::MatrixXcd out =
      Eigen::MatrixXcd::Zero(nb * block_rows, nb * block_cols);
  for (int r = 0; r < nb; ++r) {
    for (int c = 0; c < nb; ++c) {
      auto it = coeffs.find(r - c);
      if (it != coeffs.end())
        out.block(r * block_rows, c * block_cols, block_rows, block_cols) =
            it->second;
    }
  }
  return out;
}

}  // namespace

int PltvSystem::max_harmonic() const {
  int s = map_support(g_coeffs);
  s = std::max(s, map_support(b_coeffs));
  s = std::max(s, map_support(c_coeffs));
  s = std::max(s, map_support(d_coeffs));
  return s;
}

void PltvSystem::validate() const {
  if (!(omega0 > 0.0)) throw std::invalid_argument("omega0 must be > 0");
  if (state_dim < 1) throw std::invalid_argument("state_dim must be >= 1");
  check_coeff_map(g_coeffs, state_dim, state_dim, "G");
  check_coeff_map(b_coeffs, state_dim, 1, "B");
  check_coeff_map(c_coeffs, 1, state_dim, "C");
  check_coeff_map(d_coeffs, 1, 1, "D");
}

Eigen::MatrixXd PltvSystem::g_at(double t) const {
  return reconstruct(g_coeffs, omega0, t, state_dim, state_dim);
}
Eigen::MatrixXd PltvSystem::b_at(double t) const {
  return reconstruct(b_coeffs, omega0, t, state_dim, 1);
}
Eigen::MatrixXd PltvSystem::c_at(double t) const {
  return reconstruct(c_coeffs, omega0, t, 1, state_dim);
}
Eigen::MatrixXd PltvSystem::d_at(double t) const {
  return reconstruct(d_coeffs, omega0, t, 1, 1);
}

Eigen::MatrixXcd HarmonicStateSpace::dynamics() const {
  Eigen::MatrixXcd a = ghat;
  for (int m = -m_trunc; m <= m_trunc; ++m) {
    const int off = (m + m_trunc) * state_dim;
    for (int i = 0; i < state_dim; ++i)
      a(off + i, off + i) -= Complex(0.0, m * omega0);
  }
  return a;
}

HarmonicStateSpace assemble(const PltvSystem& sys, int m_trunc) {
  sys.validate();
  const int support = sys.max_harmonic();
  if (m_trunc < support)
    throw std::invalid_argument(
        "operator truncation M=" + std::to_string(m_trunc) +
        " is below the coefficient support " + std::to_string(support) +
        "; the pump may not be silently truncated");
  HarmonicStateSpace hss;
  hss.m_trunc = m_trunc;
  hss.omega0 = sys.omega0;
  hss.state_dim = sys.state_dim;
  hss.ghat = toeplitz(sys.g_coeffs, m_trunc, sys.state_dim, sys.state_dim);
  hss.bhat = toeplitz(sys.b_coeffs, m_trunc, sys.state_dim, 1);
  hss.chat = toeplitz(sys.c_coeffs, m_trunc, 1, sys.state_dim);
  hss.dhat = toeplitz(sys.d_coeffs, m_trunc, 1, 1);
  return hss;
}

SidebandResponseSet analytic_htf_sample(const HarmonicStateSpace& hss,
                                        const FrequencyGrid& grid,
                                        ResponseKind kind) {
  grid.validate();
  const int nh = grid.nh;
  const int m = hss.m_trunc;
  if (nh > m)
    throw std::invalid_argument("grid NH=" + std::to_string(nh) +
                                " exceeds operator truncation M=" +
                                std::to_string(m));
  const Eigen::MatrixXcd a_op = hss.dynamics();
  const Eigen::VectorXcd b_center = hss.bhat.col(m);
  const Eigen::VectorXcd d_center = hss.dhat.col(m);

  const std::size_t np = grid.size();
  std::vector<std::vector<Complex>> responses(
      static_cast<std::size_t>(2 * nh + 1),
      std::vector<Complex>(np));

  parallel_for(np, default_worker_count(), [&](std::size_t i) {
    const Complex s(0.0, grid.omega(i));
    Eigen::MatrixXcd lhs = -a_op;
    lhs.diagonal().array() += s;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(lhs);
    const Eigen::VectorXcd x = lu.solve(b_center);
    const double resid = (lhs * x - b_center).norm();
    if (!(resid <= 1e-6 * (1.0 + b_center.norm() + lhs.norm() * x.norm())))
      throw NumericError("operator is singular at f = " +
                         std::to_string(grid.points_hz[i]) +
                         " Hz (sample sits on an imaginary-axis eigenvalue)");
    const Eigen::VectorXcd y = hss.chat * x + d_center;
    for (int k = -nh; k <= nh; ++k)
      responses[static_cast<std::size_t>(k + nh)][i] = y(k + m);
  });

  return SidebandResponseSet(grid, kind, std::move(responses));
}

std::vector<Complex> open_loop_poles(const HarmonicStateSpace& hss,
                                     double edge_energy_tol) {
  Eigen::MatrixXcd a_op = hss.dynamics();
  Eigen::VectorXd d;
  internal::balance_in_place(a_op, &d);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(a_op, true);
  if (es.info() != Eigen::Success)
    throw NumericError("eigensolver failed on the harmonic state-space operator");
  const int sd = hss.state_dim;
  const int nb = hss.blocks();
  std::vector<Complex> out;
  for (Eigen::Index i = 0; i < a_op.rows(); ++i) {
    // physical eigenvector: undo the balancing similarity
    const Eigen::VectorXcd v = d.asDiagonal() * es.eigenvectors().col(i);
    const double total = v.squaredNorm();
    const double edge = v.segment(0, sd).squaredNorm() +
                        v.segment((nb - 1) * sd, sd).squaredNorm();
    if (edge < edge_energy_tol * total) out.push_back(es.eigenvalues()(i));
  }
  return out;
}

PltvSystem apply_scalar_feedback(const PltvSystem& sys, double k_gain) {
  sys.validate();
  if (k_gain == 0.0) return sys;
  // Only a constant direct term keeps (I + D K)^-1 time-invariant.
  double d0 = 0.0;
  for (const auto& [m, mat] : sys.d_coeffs) {
    if (m == 0) {
      d0 = mat(0, 0).real();
    } else if (mat.norm() > 0.0) {
      throw NumericError(
          "time-varying direct term: (I + D(t)K) cannot be inverted "
          "coefficient-wise");
    }
  }
  const double denom = 1.0 + d0 * k_gain;
  if (std::abs(denom) < 1e-14)
    throw NumericError("algebraic loop: I + D*K is singular at K = " +
                       std::to_string(k_gain));

  PltvSystem out = sys;
  const double scale = k_gain / denom;
  // (B K (I+DK)^-1 C)(t) has Fourier coefficients scale * conv(B, C).
  for (const auto& [mb, bm] : sys.b_coeffs) {
    for (const auto& [mc, cm] : sys.c_coeffs) {
      const int m = mb + mc;
      Eigen::MatrixXcd term = scale * (bm * cm);
      auto it = out.g_coeffs.find(m);
      if (it == out.g_coeffs.end())
        out.g_coeffs[m] = -term;
      else
        it->second -= term;
    }
  }
  for (auto& [m, mat] : out.b_coeffs) mat /= denom;
  for (auto& [m, mat] : out.c_coeffs) mat /= denom;
  for (auto& [m, mat] : out.d_coeffs) mat /= denom;
  return out;
}

std::vector<Complex> closed_loop_poles_direct(const PltvSystem& sys,
                                              double k_gain, int m_trunc) {
  return open_loop_poles(assemble(apply_scalar_feedback(sys, k_gain), m_trunc));
}

namespace {

std::vector<Complex> monodromy_exponents(const PltvSystem& sys, int steps) {
  const double period = kTwoPi / sys.omega0;
  const double h = period / steps;
  const int d = sys.state_dim;
  Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(d, d);
  for (int i = 0; i < steps; ++i) {
    const double t = i * h;
    const Eigen::MatrixXd k1 = sys.g_at(t) * phi;
    const Eigen::MatrixXd k2 = sys.g_at(t + 0.5 * h) * (phi + 0.5 * h * k1);
    const Eigen::MatrixXd k3 = sys.g_at(t + 0.5 * h) * (phi + 0.5 * h * k2);
    const Eigen::MatrixXd k4 = sys.g_at(t + h) * (phi + h * k3);
    phi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  internal::balance_in_place(phi);
  Eigen::EigenSolver<Eigen::MatrixXd> es(phi, false);
  if (es.info() != Eigen::Success)
    throw NumericError("eigensolver failed on the monodromy matrix");
  std::vector<Complex> out;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    // principal log maps Im to (-w0/2, w0/2]
    out.push_back(std::log(Complex(es.eigenvalues()(i))) / period);
  }
  return out;
}

}  // namespace

std::vector<Complex> floquet_exponents(const PltvSystem& sys, double k_gain,
                                       const FloquetOptions& opts) {
  const PltvSystem closed = apply_scalar_feedback(sys, k_gain);
  int steps = opts.initial_steps;
  std::vector<Complex> prev = monodromy_exponents(closed, steps);
  for (int r = 0; r < opts.max_refinements; ++r) {
    steps *= 2;
    std::vector<Complex> cur = monodromy_exponents(closed, steps);
    double worst = 0.0;
    for (const Complex& a : cur) {
      double best = std::numeric_limits<double>::infinity();
      for (const Complex& b : prev)
        best = std::min(best, strip_distance(a, b, sys.omega0, 1));
      worst = std::max(worst, best / std::max(std::abs(a), 1.0));
    }
    if (worst < opts.rel_tolerance) return cur;
    prev = std::move(cur);
  }
  throw NumericError(
      "Floquet integration did not converge under step refinement");
}

PltvSystem mathieu_system(const MathieuSpec& spec) {
  if (!(spec.omega_n > 0.0) || !(spec.omega0 > 0.0) || spec.zeta < 0.0)
    throw std::invalid_argument("MathieuSpec requires omega_n, omega0 > 0 and zeta >= 0");
  PltvSystem sys;
  sys.omega0 = spec.omega0;
  sys.state_dim = 2;
  Eigen::MatrixXcd g0(2, 2);
  g0 << 0.0, 1.0, -spec.omega_n * spec.omega_n, -2.0 * spec.zeta * spec.omega_n;
  sys.g_coeffs[0] = g0;
  if (spec.epsilon != 0.0) {
    Eigen::MatrixXcd g1 = Eigen::MatrixXcd::Zero(2, 2);
    g1(1, 0) = -0.5 * spec.omega_n * spec.omega_n * spec.epsilon;
    sys.g_coeffs[1] = g1;
    sys.g_coeffs[-1] = g1.conjugate();
  }
  Eigen::MatrixXcd b0(2, 1);
  b0 << 0.0, 1.0;
  sys.b_coeffs[0] = b0;
  Eigen::MatrixXcd c0(1, 2);
  if (spec.output == MathieuOutput::Position)
    c0 << 1.0, 0.0;
  else
    c0 << 0.0, 1.0;
  sys.c_coeffs[0] = c0;
  return sys;
}

void emit_responses(const PltvSystem& sys, int m_trunc,
                    const FrequencyGrid& grid, ResponseKind kind,
                    const std::string& path) {
  const HarmonicStateSpace hss = assemble(sys, m_trunc);
  save_responses(analytic_htf_sample(hss, grid, kind), path);
}

}  // namespace htfid
