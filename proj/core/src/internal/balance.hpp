#ifndef HTFID_INTERNAL_BALANCE_HPP
#define HTFID_INTERNAL_BALANCE_HPP

#include <Eigen/Dense>
#include <cmath>

namespace htfid::internal {

// Parlett-Reinsch balancing: a diagonal similarity D^-1 A D with exact
// power-of-two factors that equalizes row and column norms.  Eigen's
// eigensolvers do not balance, and operators mixing w_n^2-scale stiffness
// entries with O(1) couplings lose eigenvector (and several eigenvalue)
// digits without it.  If d_out is given it receives the diagonal of D so
// physical eigenvectors can be recovered as D * v_balanced.
template <typename MatrixType>
void balance_in_place(MatrixType& a, Eigen::VectorXd* d_out = nullptr) {
  const Eigen::Index n = a.rows();
  Eigen::VectorXd d = Eigen::VectorXd::Ones(n);
  for (bool converged = false; !converged;) {
    converged = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      double c = a.col(i).cwiseAbs().sum() - std::abs(a(i, i));
      double r = a.row(i).cwiseAbs().sum() - std::abs(a(i, i));
      if (c == 0.0 || r == 0.0) continue;
      const double s = c + r;
      double f = 1.0;
      while (c < r / 2.0) {
        c *= 2.0;
        r /= 2.0;
        f *= 2.0;
      }
      while (c >= r * 2.0) {
        c /= 2.0;
        r *= 2.0;
        f /= 2.0;
      }
      if (f != 1.0 && c + r < 0.95 * s) {
        converged = false;
        a.col(i) *= f;
        a.row(i) /= f;
        d(i) *= f;
      }
    }
  }
  if (d_out) *d_out = d;
}

}  // namespace htfid::internal

#endif  // HTFID_INTERNAL_BALANCE_HPP
