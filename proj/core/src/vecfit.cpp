#include "htfid/vecfit.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "internal/balance.hpp"

namespace htfid {

namespace {

constexpr double kPoleMergeTol = 1e-9;   // relative: |p1 - p2| <= tol * |p|
constexpr double kPoleMoveTol = 1e-6;    // relocation convergence
constexpr double kRelaxFloor = 1e-8;     // |d~| below this reverts to sigma = 1 + ...

// A basis entry is either one real pole or a conjugate pair represented
// by its upper-half-plane member.  Pairs occupy two coefficient slots:
//   phi1 = 1/(s-p) + 1/(s-conj p),  phi2 = j/(s-p) - j/(s-conj p)
// so real slot coefficients produce conjugate-closed residues.
struct Basis {
  struct Entry {
    bool is_pair;
    Complex pole;  // Im > 0 for pairs, Im == 0 for reals
  };
  std::vector<Entry> entries;
  int slots = 0;

  std::vector<Complex> full_poles() const {
    std::vector<Complex> out;
    out.reserve(static_cast<std::size_t>(slots));
    for (const auto& e : entries) {
      if (e.is_pair) {
        out.push_back(e.pole);
        out.push_back(std::conj(e.pole));
      } else {
        out.push_back(e.pole);
      }
    }
    return out;
  }
};

double pole_scale(Complex p) { return std::max(std::abs(p), 1.0); }

// Canonicalize an arbitrary conjugate-closed pole list into basis entries,
// merging poles that coincide within kPoleMergeTol * |p|.
Basis make_basis(const std::vector<Complex>& poles) {
  std::vector<Complex> reps;
  reps.reserve(poles.size());
  for (Complex p : poles) {
    if (!std::isfinite(p.real()) || !std::isfinite(p.imag()))
      throw FitError("non-finite pole in basis");
    if (std::abs(p.imag()) <= 1e-12 * pole_scale(p)) p = Complex(p.real(), 0.0);
    if (p.imag() < 0.0) continue;  // lower member of a pair; keep the rep
    reps.push_back(p);
  }
  // merge near-duplicates
  std::vector<Complex> merged;
  for (Complex p : reps) {
    bool dup = false;
    for (Complex& q : merged) {
      if (std::abs(p - q) <= kPoleMergeTol * pole_scale(q)) {
        q = 0.5 * (p + q);
        dup = true;
        break;
      }
    }
    if (!dup) merged.push_back(p);
  }
  std::sort(merged.begin(), merged.end(), [](Complex a, Complex b) {
    if (a.imag() != b.imag()) return a.imag() < b.imag();
    return a.real() < b.real();
  });
  Basis basis;
  for (Complex p : merged) {
    const bool pair = p.imag() > 0.0;
    basis.entries.push_back({pair, pair ? p : Complex(p.real(), 0.0)});
    basis.slots += pair ? 2 : 1;
  }
  return basis;
}

// Basis matrix: rows = samples at s = j*w, cols = coefficient slots.
Eigen::MatrixXcd basis_matrix(const Basis& basis,
                              const std::vector<double>& omega) {
  const auto ns = static_cast<Eigen::Index>(omega.size());
  Eigen::MatrixXcd phi(ns, basis.slots);
  for (Eigen::Index i = 0; i < ns; ++i) {
    const Complex s(0.0, omega[static_cast<std::size_t>(i)]);
    Eigen::Index col = 0;
    for (const auto& e : basis.entries) {
      if (e.is_pair) {
        const Complex f1 = 1.0 / (s - e.pole);
        const Complex f2 = 1.0 / (s - std::conj(e.pole));
        phi(i, col++) = f1 + f2;
        phi(i, col++) = Complex(0.0, 1.0) * (f1 - f2);
      } else {
        phi(i, col++) = 1.0 / (s - e.pole);
      }
    }
  }
  return phi;
}

Eigen::MatrixXd real_stack(const Eigen::MatrixXcd& m) {
  Eigen::MatrixXd out(2 * m.rows(), m.cols());
  out.topRows(m.rows()) = m.real();
  out.bottomRows(m.rows()) = m.imag();
  return out;
}

Eigen::VectorXd real_stack_vec(const Eigen::VectorXcd& v) {
  Eigen::VectorXd out(2 * v.size());
  out.head(v.size()) = v.real();
  out.tail(v.size()) = v.imag();
  return out;
}

struct WeightedData {
  std::vector<Eigen::VectorXcd> f;  // per element, Ns samples
  std::vector<Eigen::VectorXd> w;   // per element weights
  std::vector<double> omega;        // rad/s
  double f_norm = 0.0;              // Frobenius norm over all elements
};

WeightedData prepare(const HermitianResponseSet& data, Weighting weighting) {
  WeightedData wd;
  const std::size_t np = data.grid().size();
  wd.omega.resize(np);
  for (std::size_t i = 0; i < np; ++i) wd.omega[i] = data.grid().omega(i);
  double acc = 0.0;
  for (int k = -data.n(); k <= data.n(); ++k) {
    const auto& v = data.at(k);
    Eigen::VectorXcd f(np);
    for (std::size_t i = 0; i < np; ++i) f(static_cast<Eigen::Index>(i)) = v[i];
    acc += f.squaredNorm();
    Eigen::VectorXd w = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(np));
    if (weighting == Weighting::InverseMagnitude) {
      const double peak = f.cwiseAbs().maxCoeff();
      if (peak > 0.0) {
        const double floor = 1e-12 * peak;
        for (Eigen::Index i = 0; i < f.size(); ++i)
          w(i) = 1.0 / std::max(std::abs(f(i)), floor);
      }
    }
    wd.f.push_back(std::move(f));
    wd.w.push_back(std::move(w));
  }
  wd.f_norm = std::sqrt(acc);
  return wd;
}

// Column-scaled least squares via column-pivoted QR.
Eigen::VectorXd scaled_lsq(Eigen::MatrixXd a, const Eigen::VectorXd& b,
                           bool* rank_deficient = nullptr) {
  Eigen::VectorXd scale(a.cols());
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    const double n = a.col(c).norm();
    scale(c) = n > 0.0 ? n : 1.0;
    a.col(c) /= scale(c);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (rank_deficient) *rank_deficient = qr.rank() < a.cols();
  Eigen::VectorXd x = qr.solve(b);
  return x.cwiseQuotient(scale);
}

std::vector<Complex> coeffs_to_residues(const Basis& basis,
                                        const Eigen::VectorXd& x) {
  std::vector<Complex> res;
  res.reserve(static_cast<std::size_t>(basis.slots));
  Eigen::Index i = 0;
  for (const auto& e : basis.entries) {
    if (e.is_pair) {
      res.emplace_back(x(i), x(i + 1));
      res.emplace_back(x(i), -x(i + 1));
      i += 2;
    } else {
      res.emplace_back(x(i), 0.0);
      i += 1;
    }
  }
  return res;
}

// Zeros of sigma(s) = d~ + sum c~_k phi_k(s): eigenvalues of the real
// block realization A - b c~ / d~.
std::vector<Complex> sigma_zeros(const Basis& basis, const Eigen::VectorXd& c,
                                 double d_tilde) {
  const int q = basis.slots;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(q, q);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(q);
  Eigen::Index i = 0;
  for (const auto& e : basis.entries) {
    if (e.is_pair) {
      a(i, i) = e.pole.real();
      a(i, i + 1) = e.pole.imag();
      a(i + 1, i) = -e.pole.imag();
      a(i + 1, i + 1) = e.pole.real();
      b(i) = 2.0;
      i += 2;
    } else {
      a(i, i) = e.pole.real();
      b(i) = 1.0;
      i += 1;
    }
  }
  a -= b * (c.transpose() / d_tilde);
  internal::balance_in_place(a);
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
  if (es.info() != Eigen::Success)
    throw FitError("eigensolver failed while relocating poles");
  std::vector<Complex> zeros(es.eigenvalues().data(),
                             es.eigenvalues().data() + q);
  for (const Complex& z : zeros)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw FitError("pole relocation produced non-finite zeros");
  return zeros;
}

struct ResidueFit {
  std::vector<std::vector<Complex>> residues;  // [pole][element]
  std::vector<Complex> direct;
  double rel_rms = 0.0;
};

ResidueFit fit_residues(const WeightedData& wd, const Basis& basis) {
  const auto e_count = wd.f.size();
  const auto ns = static_cast<Eigen::Index>(wd.omega.size());
  const int q = basis.slots;
  if (2 * ns < q + 1)
    throw FitError("not enough samples for order " + std::to_string(q));
  const Eigen::MatrixXcd phi = basis_matrix(basis, wd.omega);

  ResidueFit out;
  out.residues.assign(static_cast<std::size_t>(q),
                      std::vector<Complex>(e_count));
  out.direct.resize(e_count);
  double err_acc = 0.0;
  for (std::size_t e = 0; e < e_count; ++e) {
    Eigen::MatrixXcd m(ns, q + 1);
    m.leftCols(q) = phi;
    m.col(q).setOnes();
    const Eigen::MatrixXcd mw = wd.w[e].asDiagonal() * m;
    const Eigen::VectorXcd fw =
        wd.w[e].asDiagonal() * wd.f[e];
    bool deficient = false;
    const Eigen::VectorXd x =
        scaled_lsq(real_stack(mw), real_stack_vec(fw), &deficient);
    if (deficient)
      throw FitError(
          "rank-deficient least-squares system in residue fit; "
          "try a lower order");
    const std::vector<Complex> res =
        coeffs_to_residues(basis, x.head(q));
    for (int i = 0; i < q; ++i)
      out.residues[static_cast<std::size_t>(i)][e] = res[static_cast<std::size_t>(i)];
    out.direct[e] = Complex(x(q), 0.0);
    const Eigen::VectorXcd fit_vals = m * x.cast<Complex>();
    err_acc += (fit_vals - wd.f[e]).squaredNorm();
  }
  out.rel_rms = std::sqrt(err_acc) /
                std::max(wd.f_norm, std::numeric_limits<double>::min());
  return out;
}

// One relaxed pole-relocation step.  Per element, the homogeneous block
//   [ W (Phi, 1) | -W F (Phi, 1) ]
// is QR-reduced so only the shared sigma unknowns survive; the relaxation
// row pins sum_i Re sigma(jw_i) = Ns.
//
// Column conditioning matters here: with inverse-magnitude weighting the
// numerator columns carry 1/|F| while the sigma columns stay O(1), and a
// QR on such a block loses the sigma rows to backward error.  Numerator
// columns are therefore normalized per element (they are eliminated
// anyway); sigma columns get one shared scale so the stacked system stays
// consistent across elements.
std::vector<Complex> relocate(const WeightedData& wd, const Basis& basis) {
  const auto e_count = wd.f.size();
  const auto ns = static_cast<Eigen::Index>(wd.omega.size());
  const int q = basis.slots;
  if (2 * ns < 2 * (q + 1))
    throw FitError("not enough samples for order " + std::to_string(q));
  const Eigen::MatrixXcd phi = basis_matrix(basis, wd.omega);

  std::vector<Eigen::VectorXcd> wf(e_count);  // weighted responses W F
  double scale_acc = 0.0;
  for (std::size_t e = 0; e < e_count; ++e) {
    wf[e] = wd.w[e].asDiagonal() * wd.f[e];
    scale_acc += wf[e].squaredNorm();
  }
  const double relax_scale = std::sqrt(scale_acc) / static_cast<double>(ns);

  // shared sigma-column scales over the whole stacked system
  Eigen::VectorXd sig_scale = Eigen::VectorXd::Zero(q + 1);
  for (std::size_t e = 0; e < e_count; ++e) {
    for (int j = 0; j < q; ++j)
      sig_scale(j) += wf[e].cwiseProduct(phi.col(j)).squaredNorm();
    sig_scale(q) += wf[e].squaredNorm();
  }
  sig_scale = sig_scale.cwiseSqrt();
  for (int j = 0; j <= q; ++j)
    if (sig_scale(j) == 0.0) sig_scale(j) = 1.0;

  auto scale_columns_in_place = [](Eigen::MatrixXcd& m, int first, int count,
                                   const Eigen::VectorXd* shared = nullptr,
                                   int shared_offset = 0) {
    for (int j = 0; j < count; ++j) {
      if (shared) {
        m.col(first + j) /= (*shared)(shared_offset + j);
      } else {
        const double n = m.col(first + j).norm();
        if (n > 0.0) m.col(first + j) /= n;
      }
    }
  };

  Eigen::MatrixXd aa(static_cast<Eigen::Index>(e_count) * (q + 1) + 1, q + 1);
  Eigen::VectorXd bb = Eigen::VectorXd::Zero(aa.rows());
  for (std::size_t e = 0; e < e_count; ++e) {
    Eigen::MatrixXcd block(ns, 2 * (q + 1));
    block.leftCols(q) = phi;
    block.col(q).setOnes();
    block.rightCols(q + 1) =
        (-wd.f[e]).asDiagonal() * block.leftCols(q + 1);
    block = wd.w[e].asDiagonal() * block;
    scale_columns_in_place(block, 0, q + 1);
    scale_columns_in_place(block, q + 1, q + 1, &sig_scale);
    const Eigen::MatrixXd stacked = real_stack(block);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(stacked);
    const Eigen::MatrixXd r =
        qr.matrixQR()
            .topRows(2 * (q + 1))
            .triangularView<Eigen::Upper>();
    aa.middleRows(static_cast<Eigen::Index>(e) * (q + 1), q + 1) =
        r.block(q + 1, q + 1, q + 1, q + 1);
  }
  // A vanishing reduced system means the current basis already fits the
  // data to machine precision and sigma is undetermined: relocating on
  // numerical noise would random-walk the poles, so keep them.
  if (aa.topRows(aa.rows() - 1).norm() <=
      1e-12 * std::sqrt(static_cast<double>((q + 1) * e_count)))
    return basis.full_poles();
  // relaxation row (entries divided by the shared scales so the scaled
  // unknowns stay consistent)
  for (int c = 0; c < q; ++c)
    aa(aa.rows() - 1, c) = relax_scale * phi.col(c).real().sum() / sig_scale(c);
  aa(aa.rows() - 1, q) = relax_scale * static_cast<double>(ns) / sig_scale(q);
  bb(aa.rows() - 1) = relax_scale * static_cast<double>(ns);

  Eigen::VectorXd x = scaled_lsq(aa, bb).cwiseQuotient(sig_scale);
  double d_tilde = x(q);

  if (std::abs(d_tilde) < kRelaxFloor) {
    // Degenerate relaxation: re-solve with sigma = 1 + sum c~ phi.
    Eigen::MatrixXd aa2(static_cast<Eigen::Index>(e_count) * q, q);
    Eigen::VectorXd bb2(aa2.rows());
    for (std::size_t e = 0; e < e_count; ++e) {
      Eigen::MatrixXcd block(ns, 2 * q + 2);
      block.leftCols(q) = phi;
      block.col(q).setOnes();
      block.middleCols(q + 1, q) = (-wd.f[e]).asDiagonal() * phi;
      block.col(2 * q + 1) = wd.f[e];  // RHS carried as last column
      block = wd.w[e].asDiagonal() * block;
      scale_columns_in_place(block, 0, q + 1);
      scale_columns_in_place(block, q + 1, q, &sig_scale);
      const Eigen::MatrixXd stacked = real_stack(block);
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(stacked);
      const Eigen::MatrixXd r = qr.matrixQR()
                                    .topRows(2 * q + 2)
                                    .triangularView<Eigen::Upper>();
      aa2.middleRows(static_cast<Eigen::Index>(e) * q, q) =
          r.block(q + 1, q + 1, q, q);
      bb2.segment(static_cast<Eigen::Index>(e) * q, q) =
          r.block(q + 1, 2 * q + 1, q, 1);
    }
    x.head(q) =
        scaled_lsq(aa2, bb2).cwiseQuotient(sig_scale.head(q));
    d_tilde = 1.0;
  }

  return sigma_zeros(basis, x.head(q), d_tilde);
}

// Drops basis entries whose band contribution is numerically invisible
// (stray relocation zeros, duplicated poles with split residues).
Basis prune_inactive(const WeightedData& wd, const Basis& basis,
                     const ResidueFit& rf) {
  std::vector<double> scales(wd.f.size());
  for (std::size_t e = 0; e < wd.f.size(); ++e)
    scales[e] = wd.f[e].cwiseAbs().maxCoeff();
  Basis kept;
  std::size_t slot = 0;
  for (const auto& entry : basis.entries) {
    const std::size_t width = entry.is_pair ? 2 : 1;
    bool active = false;
    for (std::size_t e = 0; e < wd.f.size() && !active; ++e) {
      if (scales[e] == 0.0) continue;
      for (std::size_t i = 0; i < wd.omega.size() && !active; ++i) {
        const Complex s(0.0, wd.omega[i]);
        double contrib =
            std::abs(rf.residues[slot][e] / (s - entry.pole));
        if (entry.is_pair)
          contrib +=
              std::abs(rf.residues[slot + 1][e] / (s - std::conj(entry.pole)));
        if (contrib > 1e-12 * scales[e]) active = true;
      }
    }
    if (active) {
      kept.entries.push_back(entry);
      kept.slots += static_cast<int>(width);
    }
    slot += width;
  }
  return kept;
}

double pole_movement(const std::vector<Complex>& before,
                     const std::vector<Complex>& after) {
  if (before.size() != after.size())
    return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (const Complex& p : after) {
    double best = std::numeric_limits<double>::infinity();
    for (const Complex& o : before) best = std::min(best, std::abs(p - o));
    worst = std::max(worst, best / pole_scale(p));
  }
  return worst;
}

std::vector<Complex> flip_to_lhp(std::vector<Complex> poles) {
  for (Complex& p : poles)
    if (p.real() > 0.0) p = Complex(-p.real(), p.imag());
  return poles;
}

// Internal frequency normalization: fitting is done on s' = s / w_ref so
// the least-squares columns stay near unit scale at RF frequencies.
WeightedData normalize(const WeightedData& wd, double w_ref) {
  WeightedData out = wd;
  for (double& w : out.omega) w /= w_ref;
  return out;
}

RationalModel build_model(const Basis& basis, const ResidueFit& rf,
                          double w_ref) {
  RationalModel model;
  model.coeff_field = CoeffField::Real;
  const std::vector<Complex> poles = basis.full_poles();
  model.poles.reserve(poles.size());
  for (Complex p : poles) model.poles.push_back(w_ref * p);
  model.residues.resize(rf.residues.size());
  for (std::size_t i = 0; i < rf.residues.size(); ++i) {
    model.residues[i].reserve(rf.residues[i].size());
    for (Complex r : rf.residues[i]) model.residues[i].push_back(w_ref * r);
  }
  model.direct = rf.direct;
  model.achieved_rms = rf.rel_rms;
  return model;
}

}  // namespace

std::vector<Complex> initial_poles(const FrequencyGrid& grid, int order) {
  grid.validate();
  if (order < 2)
    throw std::invalid_argument("initial pole order must be >= 2");
  const double w_min = grid.omega(0);
  const double w_max = grid.omega(grid.size() - 1);
  const int npairs = order / 2;
  std::vector<double> imags;
  if (npairs == 1) {
    imags.push_back(std::sqrt(w_min * w_max));
  } else if (npairs > 1) {
    const double ratio = w_max / w_min;
    for (int k = 0; k < npairs; ++k)
      imags.push_back(w_min * std::pow(ratio, static_cast<double>(k) /
                                                  (npairs - 1)));
  }
  std::vector<Complex> poles;
  poles.reserve(static_cast<std::size_t>(order));
  for (double im : imags) {
    poles.emplace_back(-im / 100.0, im);
    poles.emplace_back(-im / 100.0, -im);
  }
  if (order % 2 == 1) poles.emplace_back(-w_max, 0.0);
  return poles;
}

IterateResult vf_iterate(const HermitianResponseSet& data,
                         const std::vector<Complex>& poles,
                         const FitConfig& cfg) {
  if (poles.empty()) throw std::invalid_argument("empty pole set");
  const WeightedData raw = prepare(data, cfg.weighting);
  const double w_ref = raw.omega.back();
  const WeightedData wd = normalize(raw, w_ref);

  std::vector<Complex> scaled;
  scaled.reserve(poles.size());
  for (Complex p : poles) scaled.push_back(p / w_ref);

  const Basis basis = make_basis(scaled);
  const std::vector<Complex> zeros = relocate(wd, basis);
  const Basis new_basis = make_basis(zeros);
  const ResidueFit rf = fit_residues(wd, new_basis);

  IterateResult out;
  out.poles.reserve(zeros.size());
  for (Complex z : new_basis.full_poles()) out.poles.push_back(w_ref * z);
  out.rel_rms = rf.rel_rms;
  return out;
}

RationalModel fit(const HermitianResponseSet& data, const FitConfig& cfg) {
  if (cfg.order_min > cfg.order_max || cfg.order_min < 2)
    throw std::invalid_argument("invalid fit order range");
  if (!(cfg.rms_tolerance > 0.0))
    throw std::invalid_argument("rms_tolerance must be > 0");

  const WeightedData raw = prepare(data, cfg.weighting);
  const double w_ref = raw.omega.back();
  const WeightedData wd = normalize(raw, w_ref);
  const auto ns = wd.omega.size();

  RationalModel best;
  double best_rms = std::numeric_limits<double>::infinity();
  bool have_best = false;

  for (int order = cfg.order_min; order <= cfg.order_max; ++order) {
    if (2 * ns < static_cast<std::size_t>(2 * (order + 1))) break;
    std::vector<Complex> start = initial_poles(data.grid(), order);
    for (Complex& p : start) p /= w_ref;

    std::vector<Complex> current = start;  // raw relocation trajectory
    std::vector<Complex> basis_poles = start;
    int iterations = 0;
    try {
      for (int it = 1; it <= cfg.max_iterations; ++it) {
        const Basis basis = make_basis(basis_poles);
        const std::vector<Complex> zeros = relocate(wd, basis);
        const std::vector<Complex> canon = make_basis(zeros).full_poles();
        iterations = it;
        const double move = pole_movement(current, canon);
        current = canon;
        if (move < kPoleMoveTol) break;
        // Reflected basis keeps the iteration well conditioned; the
        // raw zeros stay untouched for the reported model.
        basis_poles = flip_to_lhp(current);
      }
      Basis final_basis = make_basis(current);
      ResidueFit rf = fit_residues(wd, final_basis);
      const Basis active = prune_inactive(wd, final_basis, rf);
      if (active.slots < final_basis.slots) {
        const ResidueFit rf2 = fit_residues(wd, active);
        if (rf2.rel_rms <= rf.rel_rms + 1e-12) {
          final_basis = active;
          rf = rf2;
        }
      }
      RationalModel model = build_model(final_basis, rf, w_ref);
      model.iterations = iterations;
      if (rf.rel_rms < cfg.rms_tolerance) {
        model.converged = true;
        return model;
      }
      if (rf.rel_rms < best_rms) {
        best = model;
        best_rms = rf.rel_rms;
        have_best = true;
      }
    } catch (const FitError&) {
      // this order is unusable (singular system); escalate
      continue;
    }
  }

  if (!have_best)
    throw FitError("vector fit failed at every order in [" +
                   std::to_string(cfg.order_min) + ", " +
                   std::to_string(cfg.order_max) + "]");
  best.converged = false;  // quality flag: best effort, tolerance missed
  return best;
}

RationalModel recombine(const RationalModel& h_tilde, int n) {
  if (h_tilde.element_count() != 2 * n + 1)
    throw ConfigError("recombine expects 2n+1 elements ordered ~H_{-n}..~H_n");
  const Complex j(0.0, 1.0);
  RationalModel out = h_tilde;
  out.coeff_field = CoeffField::Complex;
  const auto mid = static_cast<std::size_t>(n);
  for (std::size_t p = 0; p < h_tilde.residues.size(); ++p) {
    const auto& src = h_tilde.residues[p];
    auto& dst = out.residues[p];
    for (int k = 1; k <= n; ++k) {
      dst[mid + k] = src[mid + k] - j * src[mid - k];
      dst[mid - k] = src[mid + k] + j * src[mid - k];
    }
  }
  for (int k = 1; k <= n; ++k) {
    out.direct[mid + k] = h_tilde.direct[mid + k] - j * h_tilde.direct[mid - k];
    out.direct[mid - k] = h_tilde.direct[mid + k] + j * h_tilde.direct[mid - k];
  }
  return out;
}

StateSpaceRealization realize(const RationalModel& model) {
  const int q = model.order();
  const int e_count = model.element_count();
  StateSpaceRealization ss;
  ss.a_diag.resize(q);
  for (int i = 0; i < q; ++i) ss.a_diag(i) = model.poles[static_cast<std::size_t>(i)];
  ss.b = Eigen::MatrixXcd::Ones(q, 1);
  ss.c.resize(e_count, q);
  for (int e = 0; e < e_count; ++e)
    for (int i = 0; i < q; ++i)
      ss.c(e, i) = model.residues[static_cast<std::size_t>(i)]
                                 [static_cast<std::size_t>(e)];
  ss.d.resize(e_count, 1);
  for (int e = 0; e < e_count; ++e)
    ss.d(e, 0) = model.direct[static_cast<std::size_t>(e)];
  return ss;
}

namespace {

void guard_pole_proximity(Complex s, const Complex& pole) {
  if (std::abs(s - pole) <= 1e-12 * std::abs(pole))
    throw NumericError("evaluation at s = j" + std::to_string(s.imag()) +
                       " coincides with pole (" + std::to_string(pole.real()) +
                       ", " + std::to_string(pole.imag()) + ")");
}

}  // namespace

std::vector<std::vector<Complex>> evaluate(const RationalModel& model,
                                           std::span<const double> omega) {
  const auto e_count = static_cast<std::size_t>(model.element_count());
  std::vector<std::vector<Complex>> out(
      e_count, std::vector<Complex>(omega.size()));
  for (std::size_t i = 0; i < omega.size(); ++i) {
    const Complex s(0.0, omega[i]);
    for (const Complex& p : model.poles) guard_pole_proximity(s, p);
    for (std::size_t e = 0; e < e_count; ++e) {
      Complex acc = model.direct[e];
      for (std::size_t pi = 0; pi < model.poles.size(); ++pi)
        acc += model.residues[pi][e] / (s - model.poles[pi]);
      out[e][i] = acc;
    }
  }
  return out;
}

std::vector<std::vector<Complex>> evaluate(const StateSpaceRealization& ss,
                                           std::span<const double> omega) {
  if (ss.inputs() != 1)
    throw std::invalid_argument(
        "element-vector evaluation requires a single-input realization");
  const auto e_count = static_cast<std::size_t>(ss.outputs());
  std::vector<std::vector<Complex>> out(
      e_count, std::vector<Complex>(omega.size()));
  for (std::size_t i = 0; i < omega.size(); ++i) {
    const Complex s(0.0, omega[i]);
    for (int k = 0; k < ss.order(); ++k)
      guard_pole_proximity(s, ss.a_diag(k));
    Eigen::VectorXcd x = ss.b.col(0);
    for (int k = 0; k < ss.order(); ++k) x(k) /= (s - ss.a_diag(k));
    const Eigen::VectorXcd y = ss.c * x + ss.d.col(0);
    for (std::size_t e = 0; e < e_count; ++e)
      out[e][i] = y(static_cast<Eigen::Index>(e));
  }
  return out;
}

namespace {

nlohmann::json complex_to_json(const Complex& z) {
  return nlohmann::json::array({z.real(), z.imag()});
}

Complex complex_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2)
    throw ParseError("expected [re, im] pair in model file");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

void save_model(const RationalModel& model, double f0_hz,
                const std::vector<std::string>& element_labels,
                const std::string& path) {
  nlohmann::json j;
  j["format"] = "htfid-model";
  j["version"] = 1;
  j["f0_hz"] = f0_hz;
  j["coeff_field"] =
      model.coeff_field == CoeffField::Real ? "real" : "complex";
  j["element_labels"] = element_labels;
  auto poles = nlohmann::json::array();
  for (const Complex& p : model.poles) poles.push_back(complex_to_json(p));
  j["poles"] = std::move(poles);
  auto residues = nlohmann::json::array();
  for (const auto& row : model.residues) {
    auto r = nlohmann::json::array();
    for (const Complex& z : row) r.push_back(complex_to_json(z));
    residues.push_back(std::move(r));
  }
  j["residues"] = std::move(residues);
  auto direct = nlohmann::json::array();
  for (const Complex& z : model.direct) direct.push_back(complex_to_json(z));
  j["direct"] = std::move(direct);
  j["fit"] = {{"rms", model.achieved_rms},
              {"order", model.order()},
              {"iterations", model.iterations},
              {"converged", model.converged}};
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open output file: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw ParseError("write failed: " + path);
}

RationalModel load_model(const std::string& path, double* f0_hz,
                         std::vector<std::string>* element_labels) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open model file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ParseError(path + ": invalid JSON: " + e.what());
  }
  if (j.value("format", "") != "htfid-model")
    throw ParseError(path + ": not an htfid model file");
  RationalModel model;
  const std::string field = j.at("coeff_field").get<std::string>();
  if (field == "real") model.coeff_field = CoeffField::Real;
  else if (field == "complex") model.coeff_field = CoeffField::Complex;
  else throw ParseError(path + ": unknown coeff_field '" + field + "'");
  for (const auto& p : j.at("poles")) model.poles.push_back(complex_from_json(p));
  for (const auto& row : j.at("residues")) {
    std::vector<Complex> r;
    for (const auto& z : row) r.push_back(complex_from_json(z));
    model.residues.push_back(std::move(r));
  }
  for (const auto& z : j.at("direct")) model.direct.push_back(complex_from_json(z));
  if (model.residues.size() != model.poles.size())
    throw ParseError(path + ": residue rows do not match pole count");
  for (const auto& row : model.residues)
    if (row.size() != model.direct.size())
      throw ParseError(path + ": residue row length does not match element count");
  if (j.contains("fit")) {
    const auto& f = j["fit"];
    model.achieved_rms = f.value("rms", 0.0);
    model.iterations = f.value("iterations", 0);
    model.converged = f.value("converged", true);
  }
  if (f0_hz) *f0_hz = j.value("f0_hz", 0.0);
  if (element_labels && j.contains("element_labels"))
    *element_labels = j["element_labels"].get<std::vector<std::string>>();
  return model;
}

}  // namespace htfid
