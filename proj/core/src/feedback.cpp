#include "htfid/feedback.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "htfid/parallel.hpp"
#include "internal/balance.hpp"

namespace htfid {

std::string to_string(FeedbackTopology topology) {
  return topology == FeedbackTopology::ParallelResistor ? "parallel" : "series";
}

FeedbackTopology topology_from_string(const std::string& s) {
  if (s == "parallel") return FeedbackTopology::ParallelResistor;
  if (s == "series") return FeedbackTopology::SeriesResistor;
  throw ConfigError("unknown topology '" + s + "' (expected parallel or series)");
}

double k_gain(FeedbackTopology topology, double r_ohm, ResponseKind kind) {
  if (!(r_ohm > 0.0) || !std::isfinite(r_ohm))
    throw ConfigError("stabilization resistance must be finite and > 0");
  if (topology == FeedbackTopology::ParallelResistor) {
    if (kind != ResponseKind::Impedance)
      throw ConfigError(
          "a parallel stabilization resistor closes the loop around an "
          "impedance matrix (current in, voltage out); this model is an "
          "admittance matrix, which pairs with a series resistor");
    return 1.0 / r_ohm;
  }
  if (kind != ResponseKind::Admittance)
    throw ConfigError(
        "a series stabilization resistor closes the loop around an "
        "admittance matrix (voltage in, current out); this model is an "
        "impedance matrix, which pairs with a parallel resistor");
  return r_ohm;
}

ClosedLoopRealization close_loop(const StateSpaceRealization& plant, double k) {
  if (plant.inputs() != plant.outputs())
    throw std::invalid_argument("feedback requires a square transfer matrix");
  const int dim = plant.inputs();

  ClosedLoopRealization cl;
  if (k == 0.0) {
    cl.a = plant.a_diag.asDiagonal();
    cl.b = plant.b;
    cl.c = plant.c;
    cl.d = plant.d;
    return cl;
  }

  const Eigen::MatrixXcd loop =
      Eigen::MatrixXcd::Identity(dim, dim) + k * plant.d;
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(loop);
  if (!lu.isInvertible())
    throw NumericError("algebraic loop: I + D*K is singular at K = " +
                       std::to_string(k));
  const Eigen::MatrixXcd m = lu.inverse();

  cl.a = Eigen::MatrixXcd(plant.a_diag.asDiagonal());
  cl.a.noalias() -= k * (plant.b * (m * plant.c));
  cl.b = plant.b * m;
  cl.c = m * plant.c;
  cl.d = m * plant.d;
  return cl;
}

namespace {

// Shift-invert Arnoldi: Ritz values of (A - sigma I)^-1 converge fastest
// for eigenvalues near sigma, which is the "solve about the critical
// band" trick.  Returns converged Ritz values mapped back to the A plane.
std::vector<Complex> shift_invert_eigs(const Eigen::MatrixXcd& a,
                                       Complex sigma, int krylov_dim) {
  const Eigen::Index n = a.rows();
  const int m = static_cast<int>(std::min<Eigen::Index>(krylov_dim, n));
  Eigen::MatrixXcd shifted = a;
  shifted.diagonal().array() -= sigma;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(shifted);

  Eigen::MatrixXcd v(n, m + 1);
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(m + 1, m);
  v.col(0) = Eigen::VectorXcd::Ones(n).normalized();
  int built = m;
  for (int j = 0; j < m; ++j) {
    Eigen::VectorXcd w = lu.solve(v.col(j));
    for (int i = 0; i <= j; ++i) {
      h(i, j) = v.col(i).dot(w);
      w -= h(i, j) * v.col(i);
    }
    // one re-orthogonalization pass keeps the basis usable at high counts
    for (int i = 0; i <= j; ++i) {
      const Complex corr = v.col(i).dot(w);
      h(i, j) += corr;
      w -= corr * v.col(i);
    }
    h(j + 1, j) = w.norm();
    if (std::abs(h(j + 1, j)) < 1e-14) {
      built = j + 1;
      break;
    }
    v.col(j + 1) = w / h(j + 1, j);
  }

  const Eigen::MatrixXcd hm = h.topLeftCorner(built, built);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(hm, true);
  if (es.info() != Eigen::Success)
    throw NumericError("Arnoldi eigensolve failed");
  std::vector<Complex> out;
  const double tail = built < m ? 0.0 : std::abs(h(built, built - 1));
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const Complex theta = es.eigenvalues()(i);
    if (std::abs(theta) < 1e-14) continue;
    const double resid =
        tail * std::abs(es.eigenvectors()(built - 1, i)) / std::abs(theta);
    if (resid < 1e-8) out.push_back(sigma + 1.0 / theta);
  }
  return out;
}

std::vector<Complex> eigenvalues_of(const Eigen::MatrixXcd& a, EigenMode mode,
                                    const SweepOptions& opts,
                                    const FrequencyBand& band) {
  const bool dense =
      mode == EigenMode::Dense ||
      (mode == EigenMode::Auto && a.rows() <= opts.dense_state_limit);
  if (dense) {
    Eigen::MatrixXcd balanced = a;
    internal::balance_in_place(balanced);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(balanced, false);
    if (es.info() != Eigen::Success)
      throw NumericError("dense eigensolver failed on closed-loop matrix");
    return {es.eigenvalues().data(),
            es.eigenvalues().data() + es.eigenvalues().size()};
  }
  const double target_hz = opts.shift_target_hz != 0.0
                               ? opts.shift_target_hz
                               : 0.5 * (band.lo_hz + band.hi_hz);
  return shift_invert_eigs(a, Complex(0.0, kTwoPi * target_hz),
                           opts.krylov_dim);
}

LocusRecord make_record(double r, double k, bool open_loop,
                        std::vector<Complex> eigs, const FrequencyBand& band,
                        double margin) {
  LocusRecord rec;
  rec.r_stab_ohm = r;
  rec.k = k;
  rec.open_loop = open_loop;
  rec.max_real_part = -std::numeric_limits<double>::infinity();
  for (const Complex& p : eigs)
    rec.max_real_part = std::max(rec.max_real_part, p.real());
  for (const Complex& p : eigs) {
    const double f = std::abs(p.imag()) / kTwoPi;
    if (f >= band.lo_hz && f <= band.hi_hz) rec.poles.push_back(p);
  }
  std::sort(rec.poles.begin(), rec.poles.end(), [](Complex a, Complex b) {
    if (a.imag() != b.imag()) return a.imag() < b.imag();
    return a.real() < b.real();
  });
  rec.band_empty = rec.poles.empty();
  if (rec.band_empty) {
    rec.stable = false;  // indeterminate, never silently stable
    return rec;
  }
  const auto dominant = std::max_element(
      rec.poles.begin(), rec.poles.end(),
      [](Complex a, Complex b) { return a.real() < b.real(); });
  rec.stable = dominant->real() <= margin;
  if (!rec.stable) rec.dominant_unstable = *dominant;
  return rec;
}

}  // namespace

PoleLocus sweep(const HarmonicTransferFunction& htf, const FeedbackSpec& spec,
                ResponseKind kind, FrequencyBand band,
                const SweepOptions& opts) {
  if (!(band.lo_hz >= 0.0) || !(band.hi_hz > band.lo_hz))
    throw ConfigError("reporting band must satisfy 0 <= lo < hi");
  for (double r : spec.values_ohm)
    if (!(r > 0.0) || !std::isfinite(r))
      throw ConfigError("sweep values must be finite and > 0");

  struct Point {
    double r;
    double k;
    bool open_loop;
  };
  std::vector<Point> points;
  points.push_back({spec.topology == FeedbackTopology::ParallelResistor
                        ? std::numeric_limits<double>::infinity()
                        : 0.0,
                    0.0, true});
  for (double r : spec.values_ohm)
    points.push_back({r, k_gain(spec.topology, r, kind), false});
  std::sort(points.begin(), points.end(),
            [](const Point& a, const Point& b) { return a.r < b.r; });

  PoleLocus locus;
  locus.topology = spec.topology;
  locus.band = band;
  locus.margin = opts.stability_margin;
  locus.records.resize(points.size());

  const int workers = opts.workers > 0 ? opts.workers : default_worker_count();
  parallel_for(points.size(), workers, [&](std::size_t i) {
    const Point& pt = points[i];
    const ClosedLoopRealization cl = close_loop(htf.realization, pt.k);
    std::vector<Complex> eigs = eigenvalues_of(cl.a, opts.mode, opts, band);
    locus.records[i] = make_record(pt.r, pt.k, pt.open_loop, std::move(eigs),
                                   band, opts.stability_margin);
  });
  return locus;
}

StabilityReport classify(const PoleLocus& locus, double margin) {
  if (locus.records.empty())
    throw std::invalid_argument("cannot classify an empty locus");
  StabilityReport report;
  report.margin = margin;

  struct Entry {
    double r;
    double re;
    bool stable;
  };
  std::vector<Entry> swept;
  for (const auto& rec : locus.records) {
    if (rec.open_loop || rec.band_empty) continue;
    double dom = -std::numeric_limits<double>::infinity();
    for (const Complex& p : rec.poles) dom = std::max(dom, p.real());
    swept.push_back({rec.r_stab_ohm, dom, dom < -margin});
    report.dominant_real_parts.emplace_back(rec.r_stab_ohm, dom);
  }

  const bool parallel = locus.topology == FeedbackTopology::ParallelResistor;
  for (const Entry& e : swept) {
    if (!e.stable) continue;
    if (!report.critical_value_ohm) {
      report.critical_value_ohm = e.r;
    } else if (parallel ? e.r > *report.critical_value_ohm
                        : e.r < *report.critical_value_ohm) {
      report.critical_value_ohm = e.r;
    }
  }

  // Linear crossing of the dominant real part between adjacent swept values.
  for (std::size_t i = 0; i + 1 < swept.size(); ++i) {
    const Entry& a = swept[i];
    const Entry& b = swept[i + 1];
    if (a.stable == b.stable) continue;
    const double target = -margin;
    const double denom = a.re - b.re;
    const double t = denom != 0.0 ? (a.re - target) / denom : 0.5;
    report.crossing_bracket_ohm = {a.r, b.r};
    report.crossing_estimate_ohm = a.r + t * (b.r - a.r);
    // series stabilizes with increasing R: the first unstable->stable edge
    // is the one adjacent to the critical value; parallel destabilizes with
    // increasing R, where the last stable->unstable edge matters.
    if (!parallel) break;
  }
  return report;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void save_locus_csv(const PoleLocus& locus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open output file: " + path);
  out << "r_stab_ohm,k_gain,pole_re,pole_im,stable\n";
  for (const auto& rec : locus.records) {
    if (rec.poles.empty()) {
      out << fmt(rec.r_stab_ohm) << ',' << fmt(rec.k) << ",nan,nan,"
          << (rec.stable ? 1 : 0) << "\n";
      continue;
    }
    for (const Complex& p : rec.poles)
      out << fmt(rec.r_stab_ohm) << ',' << fmt(rec.k) << ',' << fmt(p.real())
          << ',' << fmt(p.imag()) << ',' << (rec.stable ? 1 : 0) << "\n";
  }
  if (!out) throw ParseError("write failed: " + path);
}

std::vector<LocusPoint> load_locus_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open locus file: " + path);
  std::string line;
  std::vector<LocusPoint> out;
  bool header_seen = false;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line.rfind("r_stab_ohm", 0) != 0)
        throw ParseError(path + ": malformed locus header");
      header_seen = true;
      continue;
    }
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 5)
      throw ParseError(path + ": row " + std::to_string(row) +
                       " has " + std::to_string(cells.size()) + " cells");
    LocusPoint p;
    p.r_stab_ohm = std::stod(cells[0]);
    p.k = std::stod(cells[1]);
    p.pole = {std::stod(cells[2]), std::stod(cells[3])};
    p.stable = cells[4] == "1";
    out.push_back(p);
  }
  if (!header_seen) throw ParseError(path + ": missing locus header");
  return out;
}

void save_report(const StabilityReport& report, FeedbackTopology topology,
                 const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open output file: " + path);
  out << "htfid stability report\n";
  out << "topology: " << to_string(topology) << "\n";
  out << "margin_rad_s: " << fmt(report.margin) << "\n";
  if (report.critical_value_ohm)
    out << "critical_value_ohm: " << fmt(*report.critical_value_ohm) << "\n";
  else
    out << "critical_value_ohm: none\n";
  if (report.crossing_bracket_ohm)
    out << "crossing_bracket_ohm: [" << fmt(report.crossing_bracket_ohm->first)
        << ", " << fmt(report.crossing_bracket_ohm->second) << "]\n";
  if (report.crossing_estimate_ohm)
    out << "crossing_estimate_ohm: " << fmt(*report.crossing_estimate_ohm)
        << "\n";
  out << "values:\n";
  for (const auto& [r, re] : report.dominant_real_parts)
    out << "  r_stab_ohm: " << fmt(r) << "  dominant_re: " << fmt(re) << "\n";
  if (!out) throw ParseError("write failed: " + path);
}

}  // namespace htfid
