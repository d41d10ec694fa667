#ifndef HTFID_HTF_HPP
#define HTFID_HTF_HPP

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "htfid/freqdata.hpp"
#include "htfid/types.hpp"
#include "htfid/vecfit.hpp"

namespace htfid {

// Identified central column of the harmonic transfer function:
// 2n+1 complex-coefficient elements H_{-n}(s)..H_n(s) sharing one pole set.
struct CentralColumn {
  int n = 0;
  double f0_hz = 0.0;
  RationalModel model;  // element index k + n

  double omega0() const { return kTwoPi * f0_hz; }
};

struct TruncationVerdict {
  int k = 0;
  bool passed = false;
  double max_ratio = 0.0;   // max over the band of |H_{+-k}| / |H_0|
  double band_lo_hz = 0.0;  // effective band after grid intersection
  double band_hi_hz = 0.0;
};

// Outcome of the sideband-magnitude truncation heuristic: the matrix can
// be cut to (2n+1)x(2n+1) when every k above n keeps |H_{+-k}| below
// margin*|H_0| over [0, k*f0] intersected with the sweep grid.
struct TruncationReport {
  int nh = 0;
  int kmax = 0;       // highest k checked (defaults to NH/2)
  double margin = 1.0;
  int chosen_n = 0;
  std::vector<TruncationVerdict> per_k;
};

TruncationReport truncation_order(const SidebandResponseSet& data,
                                  double margin = 1.0,
                                  std::optional<int> kmax_override = {});

// Pipeline: restrict to |k| <= n, Hermitian transform, vector fit,
// reverse transform.
CentralColumn build_central_column(const SidebandResponseSet& data, int n,
                                   const FitConfig& cfg);

// Truncated (2n+1)x(2n+1) matrix of transfer functions.  Entry (r, c)
// evaluates the column element H_{r-c}(s + j*c*w0); the realization
// carries the column pole set shifted by -j*c*w0 per block column, so its
// pole multiset is { p_i + j*m*w0 : m in [-n, n] }.
struct HarmonicTransferFunction {
  CentralColumn column;
  int dimension = 0;  // 2n+1
  StateSpaceRealization realization;

  double omega0() const { return column.omega0(); }
};

HarmonicTransferFunction assemble_htf(const CentralColumn& column,
                                      int state_cap = 20000);

// Samples every entry at s = jw through the realization matrices.
std::vector<Eigen::MatrixXcd> sample_htf(const HarmonicTransferFunction& htf,
                                         std::span<const double> omega);

// Identification manifest: the column model file plus the truncation
// evidence.  The full matrix is never serialized; it is reconstructed
// from the column.
struct HtfManifest {
  int n = 0;
  double f0_hz = 0.0;
  int nh = 0;
  ResponseKind kind = ResponseKind::Impedance;
  std::string model_file;  // relative to the manifest's directory
  TruncationReport truncation;
};

void save_manifest(const HtfManifest& manifest, const std::string& path);
HtfManifest load_manifest(const std::string& path);

// Loads the column model referenced by a manifest (path resolved
// relative to the manifest file).
CentralColumn load_column(const std::string& manifest_path,
                          HtfManifest* manifest_out = nullptr);

}  // namespace htfid

#endif  // HTFID_HTF_HPP
