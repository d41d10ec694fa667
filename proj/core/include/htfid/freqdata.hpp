#ifndef HTFID_FREQDATA_HPP
#define HTFID_FREQDATA_HPP

#include <optional>
#include <string>
#include <vector>

#include "htfid/types.hpp"

namespace htfid {

// Small-signal sweep grid shared by every sideband response.
// Frequencies are stored in Hz and converted to rad/s only inside
// numeric kernels.
struct FrequencyGrid {
  std::vector<double> points_hz;  // strictly increasing, all > 0
  double f0_hz = 0.0;             // fundamental (pump) frequency
  int nh = 0;                     // harmonic count of the source sweep

  std::size_t size() const { return points_hz.size(); }
  double omega(std::size_t i) const { return kTwoPi * points_hz[i]; }
  double omega0() const { return kTwoPi * f0_hz; }

  // Throws std::invalid_argument on monotonicity/positivity violations.
  void validate() const;
};

enum class ResponseKind { Impedance, Admittance };

std::string to_string(ResponseKind kind);
ResponseKind response_kind_from_string(const std::string& s);

// Sampled sideband frequency responses H_k(jw), k in [-NH, NH], one
// complex sample per grid point.  H_{-k} is stored already conjugated,
// i.e. the file and this container hold the mathematical object used
// downstream, not the raw lower-sideband ratio.
class SidebandResponseSet {
 public:
  SidebandResponseSet(FrequencyGrid grid, ResponseKind kind,
                      std::vector<std::vector<Complex>> responses);

  const FrequencyGrid& grid() const { return grid_; }
  ResponseKind kind() const { return kind_; }
  int nh() const { return grid_.nh; }

  // k in [-nh, nh]
  const std::vector<Complex>& at(int k) const;

 private:
  FrequencyGrid grid_;
  ResponseKind kind_;
  std::vector<std::vector<Complex>> responses_;  // index k + nh
};

// Hermitian-symmetrized ensemble: elements ~H_k with the property
// ~H(jw) extended by conjugate symmetry to -jw is representable with
// real coefficients, which is what the rational fit assumes.
class HermitianResponseSet {
 public:
  HermitianResponseSet(FrequencyGrid grid, ResponseKind kind, int n,
                       std::vector<std::vector<Complex>> responses);

  const FrequencyGrid& grid() const { return grid_; }
  ResponseKind kind() const { return kind_; }
  int n() const { return n_; }

  // k in [-n, n]
  const std::vector<Complex>& at(int k) const;

 private:
  FrequencyGrid grid_;
  ResponseKind kind_;
  int n_;
  std::vector<std::vector<Complex>> responses_;  // index k + n
};

struct LoadOptions {
  std::optional<double> f0_hz;          // overrides file metadata
  std::optional<ResponseKind> kind;     // overrides file metadata
};

// CSV schema: optional '#' metadata comments, then a header row
//   f_hz,H{-NH}_re,H{-NH}_im,...,H{NH}_re,H{NH}_im
// with literal signed integers in the column names (H-2_re, H0_re, ...),
// then one data row per grid point.  f0/kind come from a metadata
// comment written by this library or from LoadOptions; an explicit
// option wins over the file.
SidebandResponseSet load_responses(const std::string& path,
                                   const LoadOptions& opts = {});
void save_responses(const SidebandResponseSet& set, const std::string& path);

// ~H_0 = H_0; for k in [1, n]:
//   ~H_k    = (H_k + H_{-k}) / 2
//   ~H_{-k} = (j/2) (H_k - H_{-k})
HermitianResponseSet to_hermitian(const SidebandResponseSet& src, int n);

// Inverse transform:
//   H_k    = ~H_k - j ~H_{-k}
//   H_{-k} = ~H_k + j ~H_{-k}
SidebandResponseSet from_hermitian(const HermitianResponseSet& src);

}  // namespace htfid

#endif  // HTFID_FREQDATA_HPP
