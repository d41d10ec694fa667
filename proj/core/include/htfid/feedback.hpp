#ifndef HTFID_FEEDBACK_HPP
#define HTFID_FEEDBACK_HPP

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "htfid/htf.hpp"
#include "htfid/types.hpp"

namespace htfid {

// A parallel resistor closes the loop around an impedance matrix with
// K = 1/R_stab; a series resistor closes an admittance matrix with
// K = R_stab.  The gain multiplies the identity on every sideband.
enum class FeedbackTopology { ParallelResistor, SeriesResistor };

std::string to_string(FeedbackTopology topology);
FeedbackTopology topology_from_string(const std::string& s);

struct FeedbackSpec {
  FeedbackTopology topology = FeedbackTopology::SeriesResistor;
  std::vector<double> values_ohm;  // strictly positive; the open-loop point is implicit
};

double k_gain(FeedbackTopology topology, double r_ohm, ResponseKind kind);

// Closed-loop state space for u = u_ext - K y:
//   A_cl = A - K B (I + K D)^-1 C
struct ClosedLoopRealization {
  Eigen::MatrixXcd a, b, c, d;
};

ClosedLoopRealization close_loop(const StateSpaceRealization& plant, double k);

struct FrequencyBand {
  double lo_hz = 0.0;
  double hi_hz = 0.0;
};

enum class EigenMode { Auto, Dense, ShiftInvert };

struct SweepOptions {
  double stability_margin = 0.0;  // rad/s; poles with Re > margin are unstable
  EigenMode mode = EigenMode::Auto;
  double shift_target_hz = 0.0;   // shift-invert target; 0 = band centre
  int dense_state_limit = 2000;   // Auto switches to shift-invert above this
  int krylov_dim = 80;
  int workers = 0;                // 0 = HTFID_WORKERS / hardware default
};

struct LocusRecord {
  double r_stab_ohm = 0.0;  // +inf marks the parallel open-loop point
  double k = 0.0;
  bool open_loop = false;
  std::vector<Complex> poles;  // filtered to |Im(s)|/2pi inside the band
  double max_real_part = 0.0;  // over every computed eigenvalue
  bool band_empty = false;
  bool stable = false;  // false whenever band_empty: never silently stable
  std::optional<Complex> dominant_unstable;
};

struct PoleLocus {
  FeedbackTopology topology = FeedbackTopology::SeriesResistor;
  FrequencyBand band;
  double margin = 0.0;
  std::vector<LocusRecord> records;  // ordered by R_stab ascending
};

// Closes the loop at each resistor value (plus the implicit open-loop
// point), eigensolves, and filters poles to the reporting band.
// Per-value solves run concurrently; assembly order is by value.
PoleLocus sweep(const HarmonicTransferFunction& htf, const FeedbackSpec& spec,
                ResponseKind kind, FrequencyBand band,
                const SweepOptions& opts = {});

struct StabilityReport {
  double margin = 0.0;
  std::optional<double> critical_value_ohm;
  std::optional<std::pair<double, double>> crossing_bracket_ohm;
  std::optional<double> crossing_estimate_ohm;
  // (R_stab, dominant real part) per swept value, ascending R
  std::vector<std::pair<double, double>> dominant_real_parts;
};

StabilityReport classify(const PoleLocus& locus, double margin = 0.0);

// Locus CSV: r_stab_ohm,k_gain,pole_re,pole_im,stable -- one row per pole
// per value; a value whose band is empty emits a single nan,nan row.
void save_locus_csv(const PoleLocus& locus, const std::string& path);

struct LocusPoint {
  double r_stab_ohm;
  double k;
  Complex pole;
  bool stable;
};
std::vector<LocusPoint> load_locus_csv(const std::string& path);

void save_report(const StabilityReport& report, FeedbackTopology topology,
                 const std::string& path);

}  // namespace htfid

#endif  // HTFID_FEEDBACK_HPP
