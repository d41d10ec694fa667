#ifndef HTFID_SYSIO_HPP
#define HTFID_SYSIO_HPP

#include <optional>
#include <string>

#include "htfid/freqdata.hpp"
#include "htfid/oracle.hpp"

namespace htfid {

// System files are line-oriented key/value text.  Two stanza types:
//
//   type pltv
//   omega0_rad_s 6.283185307179586e9
//   state_dim 2
//   coeff G 0 0 1 1.0 0.0        # matrix harmonic row col re im
//   coeff B 0 1 0 1.0 0.0
//   coeff C 0 0 0 1.0 0.0
//
// lists harmonics m >= 0 only; m > 0 entries imply the conjugate at -m.
//
//   type mathieu
//   omega_n_rad_s 3.14159e9
//   zeta 0.02
//   epsilon 0.3
//   omega0_rad_s 6.28318e9
//   output velocity              # or: position
//
// expands to the damped Mathieu oscillator at load.  A velocity output
// suggests an admittance response, position an impedance.
struct LoadedSystem {
  PltvSystem system;
  ResponseKind suggested_kind = ResponseKind::Impedance;
};

LoadedSystem load_system(const std::string& path);
void save_system(const PltvSystem& sys, const std::string& path);

}  // namespace htfid

#endif  // HTFID_SYSIO_HPP
