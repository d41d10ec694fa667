// scratch diagnostics; not part of the test suite
#include <cstdio>

#include "htfid/oracle.hpp"
#include "htfid/strip.hpp"
#include "support/helpers.hpp"

using namespace htfid;

int main() {
  const MathieuSpec spec = testutil::strong_pump_mathieu();
  const PltvSystem sys = mathieu_system(spec);
  const auto hss = assemble(sys, testutil::kOracleTrunc);
  const auto poles = open_loop_poles(hss);
  std::printf("retained: %zu  omega0=%.6e  1.5*omega0=%.6e\n", poles.size(),
              spec.omega0, 1.5 * spec.omega0);
  int central_count = 0;
  for (const Complex& p : poles) {
    if (std::abs(p.imag()) <= 1.5 * spec.omega0) {
      ++central_count;
      std::printf("  central copy: (%.10e, %.10e)\n", p.real(), p.imag());
    }
  }
  std::printf("central copies: %d\n", central_count);
  // full retained listing by strip index
  for (const Complex& p : poles) {
    const double mf = p.imag() / spec.omega0;
    std::printf("  m=%+.3f  (%.8e, %.8e)\n", mf, p.real(), p.imag());
  }
  return 0;
}
