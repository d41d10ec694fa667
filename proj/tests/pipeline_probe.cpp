// scratch diagnostics; not part of the test suite
#include <cstdio>

#include "htfid/feedback.hpp"
#include "htfid/htf.hpp"
#include "htfid/oracle.hpp"
#include "htfid/strip.hpp"
#include "support/helpers.hpp"

using namespace htfid;

int main() {
  const MathieuSpec spec = testutil::strong_pump_mathieu();
  const PltvSystem sys = mathieu_system(spec);
  const int m = testutil::kOracleTrunc;
  const auto hss = assemble(sys, m);
  const auto grid = testutil::linear_grid(1e8, 6e8, 101, 1e9, 8);
  const auto data = analytic_htf_sample(hss, grid, ResponseKind::Admittance);

  const auto report = truncation_order(data, 1.0);
  std::printf("chosen_n = %d\n", report.chosen_n);

  FitConfig cfg;
  cfg.rms_tolerance = 1e-9;
  cfg.order_max = 60;

  for (int n : {report.chosen_n, 0}) {
    const auto column = build_central_column(data, n, cfg);
    std::printf("n=%d: fit order=%d rms=%.3e it=%d conv=%d\n", n,
                column.model.order(), column.model.achieved_rms,
                column.model.iterations, column.model.converged);
    const auto htf = assemble_htf(column);

    // compare fitted column poles against oracle in-strip eigenvalues
    const auto oracle_poles = open_loop_poles(hss);
    const auto oracle_strip = strip_representatives(oracle_poles, spec.omega0);
    std::vector<Complex> targets;
    for (const Complex& p : oracle_strip)
      if (std::abs(p.imag()) / kTwoPi >= 1e8 && std::abs(p.imag()) / kTwoPi <= 6e8)
        targets.push_back(p);
    std::printf("  oracle in-strip in-band targets: %zu\n", targets.size());
    const double pole_match =
        testutil::worst_match(column.model.poles, targets, spec.omega0);
    std::printf("  identification pole match: %.3e\n", pole_match);

    // closed-loop comparison over a K sweep
    const double k_star = 3.453385472e8;
    double worst_cl = 0.0, worst_dom = 0.0;
    for (int i = 1; i <= 20; ++i) {
      const double k = k_star * (0.25 + 1.5 * (i - 1) / 19.0);
      const auto cl = close_loop(htf.realization, k);
      Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(cl.a, false);
      std::vector<Complex> htf_poles(es.eigenvalues().data(),
                                     es.eigenvalues().data() +
                                         es.eigenvalues().size());
      const auto direct = closed_loop_poles_direct(sys, k, m);
      // in-band oracle poles must be reproduced
      std::vector<Complex> in_band;
      for (const Complex& p : direct) {
        const double f = std::abs(p.imag()) / kTwoPi;
        if (f >= 1e8 && f <= 6e8) in_band.push_back(p);
      }
      const double match = testutil::worst_match(htf_poles, in_band);
      worst_cl = std::max(worst_cl, match);
      // dominant in-band real part comparison
      double dom_oracle = -1e30, dom_htf = -1e30;
      for (const Complex& p : in_band) dom_oracle = std::max(dom_oracle, p.real());
      for (const Complex& p : htf_poles) {
        const double f = std::abs(p.imag()) / kTwoPi;
        if (f >= 1e8 && f <= 6e8) dom_htf = std::max(dom_htf, p.real());
      }
      const double dom_err = std::abs(dom_oracle - dom_htf) /
                             std::abs(Complex(dom_oracle, kTwoPi * 5e8));
      worst_dom = std::max(worst_dom, dom_err);
      if (i == 1 || i == 10 || i == 20)
        std::printf("  K=%.4e in-band=%zu match=%.3e dom_err=%.3e\n", k,
                    in_band.size(), match, dom_err);
    }
    std::printf("  worst closed-loop match=%.3e  worst dominant err=%.3e\n",
                worst_cl, worst_dom);
  }
  return 0;
}
