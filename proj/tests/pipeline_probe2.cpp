// scratch diagnostics; not part of the test suite
#include <cstdio>

#include "htfid/feedback.hpp"
#include "htfid/htf.hpp"
#include "htfid/oracle.hpp"
#include "htfid/strip.hpp"
#include "support/helpers.hpp"

using namespace htfid;

namespace {

// strip classes derived only from the well-converged central copies
std::vector<Complex> central_targets(const std::vector<Complex>& poles,
                                     double omega0) {
  std::vector<Complex> central;
  for (const Complex& p : poles)
    if (std::abs(p.imag()) <= 1.5 * omega0) central.push_back(p);
  return strip_representatives(central, omega0);
}

}  // namespace

int main() {
  const MathieuSpec spec = testutil::strong_pump_mathieu();
  const PltvSystem sys = mathieu_system(spec);
  const int m = testutil::kOracleTrunc;
  const auto hss = assemble(sys, m);

  {
    const auto poles = open_loop_poles(hss);
    const auto targets = central_targets(poles, spec.omega0);
    std::printf("central targets (%zu):\n", targets.size());
    for (const Complex& t : targets)
      std::printf("  (%.10e, %.10e)\n", t.real(), t.imag());
    // spread of strip images across ALL retained copies
    const auto all_reps = strip_representatives(poles, spec.omega0, 1e-3);
    std::printf("reps at 1e-3 dedupe: %zu\n", all_reps.size());
  }

  {
    const double k = 8.6335e7;
    const auto direct = closed_loop_poles_direct(sys, k, m);
    std::printf("direct poles at K=%.4e: %zu retained\n", k, direct.size());
    int shown = 0;
    for (const Complex& p : direct) {
      const double f = std::abs(p.imag()) / kTwoPi;
      if (f < 7e8 && shown < 8) {
        std::printf("  (%.6e, %.6e) f=%.4e\n", p.real(), p.imag(), f);
        ++shown;
      }
    }
  }

  const auto grid = testutil::linear_grid(1e8, 6e8, 101, 1e9, 8);
  const auto data = analytic_htf_sample(hss, grid, ResponseKind::Admittance);
  FitConfig cfg;
  cfg.rms_tolerance = 1e-9;
  cfg.order_max = 60;

  for (int n : {1, 2, 3}) {
    const auto column = build_central_column(data, n, cfg);
    const auto htf = assemble_htf(column);
    const double k_star = 3.453385472e8;
    double worst_cl = 0.0, worst_dom = 0.0;
    double worst_cl_k = 0, worst_dom_k = 0;
    for (int i = 1; i <= 20; ++i) {
      const double k = k_star * (0.25 + 1.5 * (i - 1) / 19.0);
      const auto cl = close_loop(htf.realization, k);
      Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(cl.a, false);
      std::vector<Complex> htf_poles(es.eigenvalues().data(),
                                     es.eigenvalues().data() +
                                         es.eigenvalues().size());
      const auto direct = closed_loop_poles_direct(sys, k, m);
      const auto targets = central_targets(direct, spec.omega0);
      std::vector<Complex> in_band;
      for (const Complex& p : targets) {
        const double f = std::abs(p.imag()) / kTwoPi;
        if (f >= 1e8 && f <= 6e8) in_band.push_back(p);
      }
      const double match =
          testutil::worst_match(htf_poles, in_band, spec.omega0);
      if (match > worst_cl) {
        worst_cl = match;
        worst_cl_k = k;
      }
      double dom_oracle = -1e30, dom_htf = -1e30;
      Complex dom_htf_pole;
      for (const Complex& p : in_band) dom_oracle = std::max(dom_oracle, p.real());
      for (const Complex& p : htf_poles) {
        const double f = std::abs(p.imag()) / kTwoPi;
        if (f >= 1e8 && f <= 6e8 && p.real() > dom_htf) {
          dom_htf = p.real();
          dom_htf_pole = p;
        }
      }
      const double dom_err =
          std::abs(dom_oracle - dom_htf) / std::abs(Complex(0, kTwoPi * 5e8));
      if (dom_err > worst_dom) {
        worst_dom = dom_err;
        worst_dom_k = k;
        if (dom_err > 1e-3)
          std::printf("  n=%d K=%.4e dom_oracle=%.5e dom_htf=%.5e htf pole=(%.4e,%.4e)\n",
                      n, k, dom_oracle, dom_htf, dom_htf_pole.real(),
                      dom_htf_pole.imag());
      }
    }
    std::printf("n=%d: worst match=%.3e (K=%.3e)  worst dom err=%.3e (K=%.3e)\n",
                n, worst_cl, worst_cl_k, worst_dom, worst_dom_k);
  }
  return 0;
}
