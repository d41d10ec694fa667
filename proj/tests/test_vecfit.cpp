#include <doctest.h>

#include <random>

#include "htfid/freqdata.hpp"
#include "htfid/vecfit.hpp"
#include "support/helpers.hpp"

using namespace htfid;
using testutil::worst_match;

namespace {

// Synthesize Hermitian response data from a known model: the model IS the
// oracle for the identification tests.
HermitianResponseSet synthesize(const RationalModel& model,
                                const FrequencyGrid& grid,
                                double noise_rel = 0.0, unsigned seed = 0) {
  std::vector<double> omega(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) omega[i] = grid.omega(i);
  auto samples = evaluate(model, omega);
  if (noise_rel > 0.0) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (auto& row : samples)
      for (auto& z : row)
        z *= (1.0 + noise_rel * unit(rng)) *
             Complex(1.0, noise_rel * unit(rng));
  }
  const int n = (model.element_count() - 1) / 2;
  return {grid, ResponseKind::Impedance, n, std::move(samples)};
}

RationalModel four_pole_model() {
  RationalModel m;
  m.coeff_field = CoeffField::Real;
  const Complex p1(-2e7, kTwoPi * 2.0e8);
  const Complex p2(-5e7, kTwoPi * 4.5e8);
  m.poles = {p1, std::conj(p1), p2, std::conj(p2)};
  // three elements sharing the pole set with distinct residues
  m.residues = {
      {Complex(1e8, 2e7), Complex(4e7, 0), Complex(-2e7, 1e7)},
      {Complex(1e8, -2e7), Complex(4e7, 0), Complex(-2e7, -1e7)},
      {Complex(3e8, -1e7), Complex(0, 5e7), Complex(9e7, 3e7)},
      {Complex(3e8, 1e7), Complex(0, -5e7), Complex(9e7, -3e7)},
  };
  m.direct = {Complex(2.0, 0), Complex(0.0, 0), Complex(-1.0, 0)};
  return m;
}

const FrequencyGrid kBand = testutil::linear_grid(1e8, 6e8, 101, 1e9, 1);

}  // namespace

TEST_CASE("initial poles follow the log-spacing rule") {
  SUBCASE("order 2 on [1, 10] rad/s degenerates to the geometric mean") {
    FrequencyGrid grid{{1.0 / kTwoPi, 10.0 / kTwoPi}, 1e9, 1};
    const auto poles = initial_poles(grid, 2);
    REQUIRE(poles.size() == 2);
    CHECK(poles[0].imag() == doctest::Approx(3.1622776601683795).epsilon(1e-12));
    CHECK(poles[0].real() ==
          doctest::Approx(-0.031622776601683794).epsilon(1e-12));
    CHECK(poles[1] == std::conj(poles[0]));
  }
  SUBCASE("odd order adds a real pole at -w_max") {
    FrequencyGrid grid{{1.0 / kTwoPi, 10.0 / kTwoPi}, 1e9, 1};
    const auto poles = initial_poles(grid, 3);
    REQUIRE(poles.size() == 3);
    CHECK(poles[2] == Complex(-10.0, 0.0));
  }
  SUBCASE("order 4 on [1, 100] hits the band endpoints") {
    FrequencyGrid grid{{1.0 / kTwoPi, 100.0 / kTwoPi}, 1e9, 1};
    const auto poles = initial_poles(grid, 4);
    REQUIRE(poles.size() == 4);
    CHECK(poles[0].imag() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(poles[2].imag() == doctest::Approx(100.0).epsilon(1e-12));
  }
  SUBCASE("order below 2 is rejected") {
    FrequencyGrid grid{{1.0, 2.0}, 1e9, 1};
    CHECK_THROWS_AS(initial_poles(grid, 1), std::invalid_argument);
  }
}

TEST_CASE("pole relocation converges on exact data in three steps") {
  const RationalModel truth = four_pole_model();
  const auto data = synthesize(truth, kBand);
  FitConfig cfg;
  std::vector<Complex> poles = initial_poles(kBand, 4);
  double rms = 1.0;
  for (int it = 0; it < 3; ++it) {
    auto res = vf_iterate(data, poles, cfg);
    poles = res.poles;
    rms = res.rel_rms;
  }
  CHECK(worst_match(poles, truth.poles) < 1e-8);
  CHECK(rms < 1e-9);
}

TEST_CASE("constant data is carried by the direct term") {
  FrequencyGrid grid = testutil::linear_grid(1e8, 6e8, 41, 1e9, 1);
  RationalModel constant;
  constant.coeff_field = CoeffField::Real;
  constant.direct = {Complex(5.0, 0.0)};
  constant.residues = {};
  const auto data = synthesize(constant, grid);
  FitConfig cfg;
  const auto res = vf_iterate(data, initial_poles(grid, 2), cfg);
  CHECK(res.rel_rms < cfg.rms_tolerance);
  const auto model = fit(data, cfg);
  CHECK(model.converged);
  CHECK(model.achieved_rms < cfg.rms_tolerance);
  double residue_mass = 0.0;
  for (const auto& row : model.residues)
    for (const Complex& r : row) residue_mass += std::abs(r);
  CHECK(std::abs(model.direct[0] - Complex(5.0, 0.0)) < 1e-6);
  CHECK(residue_mass / std::abs(model.direct[0]) < 1e-6);
}

TEST_CASE("noise-perturbed data still locates the poles") {
  const RationalModel truth = four_pole_model();
  const auto data = synthesize(truth, kBand, 1e-6, 99);
  FitConfig cfg;
  cfg.order_min = 4;
  cfg.order_max = 4;
  const auto model = fit(data, cfg);
  CHECK(worst_match(model.poles, truth.poles) < 1e-4);
}

TEST_CASE("fit finds the textbook second-order resonance") {
  const double wn = kTwoPi * 1e8;
  const double zeta = 0.05;
  const Complex p(-zeta * wn, wn * std::sqrt(1.0 - zeta * zeta));
  RationalModel truth;
  truth.coeff_field = CoeffField::Real;
  truth.poles = {p, std::conj(p)};
  // classic 1/(s^2 + 2 zeta wn s + wn^2) partial fractions
  const Complex r = 1.0 / (p - std::conj(p));
  truth.residues = {{r}, {-r}};
  truth.direct = {Complex(0, 0)};
  const FrequencyGrid grid = testutil::linear_grid(2e7, 3e8, 101, 1e9, 1);
  const auto data = synthesize(truth, grid);
  FitConfig cfg;
  const auto model = fit(data, cfg);
  CHECK(model.converged);
  REQUIRE(model.order() == 2);
  CHECK(worst_match(model.poles, truth.poles) < 1e-6);
}

TEST_CASE("right-half-plane poles are retained, never reflected") {
  RationalModel truth;
  truth.coeff_field = CoeffField::Real;
  const Complex rhp(1e6, kTwoPi * 1.23e8);
  const Complex lhp(-3e7, kTwoPi * 3.3e8);
  truth.poles = {rhp, std::conj(rhp), lhp, std::conj(lhp)};
  truth.residues = {
      {Complex(5e7, 1e7)}, {Complex(5e7, -1e7)},
      {Complex(2e8, 0)}, {Complex(2e8, 0)},
  };
  truth.direct = {Complex(0.5, 0)};
  const auto data = synthesize(truth, kBand);
  FitConfig cfg;
  const auto model = fit(data, cfg);
  CHECK(model.converged);
  CHECK(worst_match(model.poles, truth.poles) < 1e-6);
  bool has_rhp = false;
  for (const Complex& p : model.poles) has_rhp |= p.real() > 0.0;
  CHECK(has_rhp);
}

TEST_CASE("pole retention holds when the requested order exceeds the truth") {
  const RationalModel truth = four_pole_model();
  const auto data = synthesize(truth, kBand);
  FitConfig cfg;
  cfg.order_min = 8;
  cfg.order_max = 8;
  cfg.rms_tolerance = 1e-7;
  const auto model = fit(data, cfg);
  CHECK(worst_match(model.poles, truth.poles) < 1e-6);
}

TEST_CASE("fitted vector shares one pole set across elements") {
  // element 0 is dominated by pair 1, element 2 by pair 2; the joint fit
  // must carry both pairs for every element
  const RationalModel truth = four_pole_model();
  const auto data = synthesize(truth, kBand);
  FitConfig cfg;
  const auto model = fit(data, cfg);
  CHECK(model.converged);
  CHECK(model.element_count() == 3);
  for (const auto& row : model.residues)
    CHECK(row.size() == 3);  // one residue per element at every shared pole
  CHECK(worst_match(model.poles, truth.poles) < 1e-6);
}

TEST_CASE("real-field models evaluate conjugate-symmetrically") {
  const RationalModel truth = four_pole_model();
  const std::vector<double> omega = {kTwoPi * 1.3e8, kTwoPi * 4.4e8};
  const std::vector<double> neg = {-kTwoPi * 1.3e8, -kTwoPi * 4.4e8};
  const auto pos_vals = evaluate(truth, omega);
  const auto neg_vals = evaluate(truth, neg);
  for (std::size_t e = 0; e < pos_vals.size(); ++e)
    for (std::size_t i = 0; i < omega.size(); ++i)
      CHECK(std::abs(neg_vals[e][i] - std::conj(pos_vals[e][i])) <
            1e-12 * std::abs(pos_vals[e][i]));
}

TEST_CASE("realization agrees with partial fractions") {
  SUBCASE("single pole") {
    RationalModel m;
    m.poles = {Complex(-1e6, 0)};
    m.residues = {{Complex(2e6, 0)}};
    m.direct = {Complex(0, 0)};
    const auto ss = realize(m);
    CHECK(ss.order() == 1);
    const std::vector<double> w = {1e6};
    const auto direct_eval = evaluate(m, w);
    const auto ss_eval = evaluate(ss, w);
    const Complex expected = Complex(2e6, 0) / (Complex(0, 1e6) - Complex(-1e6, 0));
    CHECK(std::abs(direct_eval[0][0] - expected) < 1e-9 * std::abs(expected));
    CHECK(std::abs(ss_eval[0][0] - expected) < 1e-9 * std::abs(expected));
  }
  SUBCASE("conjugate pair: dual-path evaluation within 1e-12") {
    const RationalModel m = four_pole_model();
    const auto ss = realize(m);
    CHECK(ss.order() == 4);
    std::vector<double> w;
    for (std::size_t i = 0; i < kBand.size(); i += 10) w.push_back(kBand.omega(i));
    const auto a = evaluate(m, w);
    const auto b = evaluate(ss, w);
    for (std::size_t e = 0; e < a.size(); ++e)
      for (std::size_t i = 0; i < w.size(); ++i)
        CHECK(std::abs(a[e][i] - b[e][i]) <= 1e-12 * std::abs(a[e][i]));
  }
  SUBCASE("empty pole list is the constant response") {
    RationalModel m;
    m.direct = {Complex(5, 0)};
    const auto ss = realize(m);
    CHECK(ss.order() == 0);
    const std::vector<double> w = {1e8, 1e9};
    const auto vals = evaluate(ss, w);
    CHECK(vals[0][0] == Complex(5, 0));
    CHECK(vals[0][1] == Complex(5, 0));
  }
  SUBCASE("eigenvalues of A equal the model poles") {
    const RationalModel m = four_pole_model();
    const auto ss = realize(m);
    std::vector<Complex> eigs(ss.a_diag.data(), ss.a_diag.data() + ss.order());
    CHECK(worst_match(eigs, m.poles) < 1e-10);
  }
}

TEST_CASE("evaluation refuses samples on top of a pole") {
  RationalModel m;
  m.poles = {Complex(0.0, kTwoPi * 1e8), Complex(0.0, -kTwoPi * 1e8)};
  m.residues = {{Complex(1, 0)}, {Complex(1, 0)}};
  m.direct = {Complex(0, 0)};
  const std::vector<double> w = {kTwoPi * 1e8};
  CHECK_THROWS_AS(evaluate(m, w), NumericError);
}

TEST_CASE("recombine reverses the hermitian transform on coefficients") {
  SUBCASE("n = 0 passes through") {
    RationalModel m = four_pole_model();
    m.residues = {{m.residues[0][0]},
                  {m.residues[1][0]},
                  {m.residues[2][0]},
                  {m.residues[3][0]}};
    m.direct = {m.direct[0]};
    const auto out = recombine(m, 0);
    CHECK(out.coeff_field == CoeffField::Complex);
    for (std::size_t p = 0; p < m.poles.size(); ++p)
      CHECK(out.residues[p][0] == m.residues[p][0]);
  }
  SUBCASE("zero ~H_{-k} makes H_k equal H_{-k}") {
    RationalModel m;
    m.poles = {Complex(-1e6, 0)};
    m.residues = {{Complex(0, 0), Complex(2, 0), Complex(3, 0)}};
    m.direct = {Complex(0, 0), Complex(1, 0), Complex(0.5, 0)};
    const auto out = recombine(m, 1);
    CHECK(out.residues[0][2] == out.residues[0][0]);  // H_1 == H_-1
    CHECK(out.residues[0][2] == m.residues[0][2]);
    CHECK(out.direct[2] == out.direct[0]);
  }
  SUBCASE("element count must be odd") {
    RationalModel m;
    m.poles = {Complex(-1, 0)};
    m.residues = {{Complex(1, 0), Complex(2, 0)}};
    m.direct = {Complex(0, 0), Complex(0, 0)};
    CHECK_THROWS_AS(recombine(m, 1), ConfigError);
  }
}

TEST_CASE("recombined evaluation matches the sideband algebra") {
  // fit hermitianized data, recombine, and compare the evaluated H_1
  // against the original (non-Hermitian) samples
  const RationalModel truth = four_pole_model();
  const auto herm = synthesize(truth, kBand);
  // interpret the three elements as ~H_{-1}, ~H_0, ~H_1 and rebuild
  const auto sidebands = from_hermitian(herm);
  FitConfig cfg;
  cfg.rms_tolerance = 1e-8;
  const auto fitted = fit(herm, cfg);
  REQUIRE(fitted.converged);
  const auto column = recombine(fitted, 1);
  std::vector<double> w;
  for (std::size_t i = 0; i < kBand.size(); ++i) w.push_back(kBand.omega(i));
  const auto vals = evaluate(column, w);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const Complex expect = sidebands.at(1)[i];
    CHECK(std::abs(vals[2][i] - expect) <=
          1e-6 * std::max(1.0, std::abs(expect)));
  }
}

TEST_CASE("model files round-trip") {
  testutil::TempDir dir;
  RationalModel m = four_pole_model();
  m.achieved_rms = 3.25e-7;
  m.iterations = 4;
  m.converged = true;
  const std::string path = dir.file("model.json");
  save_model(m, 1e9, {"H_-1", "H_0", "H_1"}, path);
  double f0 = 0.0;
  std::vector<std::string> labels;
  const auto back = load_model(path, &f0, &labels);
  CHECK(f0 == 1e9);
  REQUIRE(labels.size() == 3);
  CHECK(labels[1] == "H_0");
  REQUIRE(back.poles.size() == m.poles.size());
  for (std::size_t i = 0; i < m.poles.size(); ++i) {
    CHECK(back.poles[i] == m.poles[i]);
    for (std::size_t e = 0; e < m.direct.size(); ++e)
      CHECK(back.residues[i][e] == m.residues[i][e]);
  }
  CHECK(back.achieved_rms == m.achieved_rms);
  CHECK(back.converged == m.converged);
}
