#include "htfid/htf.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include <json.hpp>

namespace htfid {

TruncationReport truncation_order(const SidebandResponseSet& data,
                                  double margin,
                                  std::optional<int> kmax_override) {
  if (!(margin >= 1.0))
    throw std::invalid_argument("truncation margin must be >= 1");
  const FrequencyGrid& grid = data.grid();
  const int nh = data.nh();
  int kmax = kmax_override.value_or(nh / 2);
  kmax = std::clamp(kmax, 0, nh);

  TruncationReport report;
  report.nh = nh;
  report.kmax = kmax;
  report.margin = margin;

  if (kmax >= 1 && grid.points_hz.front() > grid.f0_hz)
    throw std::invalid_argument(
        "sweep band does not intersect [0, f0]; the truncation criterion "
        "cannot be evaluated");

  int chosen = 0;
  const auto& h0 = data.at(0);
  for (int k = 1; k <= kmax; ++k) {
    TruncationVerdict v;
    v.k = k;
    const double hi = std::min(k * grid.f0_hz, grid.points_hz.back());
    v.band_lo_hz = grid.points_hz.front();
    v.band_hi_hz = hi;
    const auto& hp = data.at(k);
    const auto& hm = data.at(-k);
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (grid.points_hz[i] > hi) break;
      const double num = std::max(std::abs(hp[i]), std::abs(hm[i]));
      const double den = std::abs(h0[i]);
      double ratio;
      if (den > 0.0)
        ratio = num / den;
      else
        ratio = num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
      worst = std::max(worst, ratio);
    }
    v.max_ratio = worst;
    v.passed = worst < margin;
    if (!v.passed) chosen = std::max(chosen, k);
    report.per_k.push_back(v);
  }
  report.chosen_n = chosen;
  return report;
}

CentralColumn build_central_column(const SidebandResponseSet& data, int n,
                                   const FitConfig& cfg) {
  if (n < 0 || n > data.nh())
    throw std::invalid_argument("column order n=" + std::to_string(n) +
                                " outside [0, NH]");
  const HermitianResponseSet herm = to_hermitian(data, n);
  const RationalModel fitted = fit(herm, cfg);
  CentralColumn column;
  column.n = n;
  column.f0_hz = data.grid().f0_hz;
  column.model = recombine(fitted, n);
  return column;
}

HarmonicTransferFunction assemble_htf(const CentralColumn& column,
                                      int state_cap) {
  const int n = column.n;
  const int dim = 2 * n + 1;
  const int q = column.model.order();
  if (column.model.element_count() != dim)
    throw std::invalid_argument("central column element count != 2n+1");
  const long total = static_cast<long>(dim) * q;
  if (total > state_cap)
    throw ConfigError("assembled realization would need " +
                      std::to_string(total) + " states (cap " +
                      std::to_string(state_cap) +
                      "); reduce the fit order or the truncation order");
  const double w0 = column.omega0();

  StateSpaceRealization ss;
  ss.a_diag.resize(total);
  ss.b = Eigen::MatrixXcd::Zero(total, dim);
  ss.c = Eigen::MatrixXcd::Zero(dim, total);
  ss.d = Eigen::MatrixXcd::Zero(dim, dim);

  for (int c = -n; c <= n; ++c) {
    const int cb = c + n;
    const Eigen::Index off = static_cast<Eigen::Index>(cb) * q;
    for (int i = 0; i < q; ++i) {
      // Entry (r, c) evaluates H_{r-c}(s + j c w0): shifting the argument
      // moves every pole of the block down by j c w0.
      ss.a_diag(off + i) =
          column.model.poles[static_cast<std::size_t>(i)] - Complex(0.0, c * w0);
      ss.b(off + i, cb) = 1.0;
    }
    for (int r = -n; r <= n; ++r) {
      const int diff = r - c;
      if (std::abs(diff) > n) continue;
      const int rb = r + n;
      const auto e = static_cast<std::size_t>(diff + n);
      for (int i = 0; i < q; ++i)
        ss.c(rb, off + i) = column.model.residues[static_cast<std::size_t>(i)][e];
      ss.d(rb, cb) = column.model.direct[e];
    }
  }

  HarmonicTransferFunction htf;
  htf.column = column;
  htf.dimension = dim;
  htf.realization = std::move(ss);
  return htf;
}

std::vector<Eigen::MatrixXcd> sample_htf(const HarmonicTransferFunction& htf,
                                         std::span<const double> omega) {
  const StateSpaceRealization& ss = htf.realization;
  std::vector<Eigen::MatrixXcd> out;
  out.reserve(omega.size());
  for (double w : omega) {
    const Complex s(0.0, w);
    for (int i = 0; i < ss.order(); ++i) {
      if (std::abs(s - ss.a_diag(i)) <= 1e-12 * std::abs(ss.a_diag(i)))
        throw NumericError("HTF sample at w = " + std::to_string(w) +
                           " rad/s coincides with a realization pole");
    }
    Eigen::MatrixXcd m = ss.d;
    // A is diagonal: C (sI - A)^-1 B column by column
    Eigen::VectorXcd resolvent(ss.order());
    for (int i = 0; i < ss.order(); ++i) resolvent(i) = 1.0 / (s - ss.a_diag(i));
    for (int c = 0; c < ss.inputs(); ++c) {
      const Eigen::VectorXcd x = resolvent.cwiseProduct(ss.b.col(c));
      m.col(c) += ss.c * x;
    }
    out.push_back(std::move(m));
  }
  return out;
}

namespace {

nlohmann::json report_to_json(const TruncationReport& r) {
  nlohmann::json per_k = nlohmann::json::array();
  for (const auto& v : r.per_k) {
    per_k.push_back({{"k", v.k},
                     {"passed", v.passed},
                     {"max_ratio", v.max_ratio},
                     {"band_lo_hz", v.band_lo_hz},
                     {"band_hi_hz", v.band_hi_hz}});
  }
  return {{"nh", r.nh},
          {"kmax", r.kmax},
          {"margin", r.margin},
          {"chosen_n", r.chosen_n},
          {"per_k", std::move(per_k)}};
}

TruncationReport report_from_json(const nlohmann::json& j) {
  TruncationReport r;
  r.nh = j.value("nh", 0);
  r.kmax = j.value("kmax", 0);
  r.margin = j.value("margin", 1.0);
  r.chosen_n = j.value("chosen_n", 0);
  if (j.contains("per_k")) {
    for (const auto& v : j["per_k"]) {
      TruncationVerdict tv;
      tv.k = v.value("k", 0);
      tv.passed = v.value("passed", false);
      tv.max_ratio = v.value("max_ratio", 0.0);
      tv.band_lo_hz = v.value("band_lo_hz", 0.0);
      tv.band_hi_hz = v.value("band_hi_hz", 0.0);
      r.per_k.push_back(tv);
    }
  }
  return r;
}

}  // namespace

void save_manifest(const HtfManifest& manifest, const std::string& path) {
  nlohmann::json j;
  j["format"] = "htfid-manifest";
  j["version"] = 1;
  j["n"] = manifest.n;
  j["f0_hz"] = manifest.f0_hz;
  j["nh"] = manifest.nh;
  j["kind"] = to_string(manifest.kind);
  j["model_file"] = manifest.model_file;
  j["truncation"] = report_to_json(manifest.truncation);
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open output file: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw ParseError("write failed: " + path);
}

HtfManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open manifest: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ParseError(path + ": invalid JSON: " + e.what());
  }
  if (j.value("format", "") != "htfid-manifest")
    throw ParseError(path + ": not an htfid manifest");
  HtfManifest m;
  m.n = j.at("n").get<int>();
  m.f0_hz = j.at("f0_hz").get<double>();
  m.nh = j.value("nh", 0);
  m.kind = response_kind_from_string(j.value("kind", "impedance"));
  m.model_file = j.at("model_file").get<std::string>();
  if (j.contains("truncation")) m.truncation = report_from_json(j["truncation"]);
  return m;
}

CentralColumn load_column(const std::string& manifest_path,
                          HtfManifest* manifest_out) {
  const HtfManifest manifest = load_manifest(manifest_path);
  std::filesystem::path model_path(manifest.model_file);
  if (model_path.is_relative())
    model_path = std::filesystem::path(manifest_path).parent_path() / model_path;
  double f0 = 0.0;
  CentralColumn column;
  column.model = load_model(model_path.string(), &f0);
  column.n = manifest.n;
  column.f0_hz = manifest.f0_hz != 0.0 ? manifest.f0_hz : f0;
  if (column.model.element_count() != 2 * manifest.n + 1)
    throw ParseError(manifest_path +
                     ": model element count does not match manifest order n");
  if (manifest_out) *manifest_out = manifest;
  return column;
}

}  // namespace htfid
