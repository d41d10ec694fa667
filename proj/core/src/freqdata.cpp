#include "htfid/freqdata.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace htfid {

void FrequencyGrid::validate() const {
  if (points_hz.empty())
    throw std::invalid_argument("frequency grid is empty");
  if (!(f0_hz > 0.0))
    throw std::invalid_argument("fundamental frequency f0 must be > 0");
  if (nh < 1)
    throw std::invalid_argument("harmonic count NH must be >= 1");
  double prev = 0.0;
  for (std::size_t i = 0; i < points_hz.size(); ++i) {
    const double f = points_hz[i];
    if (!std::isfinite(f) || f <= 0.0)
      throw std::invalid_argument("grid frequency at index " +
                                  std::to_string(i) + " must be finite and > 0");
    if (f == prev)
      throw std::invalid_argument("duplicate grid frequency at index " +
                                  std::to_string(i));
    if (f < prev)
      throw std::invalid_argument("non-monotone grid at index " +
                                  std::to_string(i));
    prev = f;
  }
}

std::string to_string(ResponseKind kind) {
  return kind == ResponseKind::Impedance ? "impedance" : "admittance";
}

ResponseKind response_kind_from_string(const std::string& s) {
  if (s == "impedance") return ResponseKind::Impedance;
  if (s == "admittance") return ResponseKind::Admittance;
  throw ConfigError("unknown response kind '" + s +
                    "' (expected impedance or admittance)");
}

namespace {

void check_ensemble(const FrequencyGrid& grid, int count,
                    const std::vector<std::vector<Complex>>& responses,
                    const char* what) {
  if (static_cast<int>(responses.size()) != count)
    throw std::invalid_argument(std::string(what) + ": expected " +
                                std::to_string(count) + " sidebands, got " +
                                std::to_string(responses.size()));
  for (const auto& v : responses)
    if (v.size() != grid.size())
      throw std::invalid_argument(std::string(what) +
                                  ": sideband vector length does not match grid");
}

}  // namespace

SidebandResponseSet::SidebandResponseSet(
    FrequencyGrid grid, ResponseKind kind,
    std::vector<std::vector<Complex>> responses)
    : grid_(std::move(grid)), kind_(kind), responses_(std::move(responses)) {
  grid_.validate();
  check_ensemble(grid_, 2 * grid_.nh + 1, responses_, "SidebandResponseSet");
}

const std::vector<Complex>& SidebandResponseSet::at(int k) const {
  if (k < -grid_.nh || k > grid_.nh)
    throw std::out_of_range("sideband index " + std::to_string(k) +
                            " outside [-NH, NH]");
  return responses_[static_cast<std::size_t>(k + grid_.nh)];
}

HermitianResponseSet::HermitianResponseSet(
    FrequencyGrid grid, ResponseKind kind, int n,
    std::vector<std::vector<Complex>> responses)
    : grid_(std::move(grid)), kind_(kind), n_(n),
      responses_(std::move(responses)) {
  grid_.validate();
  if (n_ < 0) throw std::invalid_argument("retained order n must be >= 0");
  check_ensemble(grid_, 2 * n_ + 1, responses_, "HermitianResponseSet");
}

const std::vector<Complex>& HermitianResponseSet::at(int k) const {
  if (k < -n_ || k > n_)
    throw std::out_of_range("sideband index " + std::to_string(k) +
                            " outside [-n, n]");
  return responses_[static_cast<std::size_t>(k + n_)];
}

namespace {

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim surrounding whitespace
    std::size_t b = cell.find_first_not_of(" \t\r");
    std::size_t e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double parse_double(const std::string& cell, std::size_t row, std::size_t col) {
  try {
    std::size_t used = 0;
    double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    if (!std::isfinite(v))
      throw ParseError("non-finite sample at row " + std::to_string(row) +
                       ", column " + std::to_string(col + 1));
    return v;
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception&) {
    throw ParseError("cannot parse number '" + cell + "' at row " +
                     std::to_string(row) + ", column " + std::to_string(col + 1));
  }
}

// Metadata comments look like: "# f0_hz=1e9 kind=impedance nh=8"
void parse_metadata(const std::string& line, std::optional<double>* f0,
                    std::optional<ResponseKind>* kind) {
  std::stringstream ss(line.substr(1));
  std::string tok;
  while (ss >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = tok.substr(0, eq);
    const std::string val = tok.substr(eq + 1);
    if (key == "f0_hz") *f0 = std::stod(val);
    else if (key == "kind") *kind = response_kind_from_string(val);
  }
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

SidebandResponseSet load_responses(const std::string& path,
                                   const LoadOptions& opts) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open response file: " + path);

  std::optional<double> meta_f0;
  std::optional<ResponseKind> meta_kind;

  std::string line;
  std::size_t row = 0;
  // comments, then a header row
  do {
    if (!std::getline(in, line)) throw ParseError(path + ": missing header row");
    ++row;
    if (!line.empty() && line[0] == '#')
      parse_metadata(line, &meta_f0, &meta_kind);
  } while (line.empty() || line[0] == '#');

  const auto header = split_csv_row(line);
  if (header.empty() || header[0] != "f_hz")
    throw ParseError(path + ": malformed header, first column must be f_hz");
  if (header.size() < 3 || header.size() % 2 == 0)
    throw ParseError(path + ": malformed header, expected f_hz plus re/im column pairs");
  const int nh = (static_cast<int>(header.size()) - 1) / 4;
  if (static_cast<std::size_t>(2 * (2 * nh + 1) + 1) != header.size())
    throw ParseError(path + ": malformed header, column count " +
                     std::to_string(header.size()) +
                     " does not match any NH (need 4*NH+3 columns)");
  for (int k = -nh; k <= nh; ++k) {
    const std::size_t base = static_cast<std::size_t>(2 * (k + nh) + 1);
    const std::string re = "H" + std::to_string(k) + "_re";
    const std::string im = "H" + std::to_string(k) + "_im";
    if (header[base] != re)
      throw ParseError(path + ": missing sideband column '" + re + "' (found '" +
                       header[base] + "')");
    if (header[base + 1] != im)
      throw ParseError(path + ": missing sideband column '" + im + "' (found '" +
                       header[base + 1] + "')");
  }

  std::vector<double> freqs;
  std::vector<std::vector<Complex>> responses(
      static_cast<std::size_t>(2 * nh + 1));
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split_csv_row(line);
    if (cells.size() != header.size())
      throw ParseError(path + ": row " + std::to_string(row) + " has " +
                       std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(header.size()));
    const double f = parse_double(cells[0], row, 0);
    if (!freqs.empty()) {
      if (f == freqs.back())
        throw ParseError(path + ": duplicate grid frequency at row " +
                         std::to_string(row));
      if (f < freqs.back())
        throw ParseError(path + ": non-monotone grid at row " +
                         std::to_string(row));
    }
    freqs.push_back(f);
    for (int k = -nh; k <= nh; ++k) {
      const std::size_t base = static_cast<std::size_t>(2 * (k + nh) + 1);
      const double re = parse_double(cells[base], row, base);
      const double im = parse_double(cells[base + 1], row, base + 1);
      responses[static_cast<std::size_t>(k + nh)].emplace_back(re, im);
    }
  }
  if (freqs.empty()) throw ParseError(path + ": no data rows");

  const std::optional<double> f0 = opts.f0_hz ? opts.f0_hz : meta_f0;
  if (!f0)
    throw ParseError(path +
                     ": fundamental frequency unknown (no f0_hz metadata in "
                     "file and none supplied)");
  const ResponseKind kind =
      opts.kind ? *opts.kind
                : meta_kind.value_or(ResponseKind::Impedance);

  FrequencyGrid grid{std::move(freqs), *f0, nh};
  try {
    return SidebandResponseSet(std::move(grid), kind, std::move(responses));
  } catch (const std::invalid_argument& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void save_responses(const SidebandResponseSet& set, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open output file: " + path);
  const int nh = set.nh();
  out << "# f0_hz=" << fmt_double(set.grid().f0_hz)
      << " kind=" << to_string(set.kind()) << " nh=" << nh << "\n";
  out << "f_hz";
  for (int k = -nh; k <= nh; ++k)
    out << ",H" << k << "_re,H" << k << "_im";
  out << "\n";
  for (std::size_t i = 0; i < set.grid().size(); ++i) {
    out << fmt_double(set.grid().points_hz[i]);
    for (int k = -nh; k <= nh; ++k) {
      const Complex& h = set.at(k)[i];
      out << ',' << fmt_double(h.real()) << ',' << fmt_double(h.imag());
    }
    out << "\n";
  }
  if (!out) throw ParseError("write failed: " + path);
}

HermitianResponseSet to_hermitian(const SidebandResponseSet& src, int n) {
  if (n < 0 || n > src.nh())
    throw std::invalid_argument("retained order n=" + std::to_string(n) +
                                " outside [0, NH=" + std::to_string(src.nh()) +
                                "]");
  const std::size_t np = src.grid().size();
  std::vector<std::vector<Complex>> out(static_cast<std::size_t>(2 * n + 1));
  out[static_cast<std::size_t>(n)] = src.at(0);
  const Complex half_j(0.0, 0.5);
  for (int k = 1; k <= n; ++k) {
    const auto& hp = src.at(k);
    const auto& hm = src.at(-k);
    auto& tp = out[static_cast<std::size_t>(n + k)];
    auto& tm = out[static_cast<std::size_t>(n - k)];
    tp.resize(np);
    tm.resize(np);
    for (std::size_t i = 0; i < np; ++i) {
      tp[i] = 0.5 * (hp[i] + hm[i]);
      tm[i] = half_j * (hp[i] - hm[i]);
    }
  }
  return HermitianResponseSet(src.grid(), src.kind(), n, std::move(out));
}

SidebandResponseSet from_hermitian(const HermitianResponseSet& src) {
  const int n = src.n();
  const std::size_t np = src.grid().size();
  std::vector<std::vector<Complex>> out(static_cast<std::size_t>(2 * n + 1));
  out[static_cast<std::size_t>(n)] = src.at(0);
  const Complex j(0.0, 1.0);
  for (int k = 1; k <= n; ++k) {
    const auto& tp = src.at(k);
    const auto& tm = src.at(-k);
    auto& hp = out[static_cast<std::size_t>(n + k)];
    auto& hm = out[static_cast<std::size_t>(n - k)];
    hp.resize(np);
    hm.resize(np);
    for (std::size_t i = 0; i < np; ++i) {
      hp[i] = tp[i] - j * tm[i];
      hm[i] = tp[i] + j * tm[i];
    }
  }
  FrequencyGrid grid = src.grid();
  grid.nh = n;
  return SidebandResponseSet(std::move(grid), src.kind(), std::move(out));
}

}  // namespace htfid
