#include "htfid/sysio.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace htfid {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Line {
  std::size_t number;
  std::vector<std::string> tokens;
};

std::vector<Line> tokenize(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open system file: " + path);
  std::vector<Line> lines;
  std::string raw;
  std::size_t number = 0;
  while (std::getline(in, raw)) {
    ++number;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    std::stringstream ss(raw);
    Line line{number, {}};
    std::string tok;
    while (ss >> tok) line.tokens.push_back(tok);
    if (!line.tokens.empty()) lines.push_back(std::move(line));
  }
  return lines;
}

double num(const std::string& tok, const std::string& path, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ParseError(path + ":" + std::to_string(line) +
                     ": cannot parse number '" + tok + "'");
  }
}

LoadedSystem load_pltv(const std::vector<Line>& lines, const std::string& path) {
  PltvSystem sys;
  struct Entry {
    int m, row, col;
    Complex value;
  };
  std::map<char, std::vector<Entry>> entries;
  for (const Line& line : lines) {
    const auto& t = line.tokens;
    if (t[0] == "type") continue;
    if (t[0] == "omega0_rad_s" && t.size() == 2) {
      sys.omega0 = num(t[1], path, line.number);
    } else if (t[0] == "state_dim" && t.size() == 2) {
      sys.state_dim = static_cast<int>(num(t[1], path, line.number));
    } else if (t[0] == "coeff" && t.size() == 7) {
      const std::string& mat = t[1];
      if (mat != "G" && mat != "B" && mat != "C" && mat != "D")
        throw ParseError(path + ":" + std::to_string(line.number) +
                         ": unknown matrix '" + mat + "'");
      Entry e;
      e.m = static_cast<int>(num(t[2], path, line.number));
      if (e.m < 0)
        throw ParseError(path + ":" + std::to_string(line.number) +
                         ": list harmonics m >= 0 only; negative harmonics "
                         "are implied by conjugation");
      e.row = static_cast<int>(num(t[3], path, line.number));
      e.col = static_cast<int>(num(t[4], path, line.number));
      e.value = {num(t[5], path, line.number), num(t[6], path, line.number)};
      entries[mat[0]].push_back(e);
    } else {
      throw ParseError(path + ":" + std::to_string(line.number) +
                       ": unrecognized directive '" + t[0] + "'");
    }
  }
  if (sys.state_dim < 1)
    throw ParseError(path + ": missing or invalid state_dim");
  if (!(sys.omega0 > 0.0))
    throw ParseError(path + ": missing or invalid omega0_rad_s");

  auto fill = [&](char key, std::map<int, Eigen::MatrixXcd>& coeffs, int rows,
                  int cols) {
    for (const Entry& e : entries[key]) {
      if (e.row < 0 || e.row >= rows || e.col < 0 || e.col >= cols)
        throw ParseError(path + ": coefficient index (" +
                         std::to_string(e.row) + "," + std::to_string(e.col) +
                         ") out of range for matrix " + std::string(1, key));
      auto it = coeffs.find(e.m);
      if (it == coeffs.end())
        it = coeffs.emplace(e.m, Eigen::MatrixXcd::Zero(rows, cols)).first;
      it->second(e.row, e.col) = e.value;
    }
    // mirror to negative harmonics for a real periodic matrix
    std::vector<int> positive;
    for (const auto& [m, mat] : coeffs)
      if (m > 0) positive.push_back(m);
    for (int m : positive) coeffs[-m] = coeffs[m].conjugate();
    if (coeffs.count(0)) {
      if ((coeffs[0] - coeffs[0].conjugate()).norm() >
          1e-12 * (1.0 + coeffs[0].norm()))
        throw ParseError(path + ": harmonic 0 of matrix " +
                         std::string(1, key) + " must be real");
    }
  };
  fill('G', sys.g_coeffs, sys.state_dim, sys.state_dim);
  fill('B', sys.b_coeffs, sys.state_dim, 1);
  fill('C', sys.c_coeffs, 1, sys.state_dim);
  fill('D', sys.d_coeffs, 1, 1);
  sys.validate();
  return {std::move(sys), ResponseKind::Impedance};
}

LoadedSystem load_mathieu(const std::vector<Line>& lines,
                          const std::string& path) {
  MathieuSpec spec;
  bool have_wn = false, have_w0 = false;
  for (const Line& line : lines) {
    const auto& t = line.tokens;
    if (t[0] == "type") continue;
    if (t[0] == "omega_n_rad_s" && t.size() == 2) {
      spec.omega_n = num(t[1], path, line.number);
      have_wn = true;
    } else if (t[0] == "zeta" && t.size() == 2) {
      spec.zeta = num(t[1], path, line.number);
    } else if (t[0] == "epsilon" && t.size() == 2) {
      spec.epsilon = num(t[1], path, line.number);
    } else if (t[0] == "omega0_rad_s" && t.size() == 2) {
      spec.omega0 = num(t[1], path, line.number);
      have_w0 = true;
    } else if (t[0] == "output" && t.size() == 2) {
      if (t[1] == "position") spec.output = MathieuOutput::Position;
      else if (t[1] == "velocity") spec.output = MathieuOutput::Velocity;
      else
        throw ParseError(path + ":" + std::to_string(line.number) +
                         ": output must be position or velocity");
    } else {
      throw ParseError(path + ":" + std::to_string(line.number) +
                       ": unrecognized directive '" + t[0] + "'");
    }
  }
  if (!have_wn || !have_w0)
    throw ParseError(path + ": mathieu stanza requires omega_n_rad_s and omega0_rad_s");
  const ResponseKind kind = spec.output == MathieuOutput::Velocity
                                ? ResponseKind::Admittance
                                : ResponseKind::Impedance;
  return {mathieu_system(spec), kind};
}

}  // namespace

LoadedSystem load_system(const std::string& path) {
  const std::vector<Line> lines = tokenize(path);
  if (lines.empty()) throw ParseError(path + ": empty system file");
  const auto& first = lines.front().tokens;
  if (first.size() != 2 || first[0] != "type")
    throw ParseError(path + ": first directive must be 'type pltv' or 'type mathieu'");
  if (first[1] == "pltv") return load_pltv(lines, path);
  if (first[1] == "mathieu") return load_mathieu(lines, path);
  throw ParseError(path + ": unknown system type '" + first[1] + "'");
}

void save_system(const PltvSystem& sys, const std::string& path) {
  sys.validate();
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open output file: " + path);
  out << "type pltv\n";
  out << "omega0_rad_s " << fmt(sys.omega0) << "\n";
  out << "state_dim " << sys.state_dim << "\n";
  auto dump = [&](const char* name, const std::map<int, Eigen::MatrixXcd>& coeffs) {
    for (const auto& [m, mat] : coeffs) {
      if (m < 0) continue;  // implied by conjugation
      for (Eigen::Index r = 0; r < mat.rows(); ++r) {
        for (Eigen::Index c = 0; c < mat.cols(); ++c) {
          const Complex v = mat(r, c);
          if (v == Complex(0.0, 0.0)) continue;
          out << "coeff " << name << ' ' << m << ' ' << r << ' ' << c << ' '
              << fmt(v.real()) << ' ' << fmt(v.imag()) << "\n";
        }
      }
    }
  };
  dump("G", sys.g_coeffs);
  dump("B", sys.b_coeffs);
  dump("C", sys.c_coeffs);
  dump("D", sys.d_coeffs);
  if (!out) throw ParseError("write failed: " + path);
}

}  // namespace htfid
