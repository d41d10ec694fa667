#include "htfid/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "htfid/types.hpp"

namespace htfid {

namespace {

constexpr double kWidth = 820.0;
constexpr double kHeight = 620.0;
constexpr double kLeft = 90.0;
constexpr double kRight = 30.0;
constexpr double kTop = 50.0;
constexpr double kBottom = 60.0;

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct Range {
  double lo, hi;
  double map(double v, double px_lo, double px_hi) const {
    return px_lo + (v - lo) / (hi - lo) * (px_hi - px_lo);
  }
};

Range padded(double lo, double hi) {
  if (!(lo < hi)) {
    const double c = std::isfinite(lo) ? lo : 0.0;
    const double h = std::max(std::abs(c), 1.0);
    return {c - h, c + h};
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

}  // namespace

void write_pole_diagram_svg(const std::string& path,
                            const std::vector<PlotSeries>& series,
                            const std::string& title) {
  double x_lo = std::numeric_limits<double>::infinity();
  double x_hi = -std::numeric_limits<double>::infinity();
  double y_lo = x_lo, y_hi = x_hi;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      x_lo = std::min(x_lo, x);
      x_hi = std::max(x_hi, x);
      y_lo = std::min(y_lo, y);
      y_hi = std::max(y_hi, y);
    }
  }
  const Range xr = padded(std::isfinite(x_lo) ? x_lo : -1.0,
                          std::isfinite(x_hi) ? x_hi : 1.0);
  const Range yr = padded(std::isfinite(y_lo) ? y_lo : -1.0,
                          std::isfinite(y_hi) ? y_hi : 1.0);

  auto px = [&](double x) { return xr.map(x, kLeft, kWidth - kRight); };
  auto py = [&](double y) { return yr.map(y, kHeight - kBottom, kTop); };

  std::ofstream out(path);
  if (!out) throw ParseError("cannot open output file: " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' '
      << kHeight << "\">\n";
  out << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "  <text x=\"" << kWidth / 2 << "\" y=\"28\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"16\">"
      << title << "</text>\n";

  // frame
  out << "  <rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\""
      << kWidth - kLeft - kRight << "\" height=\"" << kHeight - kTop - kBottom
      << "\" fill=\"none\" stroke=\"black\"/>\n";

  // ticks
  const int nticks = 6;
  for (int i = 0; i <= nticks; ++i) {
    const double fx = xr.lo + (xr.hi - xr.lo) * i / nticks;
    const double gx = px(fx);
    out << "  <line x1=\"" << gx << "\" y1=\"" << kHeight - kBottom
        << "\" x2=\"" << gx << "\" y2=\"" << kHeight - kBottom + 6
        << "\" stroke=\"black\"/>\n";
    out << "  <text x=\"" << gx << "\" y=\"" << kHeight - kBottom + 22
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << fmt(fx) << "</text>\n";
    const double fy = yr.lo + (yr.hi - yr.lo) * i / nticks;
    const double gy = py(fy);
    out << "  <line x1=\"" << kLeft - 6 << "\" y1=\"" << gy << "\" x2=\""
        << kLeft << "\" y2=\"" << gy << "\" stroke=\"black\"/>\n";
    out << "  <text x=\"" << kLeft - 10 << "\" y=\"" << gy + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << fmt(fy) << "</text>\n";
  }

  // imaginary axis (Re = 0) reference when visible
  if (xr.lo < 0.0 && xr.hi > 0.0) {
    const double gx = px(0.0);
    out << "  <line x1=\"" << gx << "\" y1=\"" << kTop << "\" x2=\"" << gx
        << "\" y2=\"" << kHeight - kBottom
        << "\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>\n";
  }

  out << "  <text x=\"" << (kLeft + kWidth - kRight) / 2 << "\" y=\""
      << kHeight - 16
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\">Re(s) [1/s]</text>\n";
  out << "  <text x=\"22\" y=\"" << (kTop + kHeight - kBottom) / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\" transform=\"rotate(-90 22 "
      << (kTop + kHeight - kBottom) / 2 << ")\">Im(s)/2pi [Hz]</text>\n";

  const char* colors[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd"};
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = colors[si % 4];
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      const double gx = px(x);
      const double gy = py(y);
      if (s.marker == Marker::Cross) {
        out << "  <line x1=\"" << gx - 4 << "\" y1=\"" << gy - 4 << "\" x2=\""
            << gx + 4 << "\" y2=\"" << gy + 4 << "\" stroke=\"" << color
            << "\" stroke-width=\"1.5\"/>\n";
        out << "  <line x1=\"" << gx - 4 << "\" y1=\"" << gy + 4 << "\" x2=\""
            << gx + 4 << "\" y2=\"" << gy - 4 << "\" stroke=\"" << color
            << "\" stroke-width=\"1.5\"/>\n";
      } else {
        out << "  <rect x=\"" << gx - 4 << "\" y=\"" << gy - 4
            << "\" width=\"8\" height=\"8\" fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"1.5\"/>\n";
      }
    }
    // legend entry
    const double ly = kTop + 18.0 + 18.0 * static_cast<double>(si);
    const double lx = kWidth - kRight - 150.0;
    if (s.marker == Marker::Cross) {
      out << "  <line x1=\"" << lx - 4 << "\" y1=\"" << ly - 4 << "\" x2=\""
          << lx + 4 << "\" y2=\"" << ly + 4 << "\" stroke=\"" << color
          << "\" stroke-width=\"1.5\"/>\n";
      out << "  <line x1=\"" << lx - 4 << "\" y1=\"" << ly + 4 << "\" x2=\""
          << lx + 4 << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color
          << "\" stroke-width=\"1.5\"/>\n";
    } else {
      out << "  <rect x=\"" << lx - 4 << "\" y=\"" << ly - 4
          << "\" width=\"8\" height=\"8\" fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"1.5\"/>\n";
    }
    out << "  <text x=\"" << lx + 12 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.label
        << "</text>\n";
  }

  out << "</svg>\n";
  if (!out) throw ParseError("write failed: " + path);
}

}  // namespace htfid
