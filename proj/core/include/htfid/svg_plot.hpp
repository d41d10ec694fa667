#ifndef HTFID_SVG_PLOT_HPP
#define HTFID_SVG_PLOT_HPP

#include <string>
#include <utility>
#include <vector>

namespace htfid {

enum class Marker { Cross, Square };

struct PlotSeries {
  std::string label;
  Marker marker = Marker::Cross;
  // (Re(s) in 1/s, Im(s)/2pi in Hz)
  std::vector<std::pair<double, double>> points;
};

// Self-contained pole-diagram SVG: axes auto-fit to the data with 5%
// padding, crosses for HTF-feedback loci, squares for direct parametric
// loci.  An empty series list still produces a valid empty-axes file.
void write_pole_diagram_svg(const std::string& path,
                            const std::vector<PlotSeries>& series,
                            const std::string& title);

}  // namespace htfid

#endif  // HTFID_SVG_PLOT_HPP
