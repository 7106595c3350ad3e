#pragma once

// Minimal self-contained SVG renderings of 1D curves and 2D maps. Output is a
// pure function of the inputs (fixed layout, fixed colormap, fixed precision).

#include <string>
#include <vector>

namespace motrims::io {

struct SvgSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  bool points = false;  // markers instead of a polyline
};

std::string svg_curves(const std::vector<SvgSeries>& series, const std::string& title, const std::string& x_label,
                       const std::string& y_label);

// values row-major over (u, v), v fastest; u is drawn along the horizontal axis.
std::string svg_map(const std::vector<double>& u, const std::vector<double>& v, const std::vector<double>& values,
                    const std::string& title, const std::string& u_label, const std::string& v_label);

}  // namespace motrims::io
