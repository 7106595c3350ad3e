#pragma once

// Self-describing grid files (SpectrumMap and 2D histograms) and plot-data
// CSVs. See docs/formats.md.
//
//   # motrims-grid 1.0
//   # kind = spectrum
//   # <key> = <value>          (metadata, one per line)
//   # axis_x = <min> <max> <count>
//   # axis_y = ...
//   # axis_z = ...
//   <value>                    (one per line, row-major, z fastest)

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "motrims/analysis.hpp"
#include "motrims/profile.hpp"
#include "motrims/strongfield.hpp"

namespace motrims::io {

inline constexpr unsigned kGridFormatMajor = 1;
inline constexpr unsigned kGridFormatMinor = 0;

struct GridFile {
  std::string kind;
  std::map<std::string, std::string> meta;
  strongfield::MomentumGrid grid;
  std::vector<double> values;
};

void write_grid(std::ostream& out, const GridFile& file);
GridFile read_grid(std::istream& in, const std::string& origin = "<grid>");

GridFile to_grid_file(const strongfield::SpectrumMap& map);
// DataError when required metadata is missing or malformed.
strongfield::SpectrumMap spectrum_from_grid_file(const GridFile& file, const std::string& origin = "<grid>");

void write_spectrum(const std::string& path, const strongfield::SpectrumMap& map);
strongfield::SpectrumMap read_spectrum(const std::string& path);

// Histogram2D as a grid file: u on the first active axis, v on the second.
GridFile to_grid_file(const analysis::Histogram2D& hist);

// Plot data.
void write_profile_csv(std::ostream& out, const Profile& p, const std::string& x_name, const std::string& y_name);
void write_histogram_csv(std::ostream& out, const analysis::Histogram1D& h);
// Long-format (u, v, value) table of a 2D array, v fastest.
void write_map_csv(std::ostream& out, const std::string& u_name, const std::vector<double>& u,
                   const std::string& v_name, const std::vector<double>& v, const std::vector<double>& values);

// Writes text to a file, IoError naming the path on failure.
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace motrims::io
