#include "motrims/io/grid_file.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>

#include "motrims/error.hpp"
#include "motrims/version.hpp"

namespace motrims::io {

namespace {

constexpr std::string_view kTag = "# motrims-grid ";

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_number(std::string_view s, const std::string& where) {
  s = trim(s);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw DataError(where + ": '" + std::string(s) + "' is not a number");
  return v;
}

strongfield::GridAxis parse_axis(std::string_view s, const std::string& where) {
  std::istringstream ss{std::string(s)};
  std::string a, b, c;
  ss >> a >> b >> c;
  if (c.empty()) throw DataError(where + ": axis needs '<min> <max> <count>'");
  strongfield::GridAxis axis;
  axis.min = parse_number(a, where);
  axis.max = parse_number(b, where);
  std::size_t n = 0;
  auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), n);
  if (ec != std::errc() || ptr != c.data() + c.size() || n == 0) throw DataError(where + ": bad axis count '" + c + "'");
  axis.count = n;
  return axis;
}

const std::string& require(const GridFile& f, const std::string& key, const std::string& origin) {
  auto it = f.meta.find(key);
  if (it == f.meta.end()) throw DataError(origin + ": missing header key '" + key + "'");
  return it->second;
}

}  // namespace

void write_grid(std::ostream& out, const GridFile& file) {
  out << kTag << kGridFormatMajor << '.' << kGridFormatMinor << '\n';
  out << "# kind = " << file.kind << '\n';
  for (const auto& [k, v] : file.meta) out << "# " << k << " = " << v << '\n';
  const char* names[3] = {"axis_x", "axis_y", "axis_z"};
  for (int a = 0; a < 3; ++a) {
    const auto& ax = file.grid.axes[static_cast<std::size_t>(a)];
    out << "# " << names[a] << " = " << g17(ax.min) << ' ' << g17(ax.max) << ' ' << ax.count << '\n';
  }
  std::string line;
  for (double v : file.values) {
    line = g17(v);
    line += '\n';
    out << line;
  }
  if (!out) throw IoError("failed writing grid file");
}

GridFile read_grid(std::istream& in, const std::string& origin) {
  GridFile f;
  std::string line;
  std::size_t line_no = 0;
  bool tagged = false;
  bool axes[3] = {false, false, false};
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = origin + ":" + std::to_string(line_no);
    std::string_view s = trim(line);
    if (s.empty()) continue;
    if (s.front() == '#') {
      if (s.substr(0, kTag.size()) == kTag) {
        const std::string_view ver = trim(s.substr(kTag.size()));
        unsigned major = 0;
        auto [ptr, ec] = std::from_chars(ver.data(), ver.data() + ver.size(), major);
        if (ec != std::errc()) throw DataError(where + ": unreadable format version");
        if (major > kGridFormatMajor) throw DataError(where + ": grid format " + std::string(ver) + " is newer than supported");
        tagged = true;
        continue;
      }
      s.remove_prefix(1);
      const auto eq = s.find('=');
      if (eq == std::string_view::npos) continue;  // free comment
      const std::string key(trim(s.substr(0, eq)));
      const std::string_view value = trim(s.substr(eq + 1));
      if (key == "axis_x" || key == "axis_y" || key == "axis_z") {
        const auto a = static_cast<std::size_t>(key[5] - 'x');
        f.grid.axes[a] = parse_axis(value, where);
        axes[a] = true;
      } else if (key == "kind") {
        f.kind = std::string(value);
      } else {
        f.meta[key] = std::string(value);
      }
      continue;
    }
    if (!tagged) throw DataError(where + ": missing '# motrims-grid' version line");
    f.values.push_back(parse_number(s, where));
  }
  if (!tagged) throw DataError(origin + ": not a grid file (no version line)");
  for (bool a : axes) {
    if (!a) throw DataError(origin + ": missing axis definition");
  }
  try {
    f.grid.validate();
  } catch (const DomainError& e) {
    throw DataError(origin + ": " + e.what());
  }
  if (f.values.size() != f.grid.size()) {
    throw DataError(origin + ": expected " + std::to_string(f.grid.size()) + " values, found " +
                    std::to_string(f.values.size()));
  }
  return f;
}

GridFile to_grid_file(const strongfield::SpectrumMap& map) {
  GridFile f;
  f.kind = "spectrum";
  const auto& p = map.meta.pulse;
  f.meta["wavelength_nm"] = g17(p.wavelength_nm);
  f.meta["intensity_w_cm2"] = g17(p.intensity_w_per_cm2);
  f.meta["cycles"] = std::to_string(p.cycles);
  f.meta["cep_rad"] = g17(p.cep_rad);
  f.meta["polarization"] = g17(p.polarization.x) + " " + g17(p.polarization.y) + " " + g17(p.polarization.z);
  f.meta["envelope"] = "sin2";
  f.meta["state"] = map.meta.state.label;
  f.meta["ip_ev"] = g17(map.meta.state.ip_ev);
  f.meta["normalized"] = map.meta.normalized ? "true" : "false";
  f.meta["momentum_convention"] = map.meta.momentum_convention;
  f.meta["code_version"] = std::string(code_version());
  f.grid = map.grid;
  f.values = map.values;
  return f;
}

strongfield::SpectrumMap spectrum_from_grid_file(const GridFile& f, const std::string& origin) {
  if (f.kind != "spectrum") throw DataError(origin + ": grid kind is '" + f.kind + "', expected 'spectrum'");
  strongfield::SpectrumMap map;
  map.grid = f.grid;
  map.values = f.values;
  auto& p = map.meta.pulse;
  p.wavelength_nm = parse_number(require(f, "wavelength_nm", origin), origin);
  p.intensity_w_per_cm2 = parse_number(require(f, "intensity_w_cm2", origin), origin);
  p.cycles = static_cast<int>(parse_number(require(f, "cycles", origin), origin));
  p.cep_rad = parse_number(require(f, "cep_rad", origin), origin);
  {
    std::istringstream ss(require(f, "polarization", origin));
    std::string a, b, c;
    ss >> a >> b >> c;
    p.polarization = {parse_number(a, origin), parse_number(b, origin), parse_number(c, origin)};
  }
  if (require(f, "envelope", origin) != "sin2") throw DataError(origin + ": unsupported envelope");
  map.meta.state.label = require(f, "state", origin);
  map.meta.state.ip_ev = parse_number(require(f, "ip_ev", origin), origin);
  map.meta.normalized = require(f, "normalized", origin) == "true";
  map.meta.momentum_convention = require(f, "momentum_convention", origin);
  return map;
}

void write_spectrum(const std::string& path, const strongfield::SpectrumMap& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create '" + path + "'");
  write_grid(out, to_grid_file(map));
}

strongfield::SpectrumMap read_spectrum(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open spectrum file '" + path + "'");
  return spectrum_from_grid_file(read_grid(in, path), path);
}

GridFile to_grid_file(const analysis::Histogram2D& h) {
  if (h.u.quantity == h.v.quantity) throw DataError("2D histogram with the same quantity on both axes");
  GridFile f;
  f.kind = "histogram";
  f.meta["u"] = analysis::component_label(h.u.quantity);
  f.meta["v"] = analysis::component_label(h.v.quantity);
  f.meta["slice"] = h.slice;
  f.meta["code_version"] = std::string(code_version());
  const auto iu = static_cast<std::size_t>(h.u.quantity);
  const auto iv = static_cast<std::size_t>(h.v.quantity);
  // A single bin is a pinned axis in grid terms; keep the centre.
  f.grid.axes[iu] = {h.u.center(0), h.u.center(h.u.bins - 1), h.u.bins};
  f.grid.axes[iv] = {h.v.center(0), h.v.center(h.v.bins - 1), h.v.bins};
  f.values.assign(f.grid.size(), 0.0);
  for (std::size_t a = 0; a < h.u.bins; ++a) {
    for (std::size_t b = 0; b < h.v.bins; ++b) {
      std::array<std::size_t, 3> idx{0, 0, 0};
      idx[iu] = a;
      idx[iv] = b;
      f.values[f.grid.index(idx[0], idx[1], idx[2])] = static_cast<double>(h.at(a, b));
    }
  }
  return f;
}

void write_profile_csv(std::ostream& out, const Profile& p, const std::string& x_name, const std::string& y_name) {
  out << x_name << ',' << y_name << '\n';
  for (std::size_t i = 0; i < p.size(); ++i) out << g17(p.x[i]) << ',' << g17(p.y[i]) << '\n';
}

void write_histogram_csv(std::ostream& out, const analysis::Histogram1D& h) {
  out << "# motrims-histogram 1.0\n";
  out << "# quantity = " << analysis::component_label(h.axis.quantity) << "\n";
  out << "# slice = " << h.slice << "\n";
  out << "center_au,count\n";
  for (std::size_t i = 0; i < h.axis.bins; ++i) out << g17(h.axis.center(i)) << ',' << h.counts[i] << '\n';
}

void write_map_csv(std::ostream& out, const std::string& u_name, const std::vector<double>& u,
                   const std::string& v_name, const std::vector<double>& v, const std::vector<double>& values) {
  if (values.size() != u.size() * v.size()) throw DataError("map CSV: value count does not match axes");
  out << u_name << ',' << v_name << ",value\n";
  for (std::size_t a = 0; a < u.size(); ++a) {
    for (std::size_t b = 0; b < v.size(); ++b) {
      out << g17(u[a]) << ',' << g17(v[b]) << ',' << g17(values[a * v.size() + b]) << '\n';
    }
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create '" + path + "'");
  out << text;
  if (!out) throw IoError("failed writing '" + path + "'");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace motrims::io
