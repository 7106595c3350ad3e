#include "motrims/io/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "motrims/error.hpp"

namespace motrims::io {

std::string_view event_format_label(EventFormat f) { return f == EventFormat::kCsv ? "csv" : "bin"; }

EventFormat parse_event_format(std::string_view text) {
  if (text == "csv") return EventFormat::kCsv;
  if (text == "bin" || text == "binary") return EventFormat::kBinary;
  throw ConfigError("unknown event format '" + std::string(text) + "' (expected csv or bin)");
}

RunConfig::RunConfig() { pulse.intensity_w_per_cm2 = 2.0e10; }

ensemble::TargetEnsemble RunConfig::effective_target() const {
  ensemble::TargetEnsemble t = target;
  t.excited_fraction = channels.enable_5p ? channels.f_5p : 0.0;
  t.mass_amu = species.mass_amu;
  return t;
}

void RunConfig::validate() const {
  try {
    pulse.validate();
    effective_target().validate();
    focus.validate();
    spectrometer.validate();
    species.validate();
    detector.validate();
    coils.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
  if (!channels.enable_5s && !channels.enable_5p) throw ConfigError("invalid configuration: no channel enabled");
  if (channels.photons_5s < 1 || channels.photons_5p < 1) {
    throw ConfigError("invalid configuration: photon numbers must be >= 1");
  }
  const auto& a = analysis;
  if (!(a.map_half_range_au > 0.0) || a.map_nodes < 2 || !(a.sample_half_range_au > 0.0) || a.sample_nodes < 2) {
    throw ConfigError("invalid configuration: analysis grids need a positive range and >= 2 nodes");
  }
  if (!(a.slice_rho_au > 0.0) || !(a.hist_range_au > 0.0) || a.hist_bins == 0 || !(a.slab_au > 0.0)) {
    throw ConfigError("invalid configuration: analysis slice, range and bins must be positive");
  }
  if (a.quadrature.steps_per_cycle < 2 || a.quadrature.max_refinements < 0 || !(a.quadrature.rtol > 0.0)) {
    throw ConfigError("invalid configuration: quadrature settings out of range");
  }
  const auto& c = characterize;
  if (c.expansion_times_ms.size() < 3 || !(c.scan_step_mm > 0.0) || c.scan_points < 5 || !(c.pixel_size_um > 0.0) ||
      c.image_pixels < 8 || !(c.image_intensity > c.image_dark) || c.expansion_noise < 0.0 ||
      !(c.scan_shots_per_point > 0.0)) {
    throw ConfigError("invalid configuration: characterize section out of range");
  }
}

namespace {

// --- value codecs -------------------------------------------------------------

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad(const std::string& msg) { throw std::invalid_argument(msg); }

double to_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    bad("expected a finite number, got '" + std::string(s) + "'");
  }
  return v;
}

template <typename Int>
Int to_int(std::string_view s) {
  s = trim(s);
  Int v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) bad("expected an integer, got '" + std::string(s) + "'");
  return v;
}

bool to_bool(std::string_view s) {
  std::string t(trim(s));
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "true" || t == "yes" || t == "on" || t == "1") return true;
  if (t == "false" || t == "no" || t == "off" || t == "0") return false;
  bad("expected true/false, got '" + t + "'");
}

std::vector<double> to_list(std::string_view s) {
  std::vector<double> out;
  s = trim(s);
  if (s.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    out.push_back(to_double(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

Vec3 to_vec3(std::string_view s) {
  const auto v = to_list(s);
  if (v.size() != 3) bad("expected three comma-separated numbers");
  return {v[0], v[1], v[2]};
}

std::string fmt(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string fmt(const Vec3& v) { return fmt(v.x) + ", " + fmt(v.y) + ", " + fmt(v.z); }

std::string fmt_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
  return s;
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

// --- key registry -------------------------------------------------------------

struct KeyDef {
  std::string section;
  std::string key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define MOTRIMS_DOUBLE(sec, name, expr)                                             \
  KeyDef {                                                                          \
    sec, name, [](RunConfig& c, std::string_view v) { c.expr = to_double(v); },     \
        [](const RunConfig& c) { return fmt(static_cast<double>(c.expr)); }         \
  }
#define MOTRIMS_VEC3(sec, name, expr)                                               \
  KeyDef {                                                                          \
    sec, name, [](RunConfig& c, std::string_view v) { c.expr = to_vec3(v); },       \
        [](const RunConfig& c) { return fmt(c.expr); }                              \
  }
#define MOTRIMS_INT(sec, name, expr, type)                                          \
  KeyDef {                                                                          \
    sec, name, [](RunConfig& c, std::string_view v) { c.expr = to_int<type>(v); },  \
        [](const RunConfig& c) { return std::to_string(c.expr); }                   \
  }
#define MOTRIMS_BOOL(sec, name, expr)                                               \
  KeyDef {                                                                          \
    sec, name, [](RunConfig& c, std::string_view v) { c.expr = to_bool(v); },       \
        [](const RunConfig& c) { return fmt_bool(c.expr); }                         \
  }

const std::vector<KeyDef>& registry() {
  static const std::vector<KeyDef> keys = [] {
    std::vector<KeyDef> k;
    // [run]
    k.push_back(MOTRIMS_INT("run", "seed", run.seed, std::uint64_t));
    k.push_back(MOTRIMS_INT("run", "events", run.events, std::size_t));
    k.push_back(MOTRIMS_INT("run", "workers", run.workers, unsigned));
    k.push_back({"run", "out", [](RunConfig& c, std::string_view v) { c.run.out = std::string(trim(v)); },
                 [](const RunConfig& c) { return c.run.out; }});
    k.push_back({"run", "format",
                 [](RunConfig& c, std::string_view v) {
                   try {
                     c.run.format = parse_event_format(trim(v));
                   } catch (const ConfigError& e) {
                     bad(e.what());
                   }
                 },
                 [](const RunConfig& c) { return std::string(event_format_label(c.run.format)); }});
    k.push_back(MOTRIMS_BOOL("run", "svg", run.svg));
    // [pulse]
    k.push_back(MOTRIMS_DOUBLE("pulse", "wavelength_nm", pulse.wavelength_nm));
    k.push_back(MOTRIMS_DOUBLE("pulse", "intensity_w_cm2", pulse.intensity_w_per_cm2));
    k.push_back(MOTRIMS_INT("pulse", "cycles", pulse.cycles, int));
    k.push_back(MOTRIMS_DOUBLE("pulse", "cep_rad", pulse.cep_rad));
    k.push_back(MOTRIMS_VEC3("pulse", "polarization", pulse.polarization));
    // [channels]
    k.push_back(MOTRIMS_BOOL("channels", "enable_5s", channels.enable_5s));
    k.push_back(MOTRIMS_BOOL("channels", "enable_5p", channels.enable_5p));
    k.push_back(MOTRIMS_DOUBLE("channels", "f_5p", channels.f_5p));
    k.push_back(MOTRIMS_INT("channels", "photons_5s", channels.photons_5s, int));
    k.push_back(MOTRIMS_INT("channels", "photons_5p", channels.photons_5p, int));
    // [target]
    k.push_back({"target", "kind",
                 [](RunConfig& c, std::string_view v) {
                   try {
                     const auto kind = ensemble::parse_target_kind(trim(v));
                     const double mass = c.species.mass_amu;
                     switch (kind) {
                       case ensemble::TargetKind::kMot3D: c.target = ensemble::TargetEnsemble::mot3d(); break;
                       case ensemble::TargetKind::kMolasses2D: c.target = ensemble::TargetEnsemble::molasses2d(); break;
                       case ensemble::TargetKind::kBeam2D: c.target = ensemble::TargetEnsemble::beam2d(); break;
                     }
                     c.target.mass_amu = mass;
                     c.channels.f_5p = c.target.excited_fraction;
                     c.channels.enable_5p = c.target.excited_fraction > 0.0;
                   } catch (const Error& e) {
                     bad(e.what());
                   }
                 },
                 [](const RunConfig& c) { return std::string(ensemble::target_kind_label(c.target.kind)); }});
    k.push_back(MOTRIMS_VEC3("target", "fwhm_mm", target.fwhm_mm));
    k.push_back(MOTRIMS_VEC3("target", "center_mm", target.center_mm));
    k.push_back(MOTRIMS_VEC3("target", "temperature_uk", target.temperature_uk));
    k.push_back(MOTRIMS_DOUBLE("target", "density_cm3", target.peak_density_cm3));
    k.push_back(MOTRIMS_DOUBLE("target", "beam_velocity_m_s", target.beam_velocity_m_s));
    k.push_back({"target", "mass_amu",
                 [](RunConfig& c, std::string_view v) { c.target.mass_amu = c.species.mass_amu = to_double(v); },
                 [](const RunConfig& c) { return fmt(c.species.mass_amu); }});
    // [focus]
    k.push_back(MOTRIMS_DOUBLE("focus", "waist_um", focus.waist_um));
    k.push_back(MOTRIMS_DOUBLE("focus", "rayleigh_um", focus.rayleigh_um));
    k.push_back(MOTRIMS_VEC3("focus", "position_mm", focus.focus_mm));
    k.push_back(MOTRIMS_INT("focus", "order_5s", focus.photon_order_5s, int));
    k.push_back(MOTRIMS_INT("focus", "order_5p", focus.photon_order_5p, int));
    // [spectrometer]
    k.push_back(MOTRIMS_DOUBLE("spectrometer", "field_v_cm", spectrometer.field_v_per_cm));
    k.push_back(MOTRIMS_DOUBLE("spectrometer", "accel_mm", spectrometer.accel_length_mm));
    k.push_back(MOTRIMS_DOUBLE("spectrometer", "drift_mm", spectrometer.drift_length_mm));
    k.push_back(MOTRIMS_DOUBLE("spectrometer", "detector_radius_mm", spectrometer.detector_radius_mm));
    k.push_back(MOTRIMS_INT("spectrometer", "ion_charge", species.charge, int));
    // [detector]
    k.push_back(MOTRIMS_DOUBLE("detector", "position_sigma_mm", detector.position_sigma_mm));
    k.push_back(MOTRIMS_DOUBLE("detector", "time_sigma_ns", detector.time_sigma_ns));
    k.push_back({"detector", "window_us",
                 [](RunConfig& c, std::string_view v) {
                   if (trim(v) == "none") {
                     c.detector.window_us.reset();
                   } else {
                     c.detector.window_us = to_double(v);
                   }
                 },
                 [](const RunConfig& c) { return c.detector.window_us ? fmt(*c.detector.window_us) : "none"; }});
    k.push_back(MOTRIMS_DOUBLE("detector", "efficiency", detector.efficiency));
    k.push_back({"detector", "axis_mm",
                 [](RunConfig& c, std::string_view v) {
                   const auto l = to_list(v);
                   if (l.size() != 2) bad("expected two comma-separated numbers");
                   c.detector.axis_x_mm = l[0];
                   c.detector.axis_y_mm = l[1];
                 },
                 [](const RunConfig& c) { return fmt(c.detector.axis_x_mm) + ", " + fmt(c.detector.axis_y_mm); }});
    k.push_back(MOTRIMS_VEC3("detector", "momentum_blur_au", detector.momentum_blur_au));
    // [analysis]
    k.push_back(MOTRIMS_DOUBLE("analysis", "map_half_range_au", analysis.map_half_range_au));
    k.push_back(MOTRIMS_INT("analysis", "map_nodes", analysis.map_nodes, std::size_t));
    k.push_back(MOTRIMS_DOUBLE("analysis", "slice_rho_au", analysis.slice_rho_au));
    k.push_back(MOTRIMS_DOUBLE("analysis", "sample_half_range_au", analysis.sample_half_range_au));
    k.push_back(MOTRIMS_INT("analysis", "sample_nodes", analysis.sample_nodes, std::size_t));
    k.push_back(MOTRIMS_INT("analysis", "steps_per_cycle", analysis.quadrature.steps_per_cycle, int));
    k.push_back(MOTRIMS_INT("analysis", "max_refinements", analysis.quadrature.max_refinements, int));
    k.push_back(MOTRIMS_DOUBLE("analysis", "quadrature_rtol", analysis.quadrature.rtol));
    k.push_back(MOTRIMS_DOUBLE("analysis", "hist_range_au", analysis.hist_range_au));
    k.push_back(MOTRIMS_INT("analysis", "hist_bins", analysis.hist_bins, std::size_t));
    k.push_back(MOTRIMS_DOUBLE("analysis", "slab_au", analysis.slab_au));
    k.push_back({"analysis", "calibration",
                 [](RunConfig& c, std::string_view v) {
                   v = trim(v);
                   if (v == "truth") {
                     c.analysis.calibration = CalibrationMode::kTruth;
                   } else if (v == "data") {
                     c.analysis.calibration = CalibrationMode::kData;
                   } else {
                     bad("expected truth or data");
                   }
                 },
                 [](const RunConfig& c) {
                   return std::string(c.analysis.calibration == CalibrationMode::kTruth ? "truth" : "data");
                 }});
    k.push_back({"analysis", "t0_estimator",
                 [](RunConfig& c, std::string_view v) {
                   v = trim(v);
                   if (v == "mirror") {
                     c.analysis.t0_estimator = analysis::T0Estimator::kMirrorSymmetry;
                   } else if (v == "mode") {
                     c.analysis.t0_estimator = analysis::T0Estimator::kKdeMode;
                   } else {
                     bad("expected mirror or mode");
                   }
                 },
                 [](const RunConfig& c) {
                   return std::string(c.analysis.t0_estimator == analysis::T0Estimator::kKdeMode ? "mode" : "mirror");
                 }});
    k.push_back({"analysis", "theory", [](RunConfig& c, std::string_view v) { c.analysis.theory = std::string(trim(v)); },
                 [](const RunConfig& c) { return c.analysis.theory; }});
    // [coils]
    k.push_back(MOTRIMS_DOUBLE("coils", "x_mm_per_a", coils.x_mm_per_a));
    k.push_back(MOTRIMS_DOUBLE("coils", "z_mm_per_a", coils.z_mm_per_a));
    // [characterize]
    k.push_back({"characterize", "expansion_times_ms",
                 [](RunConfig& c, std::string_view v) { c.characterize.expansion_times_ms = to_list(v); },
                 [](const RunConfig& c) { return fmt_list(c.characterize.expansion_times_ms); }});
    k.push_back(MOTRIMS_DOUBLE("characterize", "expansion_sigma0_mm", characterize.expansion_sigma0_mm));
    k.push_back(MOTRIMS_DOUBLE("characterize", "expansion_noise", characterize.expansion_noise));
    k.push_back(MOTRIMS_DOUBLE("characterize", "scan_step_mm", characterize.scan_step_mm));
    k.push_back(MOTRIMS_INT("characterize", "scan_points", characterize.scan_points, std::size_t));
    k.push_back(MOTRIMS_DOUBLE("characterize", "scan_counts", characterize.scan_shots_per_point));
    k.push_back(MOTRIMS_DOUBLE("characterize", "pixel_size_um", characterize.pixel_size_um));
    k.push_back(MOTRIMS_INT("characterize", "image_pixels", characterize.image_pixels, std::size_t));
    k.push_back(MOTRIMS_DOUBLE("characterize", "image_intensity", characterize.image_intensity));
    k.push_back(MOTRIMS_DOUBLE("characterize", "image_dark", characterize.image_dark));
    return k;
  }();
  return keys;
}

#undef MOTRIMS_DOUBLE
#undef MOTRIMS_VEC3
#undef MOTRIMS_INT
#undef MOTRIMS_BOOL

const KeyDef* find_key(std::string_view section, std::string_view key) {
  for (const auto& k : registry()) {
    if (k.section == section && k.key == key) return &k;
  }
  return nullptr;
}

bool known_section(std::string_view section) {
  return std::any_of(registry().begin(), registry().end(), [&](const KeyDef& k) { return k.section == section; });
}

struct Assignment {
  const KeyDef* def;
  std::string value;
  std::string where;
};

void apply(RunConfig& c, const Assignment& a) {
  try {
    a.def->set(c, a.value);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(a.where + ": " + a.def->section + "." + a.def->key + ": " + e.what());
  } catch (const std::out_of_range& e) {
    throw ConfigError(a.where + ": " + a.def->section + "." + a.def->key + ": value out of range");
  }
}

}  // namespace

RunConfig parse_config(std::string_view text, const std::string& origin) {
  std::vector<Assignment> assignments;
  std::map<std::string, std::string> seen;  // "section.key" -> where
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::string where = origin + ":" + std::to_string(line_no);

    if (const auto c = line.find_first_of("#;"); c != std::string_view::npos) line = line.substr(0, c);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (!known_section(section)) throw ConfigError(where + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    if (section.empty()) throw ConfigError(where + ": key '" + key + "' outside of any section");
    const KeyDef* def = find_key(section, key);
    if (!def) throw ConfigError(where + ": unknown key '" + key + "' in [" + section + "]");
    const std::string full = section + "." + key;
    if (auto it = seen.find(full); it != seen.end()) {
      throw ConfigError(where + ": duplicate key " + full + " (first set at " + it->second + ")");
    }
    seen[full] = where;
    assignments.push_back({def, std::string(trim(line.substr(eq + 1))), where});
  }

  RunConfig config;
  // target.kind resets the section, so it goes first.
  std::stable_partition(assignments.begin(), assignments.end(),
                        [](const Assignment& a) { return a.def->section == "target" && a.def->key == "kind"; });
  for (const auto& a : assignments) apply(config, a);
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

void apply_override(RunConfig& config, std::string_view assignment) {
  const std::string where = "--set '" + std::string(assignment) + "'";
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError(where + ": expected section.key=value");
  const auto name = trim(assignment.substr(0, eq));
  const auto dot = name.find('.');
  if (dot == std::string_view::npos) throw ConfigError(where + ": expected section.key=value");
  const KeyDef* def = find_key(name.substr(0, dot), name.substr(dot + 1));
  if (!def) throw ConfigError(where + ": unknown key '" + std::string(name) + "'");
  apply(config, {def, std::string(trim(assignment.substr(eq + 1))), where});
}

std::string dump_config(const RunConfig& config) {
  std::string out;
  std::string section;
  for (const auto& k : registry()) {
    if (k.section != section) {
      if (!section.empty()) out += "\n";
      section = k.section;
      out += "[" + section + "]\n";
    }
    out += k.key + " = " + k.get(config) + "\n";
  }
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& k : registry()) out.push_back(k.section + "." + k.key);
  return out;
}

}  // namespace motrims::io
