#pragma once

// Run configuration: one INI-style file drives every command.
//
//   # comment
//   [section]
//   key = value        ; vectors are comma separated
//
// Parsing is strict: unknown sections or keys, duplicates, and malformed values
// are ConfigErrors that carry the file, line and key.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "motrims/analysis.hpp"
#include "motrims/apparatus.hpp"
#include "motrims/ensemble.hpp"
#include "motrims/strongfield.hpp"

namespace motrims::io {

enum class EventFormat { kCsv, kBinary };
std::string_view event_format_label(EventFormat f);
EventFormat parse_event_format(std::string_view text);

enum class CalibrationMode { kTruth, kData };

struct RunSection {
  std::uint64_t seed = 1;
  std::size_t events = 100000;
  unsigned workers = 0;  // 0 = hardware concurrency
  std::string out = "out";
  EventFormat format = EventFormat::kCsv;
  bool svg = false;
};

struct ChannelsSection {
  bool enable_5s = true;
  bool enable_5p = true;
  double f_5p = 0.25;
  int photons_5s = 3;  // photon numbers quoted by `constants`
  int photons_5p = 2;
};

struct AnalysisSection {
  // cmd_spectrum: (p_z, p_x) plane and its cylinder slice
  double map_half_range_au = 0.5;
  std::size_t map_nodes = 101;
  double slice_rho_au = 0.1;
  // cmd_simulate: 3D cube the recoil momenta are drawn from
  double sample_half_range_au = 0.35;
  std::size_t sample_nodes = 51;
  strongfield::QuadratureOptions quadrature;
  // cmd_reconstruct
  double hist_range_au = 0.5;
  std::size_t hist_bins = 50;
  double slab_au = 0.1;  // |p_y| slab for the 2D maps
  CalibrationMode calibration = CalibrationMode::kTruth;
  analysis::T0Estimator t0_estimator = analysis::T0Estimator::kMirrorSymmetry;
  std::string theory;  // SpectrumMap plane file for the resolution fit; empty = none
};

struct CharacterizeSection {
  // synthetic expansion series
  std::vector<double> expansion_times_ms{1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0};
  double expansion_sigma0_mm = 0.3;
  double expansion_noise = 0.005;  // relative width noise per point
  // synthetic ionization-rate scan
  double scan_step_mm = 0.08;
  std::size_t scan_points = 41;
  double scan_shots_per_point = 2.0e4;  // expected counts at the peak
  // synthetic absorption image
  double pixel_size_um = 10.0;
  std::size_t image_pixels = 256;
  double image_intensity = 4000.0;  // reference counts per pixel
  double image_dark = 100.0;
};

struct RunConfig {
  RunSection run;
  strongfield::LaserPulse pulse;
  ChannelsSection channels;
  ensemble::TargetEnsemble target = ensemble::TargetEnsemble::mot3d();
  ensemble::FocusModel focus;
  apparatus::SpectrometerGeometry spectrometer;
  apparatus::IonSpecies species;  // mass follows target.mass_amu
  apparatus::DetectorModel detector;
  AnalysisSection analysis;
  ensemble::CoilCalibration coils;
  CharacterizeSection characterize;

  RunConfig();
  // All module invariants; DomainErrors are rethrown as ConfigError.
  void validate() const;
  ensemble::TargetEnsemble effective_target() const;  // f_5p from [channels]
};

// Text -> config, applied over the defaults. `target.kind` is applied before
// any other key and resets the target section (and channels.f_5p /
// channels.enable_5p) to that kind's defaults. `origin` names the source in
// diagnostics.
RunConfig parse_config(std::string_view text, const std::string& origin = "<config>");
RunConfig load_config(const std::string& path);

// Applies "section.key=value" on top of an existing config.
void apply_override(RunConfig& config, std::string_view assignment);

// Every key with its current value, in canonical order; parse_config of the
// result reproduces the config exactly.
std::string dump_config(const RunConfig& config);

// Flat list of "section.key" names (for help output and tests).
std::vector<std::string> config_keys();

}  // namespace motrims::io
