#include "motrims_cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "motrims/analysis.hpp"
#include "motrims/apparatus.hpp"
#include "motrims/ensemble.hpp"
#include "motrims/error.hpp"
#include "motrims/io/events.hpp"
#include "motrims/io/grid_file.hpp"
#include "motrims/io/manifest.hpp"
#include "motrims/io/svg.hpp"
#include "motrims/strongfield.hpp"
#include "motrims/synthetic.hpp"
#include "motrims/units.hpp"
#include "motrims/version.hpp"

namespace motrims::cli {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;
using strongfield::Channel;

namespace {

std::string out_dir(const Context& ctx) {
  const std::string dir = ctx.config.run.out;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
  return dir;
}

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

// Tracks files for the manifest.
struct Outputs {
  std::string dir;
  std::vector<std::string> paths;

  std::string add(const std::string& name) {
    paths.push_back(join(dir, name));
    return paths.back();
  }
  void text(const std::string& name, const std::string& body) { io::write_text_file(add(name), body); }
  template <typename F>
  void stream(const std::string& name, F&& fill) {
    std::ostringstream ss;
    fill(ss);
    text(name, ss.str());
  }
};

void finish_manifest(const Context& ctx, const std::string& command, const std::string& started,
                     const std::vector<std::string>& inputs, const Outputs& outputs) {
  io::RunManifest m;
  m.command = command;
  m.config_text = io::dump_config(ctx.config);
  m.code_version = std::string(code_version());
  m.started_utc = started;
  m.finished_utc = io::utc_timestamp();
  for (const auto& p : inputs) m.inputs.push_back(io::digest_file(p));
  for (const auto& p : outputs.paths) m.outputs.push_back(io::digest_file(p));
  io::write_manifest(join(outputs.dir, "manifest.json"), m);
}

json fit_json(const analysis::GaussianFit& f) {
  return {{"amplitude", f.params.amplitude}, {"amplitude_err", f.errors.amplitude},
          {"center", f.params.center},       {"center_err", f.errors.center},
          {"sigma", f.params.sigma},         {"sigma_err", f.errors.sigma},
          {"offset", f.params.offset},       {"offset_err", f.errors.offset},
          {"fwhm", f.fwhm()},                {"fwhm_err", f.fwhm_error()},
          {"chi2", f.chi2},                  {"reduced_chi2", f.reduced_chi2}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::vector<Channel> active_channels(const io::RunConfig& c) {
  std::vector<Channel> out;
  if (c.channels.enable_5s) out.push_back(Channel::k5s);
  if (c.channels.enable_5p && c.channels.f_5p > 0.0) out.push_back(Channel::k5p);
  return out;
}

void say(const Context& ctx, const std::string& line) {
  if (ctx.out) *ctx.out << line << '\n';
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Plain numeric CSV: '#' comments and a non-numeric header row are skipped.
std::vector<std::vector<double>> read_table(const std::string& path, std::size_t min_columns) {
  const std::string text = io::read_text_file(path);
  std::istringstream in(text);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  bool first_data = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t", used) != std::string::npos) numeric = false;
      } catch (const std::exception&) {
        numeric = false;
      }
    }
    if (!numeric) {
      if (first_data) {
        first_data = false;
        continue;  // header
      }
      throw DataError(path + ":" + std::to_string(line_no) + ": non-numeric field");
    }
    first_data = false;
    if (row.size() < min_columns) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected at least " + std::to_string(min_columns) +
                      " columns");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(path + ": no data rows");
  return rows;
}

analysis::Image read_image(const std::string& path) {
  const auto rows = read_table(path, 1);
  analysis::Image im{rows.size(), rows.front().size(), {}};
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != im.cols) throw DataError(path + ": ragged image row " + std::to_string(r + 1));
    im.pixels.insert(im.pixels.end(), rows[r].begin(), rows[r].end());
  }
  return im;
}

void write_image(std::ostream& out, const analysis::Image& im) {
  char buf[40];
  for (std::size_t r = 0; r < im.rows; ++r) {
    for (std::size_t c = 0; c < im.cols; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", im.at(r, c));
      out << (c ? "," : "") << buf;
    }
    out << '\n';
  }
}

// Fit curve sampled densely over the data range.
io::SvgSeries fit_series(const analysis::GaussianFit& f, double lo, double hi) {
  io::SvgSeries s{"Gaussian fit", {}, {}, false};
  for (int i = 0; i <= 200; ++i) {
    const double x = lo + (hi - lo) * i / 200.0;
    s.x.push_back(x);
    s.y.push_back(f(x));
  }
  return s;
}

}  // namespace

// --- constants ------------------------------------------------------------------

void cmd_constants(const Context& ctx) {
  const auto& c = ctx.config;
  const std::string started = io::utc_timestamp();
  const auto& pulse = c.pulse;
  const auto up = strongfield::ponderomotive_energy(pulse);
  json j;
  j["pulse"] = {{"wavelength_nm", pulse.wavelength_nm},
                {"intensity_w_cm2", pulse.intensity_w_per_cm2},
                {"photon_energy_ev", units::photon_energy_ev(pulse.wavelength_nm)},
                {"omega_au", pulse.omega_au()},
                {"field_amplitude_au", pulse.field_amplitude_au()},
                {"vector_potential_amplitude_au", pulse.vector_potential_amplitude_au()},
                {"ponderomotive_ev", up.ev},
                {"duration_fs", units::au_to_fs(pulse.duration_au())}};
  say(ctx, "photon energy      " + fmt("%.4f eV", units::photon_energy_ev(pulse.wavelength_nm)));
  say(ctx, "U_p                " + fmt("%.4g eV", up.ev));

  json channels = json::array();
  for (Channel ch : {Channel::k5s, Channel::k5p}) {
    const auto state = strongfield::InitialState::for_channel(ch);
    const int photons = ch == Channel::k5s ? c.channels.photons_5s : c.channels.photons_5p;
    const auto k = strongfield::keldysh(state, pulse);
    json e{{"channel", std::string(strongfield::channel_label(ch))}, {"ip_ev", state.ip_ev}};
    std::string gamma_text;
    if (k.infinite) {
      e["keldysh_gamma"] = "infinite";
      gamma_text = "infinite (zero intensity)";
    } else {
      e["keldysh_gamma"] = k.gamma;
      gamma_text = fmt("%.2f", k.gamma);
    }
    e["regime"] = std::string(strongfield::regime_label(k.regime));
    e["photons"] = photons;
    const auto ex = strongfield::excess_energy(state, photons, pulse);
    std::string ex_text;
    if (const auto* ok = std::get_if<strongfield::ExcessEnergy>(&ex)) {
      e["excess_energy_ev"] = ok->energy.ev;
      e["momentum_au"] = ok->momentum_au;
      ex_text = fmt("E_e = %.4f eV", ok->energy.ev) + fmt(", |p| = %.4f a.u.", ok->momentum_au);
      const auto shifted = strongfield::excess_energy(state, photons, pulse, true);
      if (const auto* s = std::get_if<strongfield::ExcessEnergy>(&shifted)) {
        e["excess_energy_shifted_ev"] = s->energy.ev;
        e["momentum_shifted_au"] = s->momentum_au;
      }
    } else {
      const auto& below = std::get<strongfield::BelowThreshold>(ex);
      e["below_threshold"] = true;
      e["minimum_photons"] = below.minimum_photons;
      ex_text = "below threshold (needs " + std::to_string(below.minimum_photons) + " photons)";
    }
    say(ctx, std::string(strongfield::channel_label(ch)) + ": gamma = " + gamma_text + ", " +
                 std::to_string(photons) + " photons: " + ex_text);
    channels.push_back(e);
  }
  j["channels"] = channels;

  const double mass = c.species.mass_au();
  const auto target = c.effective_target();
  j["target"] = {{"kind", std::string(ensemble::target_kind_label(target.kind))},
                 {"thermal_sigma_p_au",
                  {units::thermal_momentum_sigma_au(target.temperature_uk.x, mass),
                   units::thermal_momentum_sigma_au(target.temperature_uk.y, mass),
                   units::thermal_momentum_sigma_au(target.temperature_uk.z, mass)}}};
  const double per_ns = apparatus::timing_momentum_sensitivity_au(c.spectrometer, c.species, 1.0);
  const double tof0 = apparatus::time_of_flight_us(c.spectrometer, c.species, 0.0, 0.0);
  j["spectrometer"] = {
      {"extraction_force_au", apparatus::extraction_force_au(c.spectrometer, c.species)},
      {"dpz_per_ns_au", per_ns},
      {"dpz_timing_au", apparatus::timing_momentum_sensitivity_au(c.spectrometer, c.species, c.detector.time_sigma_ns)},
      {"tof_zero_momentum_us", tof0}};
  say(ctx, "thermal sigma_p    " + fmt("%.3e a.u. (y axis)", units::thermal_momentum_sigma_au(target.temperature_uk.y, mass)));
  say(ctx, "qE * 1 ns          " + fmt("%.3e a.u.", per_ns));
  say(ctx, "TOF(p = 0)         " + fmt("%.2f us", tof0));

  Outputs outs{out_dir(ctx), {}};
  outs.text("constants.json", dump(j));
  finish_manifest(ctx, "constants", started, {}, outs);
}

// --- spectrum -------------------------------------------------------------------

void cmd_spectrum(const Context& ctx) {
  const auto& c = ctx.config;
  const std::string started = io::utc_timestamp();
  Outputs outs{out_dir(ctx), {}};
  const auto grid = strongfield::MomentumGrid::plane_zx(c.analysis.map_half_range_au, c.analysis.map_nodes);
  json report;
  report["grid"] = {{"half_range_au", c.analysis.map_half_range_au}, {"nodes", c.analysis.map_nodes}};
  report["slice_rho_au"] = c.analysis.slice_rho_au;
  json chans = json::array();
  for (Channel ch : active_channels(c)) {
    const std::string tag = std::string(strongfield::channel_label(ch));
    say(ctx, "computing " + tag + " (p_z, p_x) map, " + std::to_string(grid.size()) + " nodes");
    const auto map = strongfield::spectrum(c.pulse, strongfield::InitialState::for_channel(ch), grid,
                                           c.analysis.quadrature, c.run.workers);
    const auto slice = strongfield::cylinder_slice(map, c.analysis.slice_rho_au);
    const auto peaks = analysis::find_maxima(slice, 0.01);

    outs.stream("spectrum_" + tag + ".grid", [&](std::ostream& o) { io::write_grid(o, io::to_grid_file(map)); });
    // (p_z, p_x) long table, p_z rows
    const auto& ax = grid.axes[0];
    const auto& az = grid.axes[2];
    std::vector<double> pz(az.count), px(ax.count), zx(az.count * ax.count);
    for (std::size_t i = 0; i < az.count; ++i) pz[i] = az.value(i);
    for (std::size_t i = 0; i < ax.count; ++i) px[i] = ax.value(i);
    for (std::size_t iz = 0; iz < az.count; ++iz) {
      for (std::size_t ix = 0; ix < ax.count; ++ix) zx[iz * ax.count + ix] = map.at(ix, 0, iz);
    }
    outs.stream("spectrum_" + tag + "_pzpx.csv", [&](std::ostream& o) { io::write_map_csv(o, "pz_au", pz, "px_au", px, zx); });
    outs.stream("spectrum_" + tag + "_slice.csv", [&](std::ostream& o) { io::write_profile_csv(o, slice, "pz_au", "yield"); });
    if (c.run.svg) {
      outs.text("spectrum_" + tag + "_pzpx.svg",
                io::svg_map(pz, px, zx, "SFA recoil map " + tag, "p_z (a.u.)", "p_x (a.u.)"));
      outs.text("spectrum_" + tag + "_slice.svg",
                io::svg_curves({{tag + " rho < " + fmt("%g", c.analysis.slice_rho_au), slice.x, slice.y, false}},
                               "SFA p_z slice " + tag, "p_z (a.u.)", "yield (arb.)"));
    }
    std::string peak_text;
    for (double p : peaks) peak_text += fmt(" %+.4f", p);
    say(ctx, tag + " slice maxima (a.u.):" + peak_text);
    chans.push_back({{"channel", tag}, {"maxima_au", peaks}, {"max_value", map.max_value()}});
  }
  report["channels"] = chans;
  outs.text("spectrum.json", dump(report));
  finish_manifest(ctx, "spectrum", started, {}, outs);
}

// --- simulate -------------------------------------------------------------------

void cmd_simulate(const Context& ctx, const SimulateInputs& in) {
  const auto& c = ctx.config;
  const std::string started = io::utc_timestamp();
  Outputs outs{out_dir(ctx), {}};
  std::vector<std::string> inputs;
  const auto target = c.effective_target();
  const auto grid = strongfield::MomentumGrid::cube(c.analysis.sample_half_range_au, c.analysis.sample_nodes);

  std::optional<strongfield::SpectrumMap> s5, p5;
  auto obtain = [&](Channel ch, const std::string& path) {
    if (!path.empty()) {
      inputs.push_back(path);
      return io::read_spectrum(path);
    }
    say(ctx, "computing " + std::string(strongfield::channel_label(ch)) + " recoil cube, " +
                 std::to_string(grid.size()) + " nodes");
    return strongfield::spectrum(c.pulse, strongfield::InitialState::for_channel(ch), grid, c.analysis.quadrature,
                                 c.run.workers);
  };
  for (Channel ch : active_channels(c)) {
    if (ch == Channel::k5s) s5 = obtain(ch, in.spectrum_5s);
    if (ch == Channel::k5p) p5 = obtain(ch, in.spectrum_5p);
  }
  const ensemble::ChannelSpectra spectra{s5 ? &*s5 : nullptr, p5 ? &*p5 : nullptr};
  const auto ions = ensemble::generate_ionization_events(target, c.focus, spectra, c.run.events, c.run.seed,
                                                         c.run.workers);
  const auto sim = apparatus::simulate_events(c.spectrometer, c.detector, c.species, ions, c.run.seed, c.run.workers);

  const bool binary = c.run.format == io::EventFormat::kBinary;
  const std::string name = binary ? "events.bin" : "events.csv";
  io::write_events(outs.add(name), sim.events, binary);

  const double acc = sim.generated ? static_cast<double>(sim.events.size()) / static_cast<double>(sim.generated) : 0.0;
  json j{{"generated", sim.generated},
         {"accepted", sim.events.size()},
         {"acceptance", acc},
         {"rejected",
          {{std::string(apparatus::rejection_label(apparatus::Rejection::kOutsideRadius)), sim.rejected[0]},
           {std::string(apparatus::rejection_label(apparatus::Rejection::kOutsideWindow)), sim.rejected[1]},
           {std::string(apparatus::rejection_label(apparatus::Rejection::kEfficiencyLoss)), sim.rejected[2]}}},
         {"events_file", name}};
  outs.text("simulate.json", dump(j));
  say(ctx, "accepted " + std::to_string(sim.events.size()) + " of " + std::to_string(sim.generated) +
               fmt(" (%.4f)", acc) + " -> " + join(outs.dir, name));
  finish_manifest(ctx, "simulate", started, inputs, outs);
}

// --- reconstruct ----------------------------------------------------------------

void cmd_reconstruct(const Context& ctx, const ReconstructInputs& in) {
  const auto& c = ctx.config;
  const std::string started = io::utc_timestamp();
  if (in.events.empty()) throw ConfigError("reconstruct: no event file given (--events PATH)");
  const auto file = io::read_events(in.events);
  Outputs outs{out_dir(ctx), {}};
  std::vector<std::string> inputs{in.events};

  analysis::Calibration cal;
  std::string cal_mode;
  if (c.analysis.calibration == io::CalibrationMode::kTruth) {
    if (!file.has_truth) {
      throw DataError("reconstruct: " + in.events +
                      " carries no truth columns, so truth-assisted calibration is impossible; "
                      "run the data-driven calibration with --set analysis.calibration=data");
    }
    cal = analysis::calibration_from_geometry(c.spectrometer, c.species, c.detector);
    cal_mode = "truth";
  } else {
    cal = analysis::calibrate(file.events, {c.analysis.t0_estimator, std::nullopt});
    cal_mode = "data";
  }
  const analysis::Reconstructor rec(c.spectrometer, c.species, cal);
  const auto records = analysis::reconstruct_all(file.events, rec, c.run.workers);

  outs.stream("momenta.csv", [&](std::ostream& o) {
    o << "event_id,px_au,py_au,pz_au\n";
    char buf[96];
    for (const auto& r : records) {
      std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%.17g\n", r.p_au.x, r.p_au.y, r.p_au.z);
      o << r.event_id << buf;
    }
  });

  const double range = c.analysis.hist_range_au;
  const std::size_t bins = c.analysis.hist_bins;
  using analysis::Component;
  auto axis = [&](Component q) { return analysis::HistAxis{q, -range, range, bins}; };
  json fits;
  for (Component q : {Component::kPx, Component::kPy, Component::kPz}) {
    const auto h = analysis::histogram(records, axis(q));
    const std::string label = analysis::component_label(q);
    outs.stream("hist_" + label + ".csv", [&](std::ostream& o) { io::write_histogram_csv(o, h); });
    const auto prof = h.as_profile();
    const auto err = h.poisson_sigma();
    try {
      const auto f = analysis::fit_gaussian_1d(prof.x, prof.y, err);
      fits[label] = fit_json(f);
      say(ctx, label + fmt(" FWHM = %.4f", f.fwhm()) + fmt(" +- %.4f a.u.", f.fwhm_error()));
      if (c.run.svg) {
        outs.text("hist_" + label + ".svg",
                  io::svg_curves({{"events", prof.x, prof.y, true}, fit_series(f, -range, range)},
                                 label + " distribution", label + " (a.u.)", "counts"));
      }
    } catch (const Error& e) {
      fits[label] = {{"error", e.what()}};
    }
  }
  const auto cyl = analysis::Slice::cylinder(c.analysis.slice_rho_au);
  const auto h_cyl = analysis::histogram(records, axis(Component::kPz), cyl);
  outs.stream("hist_pz_cylinder.csv", [&](std::ostream& o) { io::write_histogram_csv(o, h_cyl); });

  const auto h_xy = analysis::histogram2d(records, axis(Component::kPx), axis(Component::kPy));
  const auto h_zx = analysis::histogram2d(records, axis(Component::kPz), axis(Component::kPx),
                                          analysis::Slice::slab(c.analysis.slab_au));
  outs.stream("map_pxpy.grid", [&](std::ostream& o) { io::write_grid(o, io::to_grid_file(h_xy)); });
  outs.stream("map_pzpx.grid", [&](std::ostream& o) { io::write_grid(o, io::to_grid_file(h_zx)); });
  if (c.run.svg) {
    std::vector<double> centers(bins);
    for (std::size_t i = 0; i < bins; ++i) centers[i] = axis(Component::kPx).center(i);
    auto as_double = [](const std::vector<std::uint64_t>& v) { return std::vector<double>(v.begin(), v.end()); };
    outs.text("map_pxpy.svg", io::svg_map(centers, centers, as_double(h_xy.counts), "(p_x, p_y)", "p_x (a.u.)", "p_y (a.u.)"));
    outs.text("map_pzpx.svg", io::svg_map(centers, centers, as_double(h_zx.counts), "(p_z, p_x), " + h_zx.slice,
                                          "p_z (a.u.)", "p_x (a.u.)"));
  }

  json report;
  report["events"] = records.size();
  report["calibration"] = {{"mode", cal_mode},
                           {"t0_us", cal.t0_us},
                           {"t0_err_us", cal.t0_err_us},
                           {"center_x_mm", cal.center_x_mm},
                           {"center_y_mm", cal.center_y_mm},
                           {"birth_offset_mm", rec.birth_offset_mm()}};
  report["fits"] = fits;

  if (file.has_truth) {
    double worst = 0.0;
    std::array<double, 3> rms{};
    for (std::size_t i = 0; i < records.size(); ++i) {
      const Vec3 d = records[i].p_au - file.events[i].truth->momentum_au;
      for (int a = 0; a < 3; ++a) {
        rms[static_cast<std::size_t>(a)] += d[a] * d[a];
        worst = std::max(worst, std::abs(d[a]));
      }
    }
    for (auto& r : rms) r = records.empty() ? 0.0 : std::sqrt(r / static_cast<double>(records.size()));
    report["truth_residuals"] = {{"rms_px_au", rms[0]}, {"rms_py_au", rms[1]}, {"rms_pz_au", rms[2]}, {"max_abs_au", worst}};
  }

  if (!c.analysis.theory.empty()) {
    inputs.push_back(c.analysis.theory);
    const auto theory_map = io::read_spectrum(c.analysis.theory);
    const auto theory = strongfield::cylinder_slice(theory_map, c.analysis.slice_rho_au);
    const auto measured = h_cyl.as_profile();
    const auto sigma = h_cyl.poisson_sigma();
    const auto rf = analysis::fit_resolution(theory, measured, sigma);
    report["resolution"] = {{"sigma_au", rf.sigma},   {"sigma_err_au", rf.sigma_error}, {"fwhm_au", rf.fwhm()},
                            {"fwhm_err_au", rf.fwhm_error()}, {"scale", rf.scale}, {"chi2", rf.chi2}, {"dof", rf.dof}};
    say(ctx, "resolution FWHM = " + fmt("%.4f", rf.fwhm()) + fmt(" +- %.4f a.u.", rf.fwhm_error()));
    const auto blurred = analysis::convolve_gaussian(theory, rf.sigma);
    Profile model{measured.x, {}};
    for (double x : measured.x) model.y.push_back(rf.scale * interpolate(blurred, x));
    outs.stream("resolution_fit.csv", [&](std::ostream& o) {
      o << "pz_au,counts,model\n";
      char buf[96];
      for (std::size_t i = 0; i < measured.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", measured.x[i], measured.y[i], model.y[i]);
        o << buf;
      }
    });
    if (c.run.svg) {
      outs.text("resolution_fit.svg", io::svg_curves({{"events", measured.x, measured.y, true},
                                                      {"theory (x) Gaussian", model.x, model.y, false}},
                                                     "p_z, rho < " + fmt("%g", c.analysis.slice_rho_au), "p_z (a.u.)",
                                                     "counts"));
    }
  }
  outs.text("reconstruct.json", dump(report));
  finish_manifest(ctx, "reconstruct", started, inputs, outs);
}

// --- characterize ---------------------------------------------------------------

void cmd_characterize(const Context& ctx, const CharacterizeInputs& in) {
  const auto& c = ctx.config;
  const auto& ch = c.characterize;
  const std::string started = io::utc_timestamp();
  Outputs outs{out_dir(ctx), {}};
  std::vector<std::string> inputs;
  const auto target = c.effective_target();
  json report;
  report["synthetic"] = in.input.empty();

  if (in.what == "expansion") {
    std::vector<analysis::ExpansionPoint> series;
    if (in.input.empty()) {
      series = synthetic::expansion_series(target.temperature_uk.y, target.mass_amu, ch.expansion_sigma0_mm,
                                           ch.expansion_times_ms, ch.expansion_noise, c.run.seed);
      report["true_temperature_uk"] = target.temperature_uk.y;
    } else {
      inputs.push_back(in.input);
      for (const auto& row : read_table(in.input, 2)) series.push_back({row[0], row[1], row.size() > 2 ? row[2] : 0.0});
    }
    const auto fit = analysis::temperature_from_expansion(series, target.mass_amu);
    report["temperature_uk"] = fit.temperature_uk;
    report["temperature_err_uk"] = fit.temperature_err_uk;
    report["speed_m_s"] = fit.speed_m_s;
    report["speed_err_m_s"] = fit.speed_err_m_s;
    report["sigma0_mm"] = fit.sigma0_mm;
    say(ctx, "T = " + fmt("%.1f", fit.temperature_uk) + fmt(" +- %.1f uK", fit.temperature_err_uk) +
                 fmt(", v = %.4f m/s", fit.speed_m_s));
    const double v2 = fit.speed_m_s * fit.speed_m_s;
    outs.stream("expansion.csv", [&](std::ostream& o) {
      o << "t_ms,sigma_mm,sigma_err_mm,fit_sigma_mm\n";
      char buf[128];
      for (const auto& p : series) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", p.t_ms, p.sigma_mm, p.sigma_err_mm,
                      std::sqrt(fit.sigma0_mm * fit.sigma0_mm + v2 * p.t_ms * p.t_ms));
        o << buf;
      }
    });
    if (c.run.svg) {
      io::SvgSeries pts{"data", {}, {}, true}, curve{"fit", {}, {}, false};
      double tmax = 0.0;
      for (const auto& p : series) {
        pts.x.push_back(p.t_ms);
        pts.y.push_back(p.sigma_mm);
        tmax = std::max(tmax, p.t_ms);
      }
      for (int i = 0; i <= 100; ++i) {
        const double t = tmax * i / 100.0;
        curve.x.push_back(t);
        curve.y.push_back(std::sqrt(fit.sigma0_mm * fit.sigma0_mm + v2 * t * t));
      }
      outs.text("expansion.svg", io::svg_curves({pts, curve}, "ballistic expansion", "t (ms)", "sigma (mm)"));
    }
  } else if (in.what == "scan") {
    std::vector<double> pos, counts;
    if (in.input.empty()) {
      if (in.axis != "x" && in.axis != "z") throw ConfigError("characterize scan: --axis must be x or z");
      const auto d = synthetic::ionization_scan(target, c.focus, c.coils,
                                                in.axis == "x" ? synthetic::ScanAxis::kX : synthetic::ScanAxis::kZ,
                                                ch.scan_step_mm, ch.scan_points, ch.scan_shots_per_point, c.run.seed);
      pos = d.offsets_mm;
      counts = d.counts;
      report["axis"] = in.axis;
      report["true_fwhm_mm"] = in.axis == "x" ? target.fwhm_mm.x : target.fwhm_mm.z;
      report["coil_currents_a"] = d.currents_a;
    } else {
      inputs.push_back(in.input);
      for (const auto& row : read_table(in.input, 2)) {
        pos.push_back(row[0]);
        counts.push_back(row[1]);
      }
    }
    const auto fit = analysis::scan_profile(pos, counts);
    report["fwhm_mm"] = fit.fwhm_mm;
    report["fwhm_err_mm"] = fit.fwhm_err_mm;
    report["fit"] = fit_json(fit.fit);
    say(ctx, "scan FWHM = " + fmt("%.4f", fit.fwhm_mm) + fmt(" +- %.4f mm", fit.fwhm_err_mm));
    outs.stream("scan.csv", [&](std::ostream& o) {
      o << "position_mm,counts,fit\n";
      char buf[96];
      for (std::size_t i = 0; i < pos.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", pos[i], counts[i], fit.fit(pos[i]));
        o << buf;
      }
    });
    if (c.run.svg) {
      const auto [lo, hi] = std::minmax_element(pos.begin(), pos.end());
      outs.text("scan.svg", io::svg_curves({{"counts", pos, counts, true}, fit_series(fit.fit, *lo, *hi)},
                                           "ionization-rate scan", "position (mm)", "counts"));
    }
  } else if (in.what == "absorption") {
    analysis::Image atoms, ref, dark;
    if (in.input.empty()) {
      auto imgs = synthetic::absorption_images(target, ch.pixel_size_um, ch.image_pixels, ch.image_intensity,
                                               ch.image_dark, 780.0, c.run.seed);
      report["true_atom_number"] = imgs.true_atom_number;
      atoms = std::move(imgs.with_atoms);
      ref = std::move(imgs.without_atoms);
      dark = std::move(imgs.dark);
    } else {
      if (in.reference.empty() || in.dark.empty()) {
        throw ConfigError("characterize absorption: --input needs --reference and --dark images as well");
      }
      inputs = {in.input, in.reference, in.dark};
      atoms = read_image(in.input);
      ref = read_image(in.reference);
      dark = read_image(in.dark);
    }
    analysis::AbsorptionOptions opt;
    opt.pixel_size_um = ch.pixel_size_um;
    const auto r = analysis::absorption_analysis(atoms, ref, dark, opt);
    report["atom_number"] = r.atom_number;
    report["masked_pixels"] = r.masked_count;
    if (r.fit_columns) report["fit_y"] = fit_json(*r.fit_columns);
    if (r.fit_rows) report["fit_z"] = fit_json(*r.fit_rows);
    say(ctx, "N = " + fmt("%.4g atoms", r.atom_number) +
                 (r.fit_columns ? fmt(", FWHM y = %.3f mm", r.fit_columns->fwhm()) : std::string()) +
                 (r.fit_rows ? fmt(", FWHM z = %.3f mm", r.fit_rows->fwhm()) : std::string()));
    outs.stream("optical_density.csv", [&](std::ostream& o) { write_image(o, r.optical_density); });
    if (c.run.svg) {
      std::vector<double> u(r.optical_density.cols), v(r.optical_density.rows), vals;
      for (std::size_t i = 0; i < u.size(); ++i) u[i] = static_cast<double>(i) * ch.pixel_size_um * 1e-3;
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i) * ch.pixel_size_um * 1e-3;
      for (std::size_t col = 0; col < u.size(); ++col) {
        for (std::size_t row = 0; row < v.size(); ++row) vals.push_back(r.optical_density.at(row, col));
      }
      outs.text("optical_density.svg", io::svg_map(u, v, vals, "optical density", "y (mm)", "z (mm)"));
    }
  } else {
    throw ConfigError("characterize: unknown analysis '" + in.what + "' (expected expansion, scan or absorption)");
  }
  outs.text("characterize_" + in.what + ".json", dump(report));
  finish_manifest(ctx, "characterize " + in.what, started, inputs, outs);
}

}  // namespace motrims::cli
