#include "motrims/ensemble.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>

#include "motrims/error.hpp"
#include "motrims/parallel.hpp"
#include "motrims/rng.hpp"

namespace motrims::ensemble {

using strongfield::Channel;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kFwhm = units::kGaussianFwhmPerSigma;
// Bounding half-widths, in FWHM (target) and Rayleigh lengths (focus).
constexpr double kBoxFwhm = 4.0;
constexpr double kBoxRayleigh = 4.0;

double gaussian_factor(double d, double fwhm) {
  const double s = fwhm / kFwhm;
  return std::exp(-0.5 * d * d / (s * s));
}

double beam_radius_mm(const FocusModel& focus, double dy_mm) {
  const double w0 = focus.waist_um * 1e-3;
  const double zr = focus.rayleigh_um * 1e-3;
  return w0 * std::sqrt(1.0 + (dy_mm / zr) * (dy_mm / zr));
}

struct AxisRange {
  double lo;
  double hi;
};

AxisRange beam_axis_range(const TargetEnsemble& target, const FocusModel& focus) {
  const double zr = focus.rayleigh_um * 1e-3;
  AxisRange r{focus.focus_mm.y - kBoxRayleigh * zr, focus.focus_mm.y + kBoxRayleigh * zr};
  r.lo = std::max(r.lo, target.center_mm.y - kBoxFwhm * target.fwhm_mm.y);
  r.hi = std::min(r.hi, target.center_mm.y + kBoxFwhm * target.fwhm_mm.y);
  return r;
}

}  // namespace

std::string_view target_kind_label(TargetKind kind) {
  switch (kind) {
    case TargetKind::kMot3D:
      return "mot3d";
    case TargetKind::kMolasses2D:
      return "molasses2d";
    case TargetKind::kBeam2D:
      return "beam2d";
  }
  return "unknown";
}

TargetKind parse_target_kind(std::string_view text) {
  std::string s;
  for (char c : text) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (s == "mot3d") return TargetKind::kMot3D;
  if (s == "molasses2d") return TargetKind::kMolasses2D;
  if (s == "beam2d") return TargetKind::kBeam2D;
  throw DomainError("unknown target kind '" + std::string(text) + "' (expected mot3d, molasses2d or beam2d)");
}

void TargetEnsemble::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (kind == TargetKind::kBeam2D && a == 0) continue;
    if (!(fwhm_mm[a] > 0.0)) throw DomainError("target: density widths must be positive");
  }
  for (int a = 0; a < 3; ++a) {
    if (!(temperature_uk[a] >= 0.0)) throw DomainError("target: temperatures must be non-negative");
  }
  if (!(peak_density_cm3 >= 0.0)) throw DomainError("target: peak density must be non-negative");
  if (!(excited_fraction >= 0.0 && excited_fraction <= 1.0)) {
    throw DomainError("target: excited-state fraction must be in [0, 1]");
  }
  if (kind == TargetKind::kBeam2D && excited_fraction != 0.0) {
    throw DomainError("target: the 2D MOT beam is a pure ground-state target (excited fraction must be 0)");
  }
  if (!(mass_amu > 0.0)) throw DomainError("target: atomic mass must be positive");
  if (!std::isfinite(beam_velocity_m_s)) throw DomainError("target: beam velocity must be finite");
}

double TargetEnsemble::state_fraction(Channel channel) const {
  return channel == Channel::k5s ? 1.0 - excited_fraction : excited_fraction;
}

TargetEnsemble TargetEnsemble::mot3d() { return {}; }

TargetEnsemble TargetEnsemble::molasses2d() {
  TargetEnsemble t;
  t.kind = TargetKind::kMolasses2D;
  t.fwhm_mm = {2.0, 2.0, 2.0};
  // x is the atomic-beam axis; the velocity spread inherited from the beam
  // stays hotter than the transverse directions.
  t.temperature_uk = {2000.0, 1000.0, 1000.0};
  t.peak_density_cm3 = 1.0e8;
  return t;
}

TargetEnsemble TargetEnsemble::beam2d() {
  TargetEnsemble t;
  t.kind = TargetKind::kBeam2D;
  t.fwhm_mm = {0.0, 1.0, 1.0};
  t.temperature_uk = {6000.0, 1000.0, 1000.0};  // longitudinal spread of the pushed beam
  t.peak_density_cm3 = 1.0e7;
  t.excited_fraction = 0.0;
  return t;
}

void FocusModel::validate() const {
  if (!(waist_um > 0.0)) throw DomainError("focus: waist must be positive");
  if (!(rayleigh_um > 0.0)) throw DomainError("focus: Rayleigh length must be positive");
  if (photon_order_5s < 1 || photon_order_5p < 1) throw DomainError("focus: photon orders must be >= 1");
}

int FocusModel::photon_order(Channel channel) const {
  return channel == Channel::k5s ? photon_order_5s : photon_order_5p;
}

void CoilCalibration::validate() const {
  if (!(x_mm_per_a > 0.0 && z_mm_per_a > 0.0)) throw DomainError("coil calibration: coefficients must be positive");
}

double density_at(const TargetEnsemble& target, const Vec3& r_mm) {
  const Vec3 d = r_mm - target.center_mm;
  double f = target.peak_density_cm3;
  if (target.kind != TargetKind::kBeam2D) f *= gaussian_factor(d.x, target.fwhm_mm.x);
  f *= gaussian_factor(d.y, target.fwhm_mm.y);
  f *= gaussian_factor(d.z, target.fwhm_mm.z);
  return f;
}

double relative_intensity(const FocusModel& focus, const Vec3& r_mm) {
  const Vec3 d = r_mm - focus.focus_mm;
  const double w0 = focus.waist_um * 1e-3;
  const double w = beam_radius_mm(focus, d.y);
  const double rho2 = d.x * d.x + d.z * d.z;
  return (w0 / w) * (w0 / w) * std::exp(-2.0 * rho2 / (w * w));
}

double ionization_weight(const TargetEnsemble& target, const FocusModel& focus, const Vec3& r_mm,
                         Channel channel) {
  const double frac = target.state_fraction(channel);
  if (frac == 0.0) return 0.0;
  return density_at(target, r_mm) * frac * std::pow(relative_intensity(focus, r_mm), focus.photon_order(channel));
}

double integrated_yield(const TargetEnsemble& target, const FocusModel& focus, Channel channel) {
  target.validate();
  focus.validate();
  if (target.state_fraction(channel) == 0.0) return 0.0;
  const int n = focus.photon_order(channel);
  const AxisRange yr = beam_axis_range(target, focus);
  if (!(yr.hi > yr.lo)) return 0.0;

  constexpr int kBeamIntervals = 400;
  constexpr int kTransverseIntervals = 24;
  auto simpson_weight = [](int k, int intervals) { return (k == 0 || k == intervals) ? 1.0 : (k % 2 ? 4.0 : 2.0); };

  const double hy = (yr.hi - yr.lo) / kBeamIntervals;
  double total = 0.0;
  for (int iy = 0; iy <= kBeamIntervals; ++iy) {
    const double y = yr.lo + hy * iy;
    const double sigma_t = beam_radius_mm(focus, y - focus.focus_mm.y) / (2.0 * std::sqrt(static_cast<double>(n)));
    const double half = 6.0 * sigma_t;
    const double ht = 2.0 * half / kTransverseIntervals;
    double plane = 0.0;
    for (int ix = 0; ix <= kTransverseIntervals; ++ix) {
      const double x = focus.focus_mm.x - half + ht * ix;
      double row = 0.0;
      for (int iz = 0; iz <= kTransverseIntervals; ++iz) {
        const double z = focus.focus_mm.z - half + ht * iz;
        row += simpson_weight(iz, kTransverseIntervals) * ionization_weight(target, focus, {x, y, z}, channel);
      }
      plane += simpson_weight(ix, kTransverseIntervals) * row;
    }
    total += simpson_weight(iy, kBeamIntervals) * plane * (ht / 3.0) * (ht / 3.0);
  }
  return total * hy / 3.0;
}

Displacement coil_displacement(const CoilCalibration& cal, double delta_current_x_a, double delta_current_z_a) {
  cal.validate();
  return {cal.x_mm_per_a * delta_current_x_a, cal.z_mm_per_a * delta_current_z_a};
}

namespace {

// Exact rejection sampler for density x (I/I0)^n: y uniform on the beam-axis
// range, (x, z) from the Gaussian (I/I0)^n profile, accepted with probability
// density/peak x (w0/w(y))^(2n-2).
Vec3 sample_birth(const TargetEnsemble& target, const FocusModel& focus, int n, const AxisRange& yr,
                  std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double w0 = focus.waist_um * 1e-3;
  constexpr long kMaxAttempts = 10'000'000;
  for (long attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const double y = yr.lo + (yr.hi - yr.lo) * uni(rng);
    const double w = beam_radius_mm(focus, y - focus.focus_mm.y);
    const double sigma_t = w / (2.0 * std::sqrt(static_cast<double>(n)));
    const Vec3 r{focus.focus_mm.x + sigma_t * gauss(rng), y, focus.focus_mm.z + sigma_t * gauss(rng)};
    const double accept = density_at(target, r) / target.peak_density_cm3 * std::pow(w0 / w, 2 * n - 2);
    if (uni(rng) < accept) return r;
  }
  throw DomainError("generate_ionization_events: rejection sampler found no overlap between target and focus");
}

}  // namespace

std::vector<apparatus::BornIon> generate_ionization_events(const TargetEnsemble& target, const FocusModel& focus,
                                                           const ChannelSpectra& spectra, std::size_t n,
                                                           std::uint64_t seed, unsigned workers) {
  target.validate();
  focus.validate();
  const double y5s = spectra.s5 ? integrated_yield(target, focus, Channel::k5s) : 0.0;
  const double y5p = spectra.p5 ? integrated_yield(target, focus, Channel::k5p) : 0.0;
  const double total = y5s + y5p;
  if (!(total > 0.0) || !(target.peak_density_cm3 > 0.0)) {
    throw DomainError(
        "generate_ionization_events: zero total ionization weight (target and focus do not overlap, "
        "or no channel with a spectrum has population)");
  }
  if (n == 0) return {};

  std::unique_ptr<strongfield::RecoilSampler> sampler_5s, sampler_5p;
  if (y5s > 0.0) sampler_5s = std::make_unique<strongfield::RecoilSampler>(*spectra.s5);
  if (y5p > 0.0) sampler_5p = std::make_unique<strongfield::RecoilSampler>(*spectra.p5);

  const AxisRange yr = beam_axis_range(target, focus);
  const double mass = units::amu_to_au(target.mass_amu);
  Vec3 sigma_thermal;
  for (int a = 0; a < 3; ++a) sigma_thermal[a] = units::thermal_momentum_sigma_au(target.temperature_uk[a], mass);
  Vec3 drift{};
  if (target.kind == TargetKind::kBeam2D) drift.x = mass * units::m_per_s_to_au(target.beam_velocity_m_s);
  const double p_5s = y5s / total;

  std::vector<apparatus::BornIon> out(n);
  parallel_for(n, workers, [&](std::size_t i) {
    auto rng = substream(seed, streams::kIonization, i);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const Channel ch = (uni(rng) < p_5s) ? Channel::k5s : Channel::k5p;
    apparatus::BornIon ion;
    ion.channel = ch;
    ion.position_mm = sample_birth(target, focus, focus.photon_order(ch), yr, rng);
    const auto& sampler = (ch == Channel::k5s) ? *sampler_5s : *sampler_5p;
    Vec3 p = sampler.sample(rng);
    for (int a = 0; a < 3; ++a) p[a] += sigma_thermal[a] * gauss(rng);
    ion.momentum_au = p + drift;
    out[i] = ion;
  });
  return out;
}

}  // namespace motrims::ensemble
