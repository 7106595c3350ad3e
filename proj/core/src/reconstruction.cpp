#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "motrims/analysis.hpp"
#include "motrims/parallel.hpp"
#include "motrims/units.hpp"

namespace motrims::analysis {

namespace {

constexpr std::size_t kMinCalibrationEvents = 100;

double silverman_bandwidth(std::vector<double> sorted) {
  const double n = static_cast<double>(sorted.size());
  const double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / n;
  double var = 0.0;
  for (double v : sorted) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / (n - 1.0));
  auto quantile = [&](double q) {
    const double pos = q * (n - 1.0);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const double f = pos - static_cast<double>(i);
    return i + 1 < sorted.size() ? sorted[i] * (1.0 - f) + sorted[i + 1] * f : sorted[i];
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  double spread = sd;
  if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
  return 0.9 * spread * std::pow(n, -0.2);
}

// Gaussian KDE sampled on a uniform grid (binned data convolved with the kernel).
struct GridDensity {
  double origin;
  double step;
  std::vector<double> f;
};

GridDensity binned_kde(const std::vector<double>& data, double h) {
  constexpr std::size_t kBinsPerBandwidth = 8;
  const auto [mn, mx] = std::minmax_element(data.begin(), data.end());
  const double lo = *mn - 4.0 * h;
  const double hi = *mx + 4.0 * h;
  const double step = h / kBinsPerBandwidth;
  const auto n_bins = static_cast<std::size_t>(std::ceil((hi - lo) / step)) + 1;
  std::vector<double> counts(n_bins, 0.0);
  for (double v : data) {
    // Linear binning keeps the sub-bin position information.
    const double pos = (v - lo) / step;
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const double f = pos - static_cast<double>(i);
    counts[i] += 1.0 - f;
    if (i + 1 < n_bins) counts[i + 1] += f;
  }
  const int half = static_cast<int>(4 * kBinsPerBandwidth);
  std::vector<double> kernel(static_cast<std::size_t>(2 * half + 1));
  for (int j = -half; j <= half; ++j) {
    const double u = j * step / h;
    kernel[static_cast<std::size_t>(j + half)] = std::exp(-0.5 * u * u);
  }
  GridDensity out{lo, step, std::vector<double>(n_bins, 0.0)};
  for (std::size_t i = 0; i < n_bins; ++i) {
    if (counts[i] == 0.0) continue;
    for (int j = -half; j <= half; ++j) {
      const auto k = static_cast<std::ptrdiff_t>(i) + j;
      if (k < 0 || k >= static_cast<std::ptrdiff_t>(n_bins)) continue;
      out.f[static_cast<std::size_t>(k)] += counts[i] * kernel[static_cast<std::size_t>(j + half)];
    }
  }
  return out;
}

// Vertex offset of the parabola through (-1, a), (0, b), (1, c).
double parabolic_offset(double a, double b, double c) {
  const double den = a - 2.0 * b + c;
  if (den >= 0.0) return 0.0;
  return std::clamp(0.5 * (a - c) / den, -0.5, 0.5);
}

double kde_mode(const GridDensity& d) {
  const auto it = std::max_element(d.f.begin(), d.f.end());
  const auto i = static_cast<std::size_t>(it - d.f.begin());
  double off = 0.0;
  if (i > 0 && i + 1 < d.f.size()) off = parabolic_offset(d.f[i - 1], d.f[i], d.f[i + 1]);
  return d.origin + (static_cast<double>(i) + off) * d.step;
}

// Maximum of (f * f)(2c): the centre of mirror symmetry.
double mirror_center(const GridDensity& d) {
  const std::size_t n = d.f.size();
  std::vector<double> auto_conv(2 * n - 1, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    if (d.f[a] == 0.0) continue;
    for (std::size_t b = 0; b < n; ++b) auto_conv[a + b] += d.f[a] * d.f[b];
  }
  const auto it = std::max_element(auto_conv.begin(), auto_conv.end());
  const auto m = static_cast<std::size_t>(it - auto_conv.begin());
  double off = 0.0;
  if (m > 0 && m + 1 < auto_conv.size()) off = parabolic_offset(auto_conv[m - 1], auto_conv[m], auto_conv[m + 1]);
  return d.origin + 0.5 * (static_cast<double>(m) + off) * d.step;
}

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double sd_of(const std::vector<double>& v, double mean) {
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return v.size() > 1 ? std::sqrt(s / static_cast<double>(v.size() - 1)) : 0.0;
}

}  // namespace

Calibration calibrate(std::span<const apparatus::DetectorEvent> events, const CalibrateOptions& options) {
  if (events.size() < kMinCalibrationEvents) {
    throw DataError("calibrate: need at least " + std::to_string(kMinCalibrationEvents) + " events, got " +
                    std::to_string(events.size()));
  }
  std::vector<double> t, x, y;
  t.reserve(events.size());
  x.reserve(events.size());
  y.reserve(events.size());
  for (const auto& e : events) {
    t.push_back(e.t_us);
    x.push_back(e.x_mm);
    y.push_back(e.y_mm);
  }
  Calibration cal;
  const double n = static_cast<double>(events.size());
  cal.center_x_mm = mean_of(x);
  cal.center_y_mm = mean_of(y);
  cal.center_err_x_mm = sd_of(x, cal.center_x_mm) / std::sqrt(n);
  cal.center_err_y_mm = sd_of(y, cal.center_y_mm) / std::sqrt(n);

  std::sort(t.begin(), t.end());
  const double t_mean = mean_of(t);
  const double t_sd = sd_of(t, t_mean);
  if (t.front() == t.back()) {
    cal.t0_us = t.front();
    cal.t0_err_us = 0.0;
    return cal;
  }
  double h = options.bandwidth_us ? *options.bandwidth_us : silverman_bandwidth(t);
  if (!(h > 0.0)) h = t_sd > 0.0 ? t_sd * 0.1 : (t.back() - t.front()) * 0.01;
  const GridDensity d = binned_kde(t, h);
  cal.t0_us = options.estimator == T0Estimator::kKdeMode ? kde_mode(d) : mirror_center(d);
  // Rough scale only: spread of the sample over sqrt(n).
  cal.t0_err_us = t_sd / std::sqrt(n);
  return cal;
}

Calibration calibration_from_geometry(const apparatus::SpectrometerGeometry& geom,
                                      const apparatus::IonSpecies& species, const apparatus::DetectorModel& detector) {
  Calibration cal;
  cal.t0_us = apparatus::time_of_flight_us(geom, species, 0.0, 0.0);
  cal.center_x_mm = detector.axis_x_mm;
  cal.center_y_mm = detector.axis_y_mm;
  return cal;
}

namespace {

// Safeguarded Newton for a strictly monotone f on [lo, hi] with f(lo), f(hi)
// bracketing zero. Stops when |f| <= ftol.
template <typename F, typename DF>
double safeguarded_newton(F f, DF df, double lo, double hi, double guess, double ftol, int max_iter,
                          const char* what) {
  double flo = f(lo);
  double x = std::clamp(guess, lo, hi);
  for (int it = 0; it < max_iter; ++it) {
    const double fx = f(x);
    if (std::abs(fx) <= ftol) return x;
    if ((fx > 0.0) == (flo > 0.0)) {
      lo = x;
      flo = fx;
    } else {
      hi = x;
    }
    const double slope = df(x);
    double next = slope != 0.0 ? x - fx / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    x = next;
  }
  throw NumericalError(std::string(what) + ": safeguarded Newton iteration did not converge");
}

}  // namespace

Reconstructor::Reconstructor(const apparatus::SpectrometerGeometry& geom, const apparatus::IonSpecies& species,
                             const Calibration& calibration)
    : geom_(geom), species_(species), cal_(calibration) {
  geom.validate();
  species.validate();
  if (!(calibration.t0_us > 0.0)) throw DataError("reconstruct: calibrated t0 must be positive");
  force_au_ = apparatus::extraction_force_au(geom, species);

  // TOF(p=0) as a function of the acceleration distance s is decreasing for
  // s < L/2 and increasing beyond; stay on the branch of the nominal s.
  const double nominal_s = geom.accel_length_mm;
  const double turn = 0.5 * geom.drift_length_mm;
  double s_lo = nominal_s < turn ? 1e-9 * nominal_s : turn;
  double s_hi = nominal_s < turn ? turn : std::max(4.0 * nominal_s, 4.0 * turn);
  const double t0 = units::us_to_au(calibration.t0_us);
  auto f = [&](double s) { return apparatus::time_of_flight_au(geom, species, 0.0, geom.accel_length_mm - s) - t0; };
  if ((f(s_lo) > 0.0) == (f(s_hi) > 0.0)) {
    throw NumericalError("reconstruct: calibrated t0 = " + std::to_string(calibration.t0_us) +
                         " us is not reachable by any target position for this geometry");
  }
  auto df = [&](double s) {
    const double h = 1e-6 * nominal_s;
    return (f(s + h) - f(s - h)) / (2.0 * h);
  };
  const double ftol = units::ns_to_au(1e-4);
  const double s = safeguarded_newton(f, df, s_lo, s_hi, nominal_s, ftol, 200, "reconstruct (t0 calibration)");
  z_offset_mm_ = geom.accel_length_mm - s;
}

double Reconstructor::linear_pz_au(double t_us) const {
  return force_au_ * units::us_to_au(cal_.t0_us - t_us);
}

MomentumRecord Reconstructor::reconstruct(const apparatus::DetectorEvent& event) const {
  if (!(event.t_us > 0.0)) {
    throw DataError("reconstruct: event " + std::to_string(event.id) + " has non-positive time of flight");
  }
  const double t = units::us_to_au(event.t_us);
  auto f = [&](double pz) { return apparatus::time_of_flight_au(geom_, species_, pz, z_offset_mm_) - t; };
  auto df = [&](double pz) { return apparatus::time_of_flight_slope_au(geom_, species_, pz, z_offset_mm_); };

  // f is decreasing in p_z; grow a bracket around the linear estimate.
  const double guess = linear_pz_au(event.t_us);
  double span = std::max(1.0, 2.0 * std::abs(guess));
  double lo = guess - span, hi = guess + span;
  int grow = 0;
  while (!(f(lo) > 0.0 && f(hi) < 0.0)) {
    if (++grow > 200) throw NumericalError("reconstruct: could not bracket p_z for event " + std::to_string(event.id));
    span *= 2.0;
    lo = guess - span;
    hi = guess + span;
  }
  const double ftol = units::ns_to_au(1e-3);
  MomentumRecord rec;
  rec.event_id = event.id;
  rec.p_au.z = safeguarded_newton(f, df, lo, hi, guess, ftol, 200, "reconstruct");
  const double m = species_.mass_au();
  rec.p_au.x = m * units::mm_to_au(event.x_mm - cal_.center_x_mm) / t;
  rec.p_au.y = m * units::mm_to_au(event.y_mm - cal_.center_y_mm) / t;
  if (event.truth) rec.channel = event.truth->channel;
  return rec;
}

MomentumRecord reconstruct(const apparatus::DetectorEvent& event, const apparatus::SpectrometerGeometry& geom,
                           const apparatus::IonSpecies& species, const Calibration& calibration) {
  return Reconstructor(geom, species, calibration).reconstruct(event);
}

std::vector<MomentumRecord> reconstruct_all(std::span<const apparatus::DetectorEvent> events,
                                            const Reconstructor& reconstructor, unsigned workers) {
  std::vector<MomentumRecord> out(events.size());
  parallel_for(events.size(), workers, [&](std::size_t i) { out[i] = reconstructor.reconstruct(events[i]); });
  return out;
}

}  // namespace motrims::analysis
