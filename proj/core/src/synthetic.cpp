#include "motrims/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "motrims/error.hpp"
#include "motrims/rng.hpp"
#include "motrims/units.hpp"

namespace motrims::synthetic {

std::vector<analysis::ExpansionPoint> expansion_series(double temperature_uk, double mass_amu, double sigma0_mm,
                                                       std::span<const double> times_ms, double relative_noise,
                                                       std::uint64_t seed) {
  if (!(temperature_uk >= 0.0) || !(mass_amu > 0.0) || !(sigma0_mm > 0.0) || !(relative_noise >= 0.0)) {
    throw DomainError("expansion series: temperature >= 0, mass > 0, sigma0 > 0, noise >= 0 required");
  }
  // kB T / m in m^2/s^2 == mm^2/ms^2
  const double v2 = units::kBoltzmannJoulePerKelvin * temperature_uk * 1e-6 / (mass_amu * units::kAtomicMassUnitKg);
  std::vector<analysis::ExpansionPoint> out;
  for (std::size_t i = 0; i < times_ms.size(); ++i) {
    auto rng = substream(seed, streams::kSynthetic, i);
    std::normal_distribution<double> gauss;
    const double t = times_ms[i];
    const double sigma = std::sqrt(sigma0_mm * sigma0_mm + v2 * t * t);
    out.push_back({t, sigma * (1.0 + relative_noise * gauss(rng)), relative_noise * sigma});
  }
  return out;
}

ScanData ionization_scan(const ensemble::TargetEnsemble& target, const ensemble::FocusModel& focus,
                         const ensemble::CoilCalibration& coils, ScanAxis axis, double step_mm, std::size_t points,
                         double peak_counts, std::uint64_t seed) {
  coils.validate();
  if (!(step_mm > 0.0) || points < 2 || !(peak_counts > 0.0)) {
    throw DomainError("ionization scan: step > 0, points >= 2 and peak counts > 0 required");
  }
  ScanData d;
  const double mid = 0.5 * static_cast<double>(points - 1);
  std::vector<double> rate(points);
  for (std::size_t i = 0; i < points; ++i) {
    const double offset = (static_cast<double>(i) - mid) * step_mm;
    ensemble::TargetEnsemble moved = target;
    if (axis == ScanAxis::kX) {
      moved.center_mm.x += offset;
      d.currents_a.push_back(offset / coils.x_mm_per_a);
    } else {
      moved.center_mm.z += offset;
      d.currents_a.push_back(offset / coils.z_mm_per_a);
    }
    d.offsets_mm.push_back(offset);
    rate[i] = ensemble::integrated_yield(moved, focus, strongfield::Channel::k5s) +
              ensemble::integrated_yield(moved, focus, strongfield::Channel::k5p);
  }
  const double peak = *std::max_element(rate.begin(), rate.end());
  if (!(peak > 0.0)) throw DomainError("ionization scan: the focus never overlaps the target");
  for (std::size_t i = 0; i < points; ++i) {
    auto rng = substream(seed, streams::kSynthetic, i);
    const double mean = peak_counts * rate[i] / peak;
    std::poisson_distribution<long long> poisson(std::max(mean, 1e-300));
    d.expected.push_back(mean);
    d.counts.push_back(static_cast<double>(poisson(rng)));
  }
  return d;
}

AbsorptionImages absorption_images(const ensemble::TargetEnsemble& target, double pixel_size_um, std::size_t pixels,
                                   double reference_counts, double dark_counts, double wavelength_nm,
                                   std::uint64_t seed) {
  target.validate();
  if (target.kind == ensemble::TargetKind::kBeam2D) {
    throw DomainError("absorption images: the imaging beam runs along the atomic beam (infinite column)");
  }
  if (!(pixel_size_um > 0.0) || pixels < 2 || !(reference_counts > 0.0) || !(dark_counts >= 0.0)) {
    throw DomainError("absorption images: pixel size > 0, >= 2 pixels, positive counts required");
  }
  const double sigma_cm2 = analysis::resonant_cross_section_cm2(wavelength_nm);
  const double s = 1.0 / units::kGaussianFwhmPerSigma;
  const Vec3 sig{target.fwhm_mm.x * s, target.fwhm_mm.y * s, target.fwhm_mm.z * s};
  // Column density along x in atoms/cm^2.
  const double column_peak = target.peak_density_cm3 * std::sqrt(2.0 * std::numbers::pi) * sig.x * 0.1;
  const double pix_mm = pixel_size_um * 1e-3;
  const double mid = 0.5 * static_cast<double>(pixels - 1);

  AbsorptionImages out;
  for (auto* im : {&out.with_atoms, &out.without_atoms, &out.dark}) {
    *im = analysis::Image{pixels, pixels, std::vector<double>(pixels * pixels, 0.0)};
  }
  auto rng = substream(seed, streams::kSynthetic, 0);
  std::normal_distribution<double> gauss;
  auto noisy = [&](double counts) { return counts + std::sqrt(std::max(counts, 0.0)) * gauss(rng); };
  for (std::size_t r = 0; r < pixels; ++r) {
    const double z = (static_cast<double>(r) - mid) * pix_mm;
    for (std::size_t c = 0; c < pixels; ++c) {
      const double y = (static_cast<double>(c) - mid) * pix_mm;
      const double col = column_peak * std::exp(-0.5 * (y * y / (sig.y * sig.y) + z * z / (sig.z * sig.z)));
      const double transmitted = reference_counts * std::exp(-sigma_cm2 * col);
      out.with_atoms.at(r, c) = noisy(transmitted + dark_counts);
      out.without_atoms.at(r, c) = noisy(reference_counts + dark_counts);
      out.dark.at(r, c) = noisy(dark_counts);
    }
  }
  // n0 (2 pi)^{3/2} sx sy sz, widths in cm.
  out.true_atom_number = target.peak_density_cm3 * std::pow(2.0 * std::numbers::pi, 1.5) * sig.x * sig.y * sig.z * 1e-3;
  return out;
}

}  // namespace motrims::synthetic
