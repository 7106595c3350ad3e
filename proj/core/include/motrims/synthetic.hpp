#pragma once

// Synthetic characterization data generated from a known target, for
// exercising (and validating) the analysis chain without a camera or a laser.

#include <cstdint>
#include <span>
#include <vector>

#include "motrims/analysis.hpp"
#include "motrims/ensemble.hpp"

namespace motrims::synthetic {

// Ballistic expansion sigma(t)^2 = sigma0^2 + (kB T / m) t^2, each width
// multiplied by (1 + relative_noise * N(0,1)); sigma_err = relative_noise * sigma.
std::vector<analysis::ExpansionPoint> expansion_series(double temperature_uk, double mass_amu, double sigma0_mm,
                                                       std::span<const double> times_ms, double relative_noise,
                                                       std::uint64_t seed);

enum class ScanAxis { kX, kZ };

struct ScanData {
  std::vector<double> offsets_mm;   // target displacement relative to the focus
  std::vector<double> currents_a;   // coil current change producing that displacement
  std::vector<double> counts;       // Poisson counts
  std::vector<double> expected;     // noise-free rate, same scale
};

// Moves the target through the focus with the coils (step in mm, `points`
// positions centred on the focus) and counts ions. Peak expectation is
// `peak_counts`; channels with zero population do not contribute.
ScanData ionization_scan(const ensemble::TargetEnsemble& target, const ensemble::FocusModel& focus,
                         const ensemble::CoilCalibration& coils, ScanAxis axis, double step_mm, std::size_t points,
                         double peak_counts, std::uint64_t seed);

struct AbsorptionImages {
  analysis::Image with_atoms;
  analysis::Image without_atoms;
  analysis::Image dark;
  double true_atom_number = 0.0;  // volume integral of the density model
};

// Imaging beam along x; rows follow z, columns follow y, centred on the target.
// Gaussian read noise of sqrt(counts) on every pixel.
AbsorptionImages absorption_images(const ensemble::TargetEnsemble& target, double pixel_size_um, std::size_t pixels,
                                   double reference_counts, double dark_counts, double wavelength_nm,
                                   std::uint64_t seed);

}  // namespace motrims::synthetic
