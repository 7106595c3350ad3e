#pragma once

// Inverse pipeline: detector events -> ion momenta -> histograms -> fits, plus
// the cold-target characterization analyses (expansion thermometry, ionization
// scans, absorption imaging).

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "motrims/apparatus.hpp"
#include "motrims/error.hpp"
#include "motrims/profile.hpp"
#include "motrims/strongfield.hpp"
#include "motrims/vec3.hpp"

namespace motrims::analysis {

// --- reconstruction ---------------------------------------------------------

struct MomentumRecord {
  Vec3 p_au;
  std::uint64_t event_id = 0;
  std::optional<strongfield::Channel> channel;
};

struct Calibration {
  double t0_us = 0.0;  // TOF of a zero-momentum ion
  double t0_err_us = 0.0;
  double center_x_mm = 0.0;  // detector position of a zero-transverse-momentum ion
  double center_y_mm = 0.0;
  double center_err_x_mm = 0.0;
  double center_err_y_mm = 0.0;
};

enum class T0Estimator {
  kMirrorSymmetry,  // centre of symmetry of the TOF density (maximum of its autoconvolution)
  kKdeMode,         // peak of the kernel density estimate
};

struct CalibrateOptions {
  T0Estimator estimator = T0Estimator::kMirrorSymmetry;
  std::optional<double> bandwidth_us;  // default: Silverman's rule
};

// Data-driven calibration; needs >= 100 events (DataError otherwise).
Calibration calibrate(std::span<const apparatus::DetectorEvent> events, const CalibrateOptions& options = {});

// Calibration implied by the nominal geometry (simulated data with truth).
Calibration calibration_from_geometry(const apparatus::SpectrometerGeometry& geom,
                                      const apparatus::IonSpecies& species, const apparatus::DetectorModel& detector);

class Reconstructor {
 public:
  // The calibrated t0 fixes the effective birth offset along z; throws
  // NumericalError when no offset on the nominal branch reproduces t0.
  Reconstructor(const apparatus::SpectrometerGeometry& geom, const apparatus::IonSpecies& species,
                const Calibration& calibration);

  // Exact inversion of the TOF formula by safeguarded Newton iteration,
  // converged to |dt| < 1e-3 ns. DataError for t <= 0.
  MomentumRecord reconstruct(const apparatus::DetectorEvent& event) const;
  // p_z ~ qE (t0 - t), kept as a cross-check.
  double linear_pz_au(double t_us) const;
  double birth_offset_mm() const { return z_offset_mm_; }

 private:
  apparatus::SpectrometerGeometry geom_;
  apparatus::IonSpecies species_;
  Calibration cal_;
  double z_offset_mm_ = 0.0;
  double force_au_ = 0.0;
};

MomentumRecord reconstruct(const apparatus::DetectorEvent& event, const apparatus::SpectrometerGeometry& geom,
                           const apparatus::IonSpecies& species, const Calibration& calibration);

std::vector<MomentumRecord> reconstruct_all(std::span<const apparatus::DetectorEvent> events,
                                            const Reconstructor& reconstructor, unsigned workers = 0);

// --- histograms -------------------------------------------------------------

enum class Component { kPx = 0, kPy = 1, kPz = 2 };
std::string component_label(Component c);

struct HistAxis {
  Component quantity = Component::kPz;
  double lo = -0.5;
  double hi = 0.5;
  std::size_t bins = 50;

  double width() const { return (hi - lo) / static_cast<double>(bins); }
  double center(std::size_t i) const { return lo + (static_cast<double>(i) + 0.5) * width(); }
  // Bin index or nullopt when outside [lo, hi).
  std::optional<std::size_t> locate(double v) const;
  bool operator==(const HistAxis&) const = default;
};

struct Slice {
  enum class Kind { kNone, kCylinder, kSlab };
  Kind kind = Kind::kNone;
  double value = 0.0;

  static Slice none() { return {}; }
  static Slice cylinder(double rho_max_au) { return {Kind::kCylinder, rho_max_au}; }  // sqrt(px^2+py^2) < r
  static Slice slab(double half_width_au) { return {Kind::kSlab, half_width_au}; }    // |p_y| < c

  bool accepts(const Vec3& p) const;
  std::string describe() const;
};

struct Histogram1D {
  HistAxis axis;
  std::vector<std::uint64_t> counts;
  std::string slice;

  std::uint64_t total() const;
  void merge(const Histogram1D& other);  // DataError on axis mismatch
  Profile as_profile() const;
  // Poisson errors sqrt(max(count, 1)).
  std::vector<double> poisson_sigma() const;
};

struct Histogram2D {
  HistAxis u;  // rows
  HistAxis v;  // columns
  std::vector<std::uint64_t> counts;  // row-major, v fastest
  std::string slice;

  std::uint64_t at(std::size_t iu, std::size_t iv) const { return counts[iu * v.bins + iv]; }
  std::uint64_t total() const;
  void merge(const Histogram2D& other);
};

Histogram1D histogram(std::span<const MomentumRecord> records, const HistAxis& axis, const Slice& slice = {});
Histogram2D histogram2d(std::span<const MomentumRecord> records, const HistAxis& u, const HistAxis& v,
                        const Slice& slice = {});

// --- fitting ----------------------------------------------------------------

struct GaussianParams {
  double amplitude = 0.0;
  double center = 0.0;
  double sigma = 1.0;
  double offset = 0.0;
};

struct GaussianFit {
  GaussianParams params;
  GaussianParams errors;
  double chi2 = 0.0;
  double reduced_chi2 = 0.0;
  int iterations = 0;

  double fwhm() const;
  double fwhm_error() const;
  double operator()(double x) const;
};

class FitError : public NumericalError {
 public:
  FitError(const std::string& what, GaussianFit best) : NumericalError(what), best_(best) {}
  const GaussianFit& best_so_far() const { return best_; }

 private:
  GaussianFit best_;
};

struct GaussianFitOptions {
  std::optional<GaussianParams> initial;
  int max_iterations = 500;
  double step_tolerance = 1e-8;
};

// Levenberg-Marquardt least squares of A exp(-(x-mu)^2 / 2 sigma^2) + c.
// sigma_y empty -> unit weights, parameter errors scaled by sqrt(reduced chi2).
// DataError for < 5 points or constant y; FitError on non-convergence.
GaussianFit fit_gaussian_1d(std::span<const double> x, std::span<const double> y,
                            std::span<const double> sigma_y = {}, const GaussianFitOptions& options = {});

// Discrete convolution with a normalized Gaussian truncated at +-5 sigma. Mass
// that would leave the grid is redistributed, so the sum is preserved.
// DataError for non-uniform spacing; sigma == 0 is the identity.
Profile convolve_gaussian(const Profile& profile, double sigma);

// Local maxima of a sampled curve that reach min_fraction of the global
// maximum, located by parabolic interpolation, in ascending x. Plateaus count
// once.
std::vector<double> find_maxima(const Profile& profile, double min_fraction);

// Full width at half maximum read directly off a sampled curve: walk out from
// the global maximum to the first half-maximum crossing on each side, with
// linear interpolation. DataError if either side never drops below half.
double half_max_width(const Profile& profile);

struct ResolutionFit {
  double sigma = 0.0;
  double sigma_error = 0.0;
  double scale = 0.0;
  double chi2 = 0.0;
  std::size_t dof = 0;

  double fwhm() const;
  double fwhm_error() const;
};

// Minimizes chi2(sigma) between measured and scale * (theory (*) Gaussian(sigma)),
// scale profiled analytically, golden-section search on sigma in [0, 1] a.u.
// The theory is evaluated at the measured x by linear interpolation; measured
// points outside the theory range are ignored. The
// uncertainty is the half-width of the chi2_min + delta interval, delta =
// max(1, chi2_red) with errors given and chi2_red with unit weights. sigma = 0
// is reported when the unblurred theory fits at least as well.
ResolutionFit fit_resolution(const Profile& theory, const Profile& measured, std::span<const double> measured_sigma = {});

// --- target characterization ------------------------------------------------

struct ExpansionPoint {
  double t_ms = 0.0;
  double sigma_mm = 0.0;
  double sigma_err_mm = 0.0;  // 0 -> unit weight
};

struct ExpansionFit {
  double temperature_uk = 0.0;
  double temperature_err_uk = 0.0;
  double speed_m_s = 0.0;  // sqrt(kB T / m)
  double speed_err_m_s = 0.0;
  double sigma0_mm = 0.0;
};

// Weighted straight-line fit of sigma^2 against t^2. Needs >= 3 points; a
// negative slope is a DataError.
ExpansionFit temperature_from_expansion(std::span<const ExpansionPoint> series, double mass_amu);

struct ScanFit {
  GaussianFit fit;
  double fwhm_mm = 0.0;
  double fwhm_err_mm = 0.0;
};

// Gaussian fit of an ionization-rate scan with Poisson weights.
ScanFit scan_profile(std::span<const double> positions_mm, std::span<const double> counts);

struct Image {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> pixels;  // row-major

  double at(std::size_t r, std::size_t c) const { return pixels[r * cols + c]; }
  double& at(std::size_t r, std::size_t c) { return pixels[r * cols + c]; }
};

struct AbsorptionOptions {
  double pixel_size_um = 10.0;   // object-plane pixel pitch
  double wavelength_nm = 780.0;
  double od_floor = 0.0;         // subtracted before clamping at 0
};

struct AbsorptionResult {
  Image optical_density;
  std::vector<std::uint8_t> masked;  // 1 where intensities were non-positive after dark subtraction
  std::size_t masked_count = 0;
  double atom_number = 0.0;
  std::optional<GaussianFit> fit_columns;  // marginal along the column index (mm)
  std::optional<GaussianFit> fit_rows;     // marginal along the row index (mm)
};

// Resonant two-level cross section 3 lambda^2 / 2 pi in cm^2.
double resonant_cross_section_cm2(double wavelength_nm);

// OD = ln[(I_ref - dark) / (I_atoms - dark)], N = sum(OD) * pixel area / sigma0.
AbsorptionResult absorption_analysis(const Image& with_atoms, const Image& without_atoms, const Image& dark,
                                     const AbsorptionOptions& options = {});

}  // namespace motrims::analysis
