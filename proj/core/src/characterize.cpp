#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "motrims/analysis.hpp"
#include "motrims/units.hpp"

namespace motrims::analysis {

ExpansionFit temperature_from_expansion(std::span<const ExpansionPoint> series, double mass_amu) {
  if (series.size() < 3) throw DataError("expansion fit: need at least 3 time points");
  if (!(mass_amu > 0.0)) throw DomainError("expansion fit: mass must be positive");
  const bool weighted = std::all_of(series.begin(), series.end(), [](const auto& p) { return p.sigma_err_mm > 0.0; });
  // sigma^2 = sigma0^2 + (kB T / m) t^2, linear in X = t^2.
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& p : series) {
    if (!std::isfinite(p.t_ms) || !(p.sigma_mm > 0.0)) throw DataError("expansion fit: invalid point");
    const double X = p.t_ms * p.t_ms;
    const double Y = p.sigma_mm * p.sigma_mm;
    const double var = 2.0 * p.sigma_mm * p.sigma_err_mm;
    const double w = weighted ? 1.0 / (var * var) : 1.0;
    sw += w;
    sx += w * X;
    sy += w * Y;
    sxx += w * X * X;
    sxy += w * X * Y;
  }
  const double det = sw * sxx - sx * sx;
  if (!(det > 0.0)) throw DataError("expansion fit: time points must not all coincide");
  double slope = (sw * sxy - sx * sy) / det;
  const double intercept = (sxx * sy - sx * sxy) / det;
  double slope_var = sw / det;
  if (!weighted) {
    double rss = 0.0;
    for (const auto& p : series) {
      const double r = p.sigma_mm * p.sigma_mm - (intercept + slope * p.t_ms * p.t_ms);
      rss += r * r;
    }
    slope_var *= rss / static_cast<double>(series.size() - 2);
  }
  const double slope_err = std::sqrt(slope_var);
  if (slope < 0.0) {
    // Consistent with zero within two standard errors -> T = 0; otherwise the
    // cloud is shrinking and the model does not apply.
    if (slope + 2.0 * slope_err < 0.0) {
      throw DataError("expansion fit: cloud width decreases with time (slope " + std::to_string(slope) + " mm^2/ms^2)");
    }
    slope = 0.0;
  }
  // mm^2/ms^2 == m^2/s^2.
  const double m_kg = mass_amu * units::kAtomicMassUnitKg;
  ExpansionFit fit;
  fit.temperature_uk = slope * m_kg / units::kBoltzmannJoulePerKelvin * 1e6;
  fit.temperature_err_uk = slope_err * m_kg / units::kBoltzmannJoulePerKelvin * 1e6;
  fit.speed_m_s = std::sqrt(slope);
  fit.speed_err_m_s = slope > 0.0 ? slope_err / (2.0 * fit.speed_m_s) : std::sqrt(slope_err);
  fit.sigma0_mm = std::sqrt(std::max(intercept, 0.0));
  return fit;
}

ScanFit scan_profile(std::span<const double> positions_mm, std::span<const double> counts) {
  std::vector<double> err(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] < 0.0) throw DataError("scan: negative count at point " + std::to_string(i));
    err[i] = std::sqrt(std::max(counts[i], 1.0));
  }
  ScanFit out;
  out.fit = fit_gaussian_1d(positions_mm, counts, err);
  out.fwhm_mm = out.fit.fwhm();
  out.fwhm_err_mm = out.fit.fwhm_error();
  return out;
}

double resonant_cross_section_cm2(double wavelength_nm) {
  if (!(wavelength_nm > 0.0)) throw DomainError("cross section: wavelength must be positive");
  const double lambda_cm = wavelength_nm * 1e-7;
  return 3.0 * lambda_cm * lambda_cm / (2.0 * std::numbers::pi);
}

namespace {

std::optional<GaussianFit> try_fit(const std::vector<double>& x, const std::vector<double>& y) {
  try {
    return fit_gaussian_1d(x, y);
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace

AbsorptionResult absorption_analysis(const Image& with_atoms, const Image& without_atoms, const Image& dark,
                                     const AbsorptionOptions& options) {
  const auto same = [&](const Image& im) { return im.rows == with_atoms.rows && im.cols == with_atoms.cols; };
  if (!same(without_atoms) || !same(dark)) throw DataError("absorption: image dimensions differ");
  if (with_atoms.rows == 0 || with_atoms.cols == 0) throw DataError("absorption: empty image");
  for (const Image* im : {&with_atoms, &without_atoms, &dark}) {
    if (im->pixels.size() != im->rows * im->cols) throw DataError("absorption: pixel count does not match dimensions");
  }
  if (!(options.pixel_size_um > 0.0)) throw DomainError("absorption: pixel size must be positive");

  AbsorptionResult r;
  r.optical_density = Image{with_atoms.rows, with_atoms.cols, std::vector<double>(with_atoms.pixels.size(), 0.0)};
  r.masked.assign(with_atoms.pixels.size(), 0);
  double od_sum = 0.0;
  for (std::size_t i = 0; i < with_atoms.pixels.size(); ++i) {
    const double ia = with_atoms.pixels[i] - dark.pixels[i];
    const double ir = without_atoms.pixels[i] - dark.pixels[i];
    if (!(ia > 0.0) || !(ir > 0.0)) {
      r.masked[i] = 1;
      ++r.masked_count;
      continue;
    }
    const double od = std::max(0.0, std::log(ir / ia) - options.od_floor);
    r.optical_density.pixels[i] = od;
    od_sum += od;
  }
  const double pixel_cm = options.pixel_size_um * 1e-4;
  r.atom_number = od_sum * pixel_cm * pixel_cm / resonant_cross_section_cm2(options.wavelength_nm);

  const double pixel_mm = options.pixel_size_um * 1e-3;
  std::vector<double> cx(with_atoms.cols), cy(with_atoms.cols, 0.0);
  std::vector<double> rx(with_atoms.rows), ry(with_atoms.rows, 0.0);
  for (std::size_t c = 0; c < with_atoms.cols; ++c) cx[c] = static_cast<double>(c) * pixel_mm;
  for (std::size_t row = 0; row < with_atoms.rows; ++row) rx[row] = static_cast<double>(row) * pixel_mm;
  for (std::size_t row = 0; row < with_atoms.rows; ++row) {
    for (std::size_t c = 0; c < with_atoms.cols; ++c) {
      const double od = r.optical_density.at(row, c);
      cy[c] += od;
      ry[row] += od;
    }
  }
  r.fit_columns = try_fit(cx, cy);
  r.fit_rows = try_fit(rx, ry);
  return r;
}

}  // namespace motrims::analysis
