#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "motrims/analysis.hpp"
#include "motrims/units.hpp"

namespace motrims::analysis {

double GaussianFit::fwhm() const { return units::kGaussianFwhmPerSigma * std::abs(params.sigma); }
double GaussianFit::fwhm_error() const { return units::kGaussianFwhmPerSigma * errors.sigma; }

double GaussianFit::operator()(double x) const {
  const double u = (x - params.center) / params.sigma;
  return params.amplitude * std::exp(-0.5 * u * u) + params.offset;
}

namespace {

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

GaussianParams to_params(const Vec4& v) { return {v[0], v[1], v[2], v[3]}; }

GaussianParams initial_guess(std::span<const double> x, std::span<const double> y) {
  const auto [mn, mx] = std::minmax_element(y.begin(), y.end());
  const auto imax = static_cast<std::size_t>(mx - y.begin());
  GaussianParams g;
  g.offset = *mn;
  g.amplitude = *mx - *mn;
  g.center = x[imax];
  // Half-maximum crossings either side of the peak.
  const double half = *mn + 0.5 * g.amplitude;
  std::size_t l = imax, r = imax;
  while (l > 0 && y[l] > half) --l;
  while (r + 1 < y.size() && y[r] > half) ++r;
  const double width = std::abs(x[r] - x[l]);
  const auto [xmin, xmax] = std::minmax_element(x.begin(), x.end());
  g.sigma = width > 0.0 ? width / units::kGaussianFwhmPerSigma : (*xmax - *xmin) / 4.0;
  return g;
}

}  // namespace

GaussianFit fit_gaussian_1d(std::span<const double> x, std::span<const double> y, std::span<const double> sigma_y,
                            const GaussianFitOptions& options) {
  const std::size_t n = x.size();
  if (y.size() != n || (!sigma_y.empty() && sigma_y.size() != n)) {
    throw DataError("gaussian fit: x, y and sigma must have the same length");
  }
  if (n < 5) throw DataError("gaussian fit: need at least 5 points, got " + std::to_string(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw DataError("gaussian fit: non-finite input");
    if (!sigma_y.empty() && !(sigma_y[i] > 0.0)) throw DataError("gaussian fit: sigma must be positive");
  }
  const auto [mn, mx] = std::minmax_element(y.begin(), y.end());
  if (*mn == *mx) throw DataError("gaussian fit: y is constant");

  const GaussianParams g0 = options.initial ? *options.initial : initial_guess(x, y);
  Vec4 p(g0.amplitude, g0.center, g0.sigma, g0.offset);
  if (p[2] == 0.0) throw DataError("gaussian fit: initial sigma is zero");

  std::vector<double> w(n, 1.0);
  if (!sigma_y.empty()) {
    for (std::size_t i = 0; i < n; ++i) w[i] = 1.0 / (sigma_y[i] * sigma_y[i]);
  }

  auto chi2_of = [&](const Vec4& q) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double u = (x[i] - q[1]) / q[2];
      const double r = y[i] - (q[0] * std::exp(-0.5 * u * u) + q[3]);
      s += w[i] * r * r;
    }
    return s;
  };
  auto normal_equations = [&](const Vec4& q, Mat4& jtj, Vec4& jtr) {
    jtj.setZero();
    jtr.setZero();
    for (std::size_t i = 0; i < n; ++i) {
      const double u = (x[i] - q[1]) / q[2];
      const double e = std::exp(-0.5 * u * u);
      const double r = y[i] - (q[0] * e + q[3]);
      Vec4 j(e, q[0] * e * u / q[2], q[0] * e * u * u / q[2], 1.0);
      jtj.noalias() += w[i] * j * j.transpose();
      jtr += w[i] * r * j;
    }
  };

  double chi2 = chi2_of(p);
  double lambda = 1e-3;
  GaussianFit fit;
  int it = 0;
  bool converged = false;
  Mat4 jtj;
  Vec4 jtr;
  for (; it < options.max_iterations; ++it) {
    normal_equations(p, jtj, jtr);
    // Marquardt scaling by the diagonal makes the damping unit-independent.
    Vec4 diag = jtj.diagonal().cwiseMax(1e-300);
    bool accepted = false;
    while (lambda < 1e12) {
      Mat4 a = jtj;
      a.diagonal() += lambda * diag;
      const Vec4 step = a.ldlt().solve(jtr);
      const Vec4 trial = p + step;
      const double c = trial[2] != 0.0 ? chi2_of(trial) : std::numeric_limits<double>::infinity();
      if (std::isfinite(c) && c <= chi2) {
        const bool small_step =
            (step.cwiseAbs().array() <= options.step_tolerance * (p.cwiseAbs().array() + options.step_tolerance)).all();
        const double rel_chi2 = (chi2 - c) / std::max(chi2, 1e-300);
        p = trial;
        chi2 = c;
        lambda = std::max(lambda * 0.3, 1e-12);
        accepted = true;
        if (small_step || rel_chi2 < 1e-14) converged = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) {
      // No downhill step at any damping: already at the minimum to precision.
      converged = true;
    }
    if (converged) break;
  }
  p[2] = std::abs(p[2]);
  fit.params = to_params(p);
  fit.chi2 = chi2;
  fit.iterations = it + 1;
  const double dof = static_cast<double>(n) - 4.0;
  fit.reduced_chi2 = dof > 0.0 ? chi2 / dof : 0.0;
  if (!converged) throw FitError("gaussian fit did not converge in " + std::to_string(options.max_iterations) +
                                     " iterations", fit);

  normal_equations(p, jtj, jtr);
  Eigen::FullPivLU<Mat4> lu(jtj);
  if (!lu.isInvertible()) throw FitError("gaussian fit: singular curvature matrix", fit);
  Mat4 cov = lu.inverse();
  if (sigma_y.empty()) cov *= fit.reduced_chi2;
  fit.errors = to_params(cov.diagonal().cwiseAbs().cwiseSqrt());
  return fit;
}

Profile convolve_gaussian(const Profile& profile, double sigma) {
  if (profile.x.size() != profile.y.size()) throw DataError("convolve: x and y differ in length");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw DomainError("convolve: sigma must be finite and >= 0");
  const std::size_t n = profile.size();
  if (sigma == 0.0 || n < 2) return profile;
  const double dx = (profile.x.back() - profile.x.front()) / static_cast<double>(n - 1);
  for (std::size_t i = 1; i < n; ++i) {
    if (std::abs(profile.x[i] - profile.x[i - 1] - dx) > 1e-6 * std::abs(dx)) {
      throw DataError("convolve: grid spacing is not uniform");
    }
  }
  const int half = static_cast<int>(std::floor(5.0 * sigma / std::abs(dx)));
  std::vector<double> kernel(static_cast<std::size_t>(2 * half + 1));
  for (int j = -half; j <= half; ++j) {
    const double u = j * dx / sigma;
    kernel[static_cast<std::size_t>(j + half)] = std::exp(-0.5 * u * u);
  }
  Profile out{profile.x, std::vector<double>(n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    const double v = profile.y[i];
    if (v == 0.0) continue;
    const auto ii = static_cast<std::ptrdiff_t>(i);
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, ii - half);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(n) - 1, ii + half);
    double norm = 0.0;
    for (auto k = lo; k <= hi; ++k) norm += kernel[static_cast<std::size_t>(k - ii + half)];
    for (auto k = lo; k <= hi; ++k) {
      out.y[static_cast<std::size_t>(k)] += v * kernel[static_cast<std::size_t>(k - ii + half)] / norm;
    }
  }
  return out;
}

std::vector<double> find_maxima(const Profile& p, double min_fraction) {
  std::vector<double> out;
  const std::size_t n = p.size();
  if (n < 3) return out;
  const double top = *std::max_element(p.y.begin(), p.y.end());
  if (!(top > 0.0)) return out;
  const double floor = min_fraction * top;
  std::size_t i = 1;
  while (i + 1 < n) {
    if (p.y[i] > p.y[i - 1] && p.y[i] >= floor) {
      std::size_t j = i;
      while (j + 1 < n && p.y[j + 1] == p.y[i]) ++j;
      if (j + 1 < n && p.y[j + 1] < p.y[i]) {
        double x = 0.5 * (p.x[i] + p.x[j]);
        if (i == j) {
          const double a = p.y[i - 1], b = p.y[i], c = p.y[i + 1];
          const double den = a - 2.0 * b + c;
          if (den < 0.0) x = p.x[i] + 0.5 * (a - c) / den * (p.x[i + 1] - p.x[i]);
        }
        out.push_back(x);
      }
      i = j + 1;
    } else {
      ++i;
    }
  }
  return out;
}

double half_max_width(const Profile& p) {
  const std::size_t n = p.size();
  if (n < 3 || p.y.size() != n) throw DataError("half_max_width: need at least 3 samples");
  const auto top = static_cast<std::size_t>(std::max_element(p.y.begin(), p.y.end()) - p.y.begin());
  const double half = 0.5 * p.y[top];
  if (!(half > 0.0)) throw DataError("half_max_width: curve has no positive maximum");
  std::size_t l = top, r = top;
  while (l > 0 && p.y[l] > half) --l;
  while (r + 1 < n && p.y[r] > half) ++r;
  if (p.y[l] > half || p.y[r] > half) throw DataError("half_max_width: curve does not fall to half maximum inside the range");
  auto cross = [&](std::size_t a, std::size_t b) {  // p.y[a] <= half < p.y[b]
    return p.x[a] + (half - p.y[a]) / (p.y[b] - p.y[a]) * (p.x[b] - p.x[a]);
  };
  return cross(r, r - 1) - cross(l, l + 1);
}

double ResolutionFit::fwhm() const { return units::kGaussianFwhmPerSigma * sigma; }
double ResolutionFit::fwhm_error() const { return units::kGaussianFwhmPerSigma * sigma_error; }

ResolutionFit fit_resolution(const Profile& theory, const Profile& measured, std::span<const double> measured_sigma) {
  const std::size_t n = measured.size();
  if (measured.y.size() != n || n < 3) throw DataError("resolution fit: need at least 3 measured points");
  if (!measured_sigma.empty() && measured_sigma.size() != n) throw DataError("resolution fit: sigma length mismatch");
  if (theory.size() < 2) throw DataError("resolution fit: theory profile too short");
  std::vector<double> w(n, 1.0);
  for (std::size_t i = 0; i < n && !measured_sigma.empty(); ++i) {
    if (!(measured_sigma[i] > 0.0)) throw DataError("resolution fit: sigma must be positive");
    w[i] = 1.0 / (measured_sigma[i] * measured_sigma[i]);
  }
  std::size_t used = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (measured.x[i] < theory.x.front() || measured.x[i] > theory.x.back()) {
      w[i] = 0.0;
    } else {
      ++used;
    }
  }
  if (used < 3) throw DataError("resolution fit: fewer than 3 measured points inside the theory range");

  struct Eval {
    double chi2;
    double scale;
  };
  auto evaluate = [&](double s) {
    const Profile blurred = convolve_gaussian(theory, s);
    double tt = 0.0, mt = 0.0;
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = interpolate(blurred, measured.x[i]);
      tt += w[i] * t[i] * t[i];
      mt += w[i] * measured.y[i] * t[i];
    }
    if (!(tt > 0.0)) throw DataError("resolution fit: theory vanishes on the measured grid");
    const double scale = mt / tt;
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = measured.y[i] - scale * t[i];
      c += w[i] * r * r;
    }
    return Eval{c, scale};
  };

  // Coarse scan to bracket the global minimum, then golden section.
  constexpr double kSigmaMax = 1.0;
  constexpr int kScan = 100;
  std::vector<double> grid(kScan + 1), chi(kScan + 1);
  std::size_t best = 0;
  for (int k = 0; k <= kScan; ++k) {
    grid[static_cast<std::size_t>(k)] = kSigmaMax * k / kScan;
    chi[static_cast<std::size_t>(k)] = evaluate(grid[static_cast<std::size_t>(k)]).chi2;
    if (chi[static_cast<std::size_t>(k)] < chi[best]) best = static_cast<std::size_t>(k);
  }
  double a = grid[best > 0 ? best - 1 : 0];
  double b = grid[std::min<std::size_t>(best + 1, kScan)];
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = evaluate(c).chi2, fd = evaluate(d).chi2;
  while (b - a > 1e-7) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = evaluate(c).chi2;
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = evaluate(d).chi2;
    }
  }
  double s_hat = 0.5 * (a + b);
  Eval e_hat = evaluate(s_hat);
  const Eval e_zero = evaluate(0.0);
  if (e_zero.chi2 <= e_hat.chi2) {
    s_hat = 0.0;
    e_hat = e_zero;
  }

  ResolutionFit out;
  out.sigma = s_hat;
  out.scale = e_hat.scale;
  out.chi2 = e_hat.chi2;
  out.dof = used - 2;
  const double red = out.dof > 0 ? out.chi2 / static_cast<double>(out.dof) : 0.0;
  const double delta = measured_sigma.empty() ? red : std::max(1.0, red);
  const double target = out.chi2 + delta;
  auto crossing = [&](double inside, double outside) {
    // chi2(inside) < target <= chi2(outside)
    for (int k = 0; k < 60; ++k) {
      const double m = 0.5 * (inside + outside);
      (evaluate(m).chi2 < target ? inside : outside) = m;
    }
    return 0.5 * (inside + outside);
  };
  double lo = 0.0;
  if (s_hat > 0.0 && evaluate(0.0).chi2 >= target) lo = crossing(s_hat, 0.0);
  double hi = kSigmaMax;
  if (evaluate(kSigmaMax).chi2 >= target) hi = crossing(s_hat, kSigmaMax);
  // A one-sided interval at the boundary uses the upper half-width only.
  out.sigma_error = s_hat > 0.0 && lo > 0.0 ? 0.5 * (hi - lo) : hi - s_hat;
  return out;
}

}  // namespace motrims::analysis
