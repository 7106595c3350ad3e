#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "motrims/analysis.hpp"
#include "motrims/error.hpp"
#include "motrims/io/config.hpp"
#include "motrims/synthetic.hpp"
#include "motrims/units.hpp"
#include "pipeline.hpp"

using namespace motrims;
using namespace motrims::analysis;
using apparatus::BornIon;
using apparatus::DetectorModel;
using apparatus::IonSpecies;
using apparatus::SpectrometerGeometry;

namespace {

Profile gaussian_profile(double lo, double hi, std::size_t n, double a, double mu, double sigma, double c = 0.0) {
  Profile p;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    p.x.push_back(x);
    p.y.push_back(a * std::exp(-0.5 * (x - mu) * (x - mu) / (sigma * sigma)) + c);
  }
  return p;
}

double trapezoid(const Profile& p) {
  double s = 0.0;
  for (std::size_t i = 1; i < p.size(); ++i) s += 0.5 * (p.y[i] + p.y[i - 1]) * (p.x[i] - p.x[i - 1]);
  return s;
}

DetectorModel noiseless() {
  DetectorModel d;
  d.position_sigma_mm = 0.0;
  d.time_sigma_ns = 0.0;
  return d;
}

std::vector<apparatus::DetectorEvent> simulate_ions(const std::vector<BornIon>& ions, const DetectorModel& d,
                                                    std::uint64_t seed = 1) {
  return apparatus::simulate_events({}, d, IonSpecies::rb85(), ions, seed).events;
}

io::RunConfig small_run(std::size_t events) {
  io::RunConfig c;
  c.run.events = events;
  c.analysis.sample_half_range_au = 0.3;
  c.analysis.sample_nodes = 31;
  c.channels.enable_5p = false;
  c.pulse.intensity_w_per_cm2 = 1e10;
  return c;
}

}  // namespace

TEST_CASE("reconstruction round trip, noise free") {
  const SpectrometerGeometry g;
  const auto rb = IonSpecies::rb85();
  const Reconstructor rec(g, rb, calibration_from_geometry(g, rb, noiseless()));
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::vector<BornIon> ions;
  for (int i = 0; i < 10000; ++i) ions.push_back({{}, {u(gen), u(gen), u(gen)}, strongfield::Channel::k5s});
  const auto events = simulate_ions(ions, noiseless());
  REQUIRE(events.size() == ions.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto m = rec.reconstruct(events[i]);
    for (int a = 0; a < 3; ++a) worst = std::max(worst, std::abs(m.p_au[a] - ions[i].momentum_au[a]));
    CHECK(m.event_id == events[i].id);
    CHECK(m.channel == strongfield::Channel::k5s);
  }
  CHECK(worst < 1e-3);

  // zero momentum is the fixed point
  const auto zero = simulate_ions({BornIon{}}, noiseless());
  const auto m0 = rec.reconstruct(zero[0]);
  CHECK(std::abs(m0.p_au.z) < 1e-6);
  CHECK(std::abs(m0.p_au.x) < 1e-12);

  // linear cross check within 1 %
  for (double pz : {-0.5, -0.25, 0.1, 0.5}) {
    const auto ev = simulate_ions({BornIon{{}, {0.0, 0.0, pz}, strongfield::Channel::k5s}}, noiseless());
    const double exact = rec.reconstruct(ev[0]).p_au.z;
    CHECK(std::abs(rec.linear_pz_au(ev[0].t_us) - exact) <= 0.01 * std::abs(exact));
  }

  apparatus::DetectorEvent bad;
  bad.t_us = 0.0;
  CHECK_THROWS_AS(rec.reconstruct(bad), DataError);
  Calibration silly;
  silly.t0_us = 1.0;  // no birth offset reaches this
  CHECK_THROWS_AS(Reconstructor(g, rb, silly), NumericalError);
}

TEST_CASE("p_z noise adds qE sigma_t and blur in quadrature") {
  const SpectrometerGeometry g;
  const auto rb = IonSpecies::rb85();
  DetectorModel d;
  d.time_sigma_ns = 5.0;
  d.momentum_blur_au = {0.0, 0.0, 0.015};
  const std::vector<BornIon> ions(20000, BornIon{{}, {0.0, 0.0, 0.1}, strongfield::Channel::k5s});
  const auto events = simulate_ions(ions, d, 3);
  const Reconstructor rec(g, rb, calibration_from_geometry(g, rb, d));
  double s = 0.0, s2 = 0.0;
  for (const auto& e : events) {
    const double pz = rec.reconstruct(e).p_au.z;
    s += pz;
    s2 += pz * pz;
  }
  const double n = static_cast<double>(events.size());
  const double sd = std::sqrt(s2 / n - (s / n) * (s / n));
  const double expect = std::hypot(apparatus::timing_momentum_sensitivity_au(g, rb, 5.0), 0.015);
  CHECK(sd == doctest::Approx(expect).epsilon(0.05));
}

TEST_CASE("calibration") {
  const SpectrometerGeometry g;
  const auto rb = IonSpecies::rb85();
  const double t_true = apparatus::time_of_flight_us(g, rb, 0.0, 0.0);

  // noiseless zero-momentum cluster
  const auto cluster = simulate_ions(std::vector<BornIon>(200), noiseless());
  CHECK(calibrate(cluster).t0_us == doctest::Approx(t_true).epsilon(1e-12));
  CHECK_THROWS_AS(calibrate(std::span(cluster).first(99)), DataError);

  // symmetric double peak at +-0.186 with thermal-like spread
  std::mt19937_64 gen(4);
  std::normal_distribution<double> n(0.0, 0.02);
  std::bernoulli_distribution side(0.5);
  std::vector<BornIon> ions;
  for (int i = 0; i < 20000; ++i) {
    const double pz = (side(gen) ? 0.186 : -0.186) + n(gen);
    ions.push_back({{}, {n(gen), n(gen), pz}, strongfield::Channel::k5s});
  }
  const DetectorModel d;
  const auto events = simulate_ions(ions, d, 5);
  const double qe_ns = apparatus::timing_momentum_sensitivity_au(g, rb, 1.0);
  for (auto est : {T0Estimator::kMirrorSymmetry, T0Estimator::kKdeMode}) {
    CalibrateOptions o;
    o.estimator = est;
    if (est == T0Estimator::kKdeMode) continue;  // the mode sits on one of the peaks by design
    const auto cal = calibrate(events, o);
    // within qE * delta, delta = 2e-3 a.u.
    CHECK(std::abs(cal.t0_us - t_true) * 1e3 <= 2e-3 / qe_ns);
  }

  // mode estimator on a single-peaked source
  std::vector<BornIon> mono;
  for (int i = 0; i < 20000; ++i) mono.push_back({{}, {0.0, 0.0, n(gen)}, strongfield::Channel::k5s});
  CalibrateOptions mode;
  mode.estimator = T0Estimator::kKdeMode;
  CHECK(std::abs(calibrate(simulate_ions(mono, d, 6), mode).t0_us - t_true) * 1e3 <= 5e-3 / qe_ns);

  // detector centre offset by 1 mm
  DetectorModel off;
  off.axis_x_mm = 1.0;
  const auto shifted = simulate_ions(std::vector<BornIon>(10000), off, 7);
  const auto c = calibrate(shifted);
  CHECK(std::abs(c.center_x_mm - 1.0) <= 0.02);
  CHECK(std::abs(c.center_y_mm) <= 0.02);
  CHECK(c.center_err_x_mm == doctest::Approx(0.1 / 100.0).epsilon(0.1));
}

TEST_CASE("histograms") {
  std::vector<MomentumRecord> recs;
  std::mt19937_64 gen(1);
  std::normal_distribution<double> n(0.0, 0.2);
  for (int i = 0; i < 5000; ++i) recs.push_back({{n(gen), n(gen), n(gen)}, static_cast<std::uint64_t>(i), {}});

  const HistAxis ax{Component::kPz, -0.5, 0.5, 40};
  const auto empty = histogram({}, ax);
  CHECK(empty.total() == 0);
  CHECK(empty.counts.size() == 40);

  const auto inf = histogram(recs, {Component::kPz, -100.0, 100.0, 10}, Slice::cylinder(1e9));
  CHECK(inf.total() == recs.size());

  const auto h = histogram(recs, ax, Slice::cylinder(0.1));
  CHECK(h.total() <= recs.size());
  CHECK(h.slice == Slice::cylinder(0.1).describe());
  auto shuffled = recs;
  std::shuffle(shuffled.begin(), shuffled.end(), gen);
  CHECK(histogram(shuffled, ax, Slice::cylinder(0.1)).counts == h.counts);

  // merge is associative and matches filling at once
  auto a = histogram(std::span(recs).first(2000), ax);
  const auto b = histogram(std::span(recs).subspan(2000), ax);
  a.merge(b);
  CHECK(a.counts == histogram(recs, ax).counts);
  CHECK_THROWS_AS(a.merge(histogram(recs, {Component::kPx, -0.5, 0.5, 40})), DataError);

  const auto h2 = histogram2d(recs, {Component::kPz, -0.5, 0.5, 20}, {Component::kPx, -0.5, 0.5, 30}, Slice::slab(0.1));
  std::uint64_t slab = 0;
  for (const auto& r : recs) {
    if (std::abs(r.p_au.y) < 0.1 && std::abs(r.p_au.z) < 0.5 && std::abs(r.p_au.x) < 0.5) ++slab;
  }
  CHECK(h2.total() == slab);

  CHECK(ax.locate(0.5) == std::nullopt);
  CHECK(ax.locate(-0.5) == std::size_t{0});
  const auto sig = h.poisson_sigma();
  for (std::size_t i = 0; i < sig.size(); ++i) CHECK(sig[i] == std::sqrt(std::max<double>(h.counts[i], 1.0)));
}

TEST_CASE("double peak survives the full pipeline") {
  auto cfg = small_run(100000);
  const auto cubes = testing::sample_cubes(cfg);
  const auto events = testing::simulate(cfg, cubes).events;
  const auto recs = testing::reconstruct(cfg, events, true);
  const auto h = histogram(recs, {Component::kPz, -0.4, 0.4, 40}, Slice::cylinder(0.1));
  // 5 % floor keeps Poisson wiggles in the central valley out
  const auto peaks = find_maxima(h.as_profile(), 0.05);
  REQUIRE(peaks.size() == 2);
  CHECK(std::abs(peaks[0] + 0.18) <= 0.02);
  CHECK(std::abs(peaks[1] - 0.18) <= 0.02);
}

TEST_CASE("Gaussian fit") {
  const auto p = gaussian_profile(-2.0, 2.5, 91, 1.0, 0.3, 0.5, 0.1);
  for (double f : {0.5, 0.8, 1.0, 1.3, 1.5}) {
    GaussianFitOptions o;
    o.initial = GaussianParams{f * 1.0, 0.3 + (f - 1.0) * 0.5, f * 0.5, f * 0.1};
    const auto fit = fit_gaussian_1d(p.x, p.y, {}, o);
    CHECK(fit.params.amplitude == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(fit.params.center == doctest::Approx(0.3).epsilon(1e-6));
    CHECK(fit.params.sigma == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(fit.params.offset == doctest::Approx(0.1).epsilon(1e-6));
  }
  const auto fit = fit_gaussian_1d(p.x, p.y);
  CHECK(fit.fwhm() == doctest::Approx(0.5 * units::kGaussianFwhmPerSigma).epsilon(1e-6));
  CHECK(fit(0.3) == doctest::Approx(1.1));

  // Poisson noise: centre within 3 standard errors, over repetitions
  std::mt19937_64 gen(11);
  int outside = 0;
  for (int rep = 0; rep < 50; ++rep) {
    const auto truth = gaussian_profile(-1.0, 1.0, 60, 10000.0, 0.05, 0.2, 10.0);
    std::vector<double> y, s;
    for (double v : truth.y) {
      std::poisson_distribution<long> pd(v);
      y.push_back(static_cast<double>(pd(gen)));
      s.push_back(std::sqrt(std::max(y.back(), 1.0)));
    }
    const auto f = fit_gaussian_1d(truth.x, y, s);
    if (std::abs(f.params.center - 0.05) > 3.0 * f.errors.center) ++outside;
  }
  CHECK(outside <= 2);

  const std::vector<double> xs{0, 1, 2, 3, 4, 5}, flat(6, 2.0);
  CHECK_THROWS_AS(fit_gaussian_1d(xs, flat), DataError);
  CHECK_THROWS_AS(fit_gaussian_1d(std::span(xs).first(4), std::span(flat).first(4)), DataError);
}

TEST_CASE("Gaussian convolution") {
  const auto g30 = gaussian_profile(-2.0, 2.0, 801, 1.0, 0.0, 0.30 / units::kGaussianFwhmPerSigma);
  CHECK(convolve_gaussian(g30, 0.0).y == g30.y);
  const auto c = convolve_gaussian(g30, 0.12 / units::kGaussianFwhmPerSigma);
  CHECK(trapezoid(c) == doctest::Approx(trapezoid(g30)).epsilon(1e-6));
  CHECK(half_max_width(c) == doctest::Approx(std::hypot(0.30, 0.12)).epsilon(1e-3));
  CHECK(std::hypot(0.30, 0.12) == doctest::Approx(0.323).epsilon(1e-3));

  // commutativity on an arbitrary curve
  Profile odd;
  for (int i = 0; i <= 400; ++i) {
    const double x = -1.0 + 0.005 * i;
    odd.x.push_back(x);
    odd.y.push_back(std::exp(-40 * (x - 0.2) * (x - 0.2)) + 0.5 * std::exp(-200 * (x + 0.3) * (x + 0.3)));
  }
  const auto ab = convolve_gaussian(convolve_gaussian(odd, 0.03), 0.07);
  const auto ba = convolve_gaussian(convolve_gaussian(odd, 0.07), 0.03);
  for (std::size_t i = 0; i < ab.size(); ++i) CHECK(ab.y[i] == doctest::Approx(ba.y[i]).epsilon(1e-6).scale(1.0));
  CHECK(trapezoid(ab) == doctest::Approx(trapezoid(odd)).epsilon(1e-6));

  Profile uneven{{0.0, 0.1, 0.3, 0.4}, {1, 2, 3, 4}};
  CHECK_THROWS_AS(convolve_gaussian(uneven, 0.1), DataError);
}

TEST_CASE("maxima and widths") {
  const auto two = [] {
    Profile p;
    for (int i = 0; i <= 200; ++i) {
      const double x = -0.5 + 0.005 * i;
      p.x.push_back(x);
      p.y.push_back(std::exp(-200 * (x - 0.18) * (x - 0.18)) + std::exp(-200 * (x + 0.18) * (x + 0.18)) +
                    0.005 * std::exp(-2000 * x * x));
    }
    return p;
  }();
  const auto peaks = find_maxima(two, 0.01);
  REQUIRE(peaks.size() == 2);
  CHECK(peaks[0] == doctest::Approx(-0.18).epsilon(1e-3));
  CHECK(peaks[1] == doctest::Approx(0.18).epsilon(1e-3));
  CHECK(find_maxima(two, 0.001).size() == 3);
  const Profile plateau{{0, 1, 2, 3, 4}, {0, 1, 1, 1, 0}};
  CHECK(find_maxima(plateau, 0.5).size() == 1);
  CHECK_THROWS_AS(half_max_width(Profile{{0, 1, 2}, {0, 1, 1}}), DataError);
}

TEST_CASE("resolution fit") {
  const auto theory = [] {
    Profile p;
    for (int i = 0; i <= 200; ++i) {
      const double x = -0.5 + 0.005 * i;
      p.x.push_back(x);
      p.y.push_back(std::exp(-2000 * (std::abs(x) - 0.18) * (std::abs(x) - 0.18)));
    }
    return p;
  }();
  auto measured = convolve_gaussian(theory, 0.051);
  for (auto& v : measured.y) v *= 37.0;
  const auto fit = fit_resolution(theory, measured);
  CHECK(fit.sigma == doctest::Approx(0.051).epsilon(1e-3 / 0.051));
  CHECK(fit.scale == doctest::Approx(37.0).epsilon(1e-3));
  CHECK(fit.fwhm() == doctest::Approx(0.051 * units::kGaussianFwhmPerSigma).epsilon(1e-3));

  const auto self = fit_resolution(theory, theory);
  CHECK(self.sigma <= self.sigma_error + 1e-9);

  // coarser measurement grid, resampled by interpolation
  Profile coarse;
  for (std::size_t i = 0; i < measured.size(); i += 4) {
    coarse.x.push_back(measured.x[i]);
    coarse.y.push_back(measured.y[i]);
  }
  CHECK(fit_resolution(theory, coarse).sigma == doctest::Approx(0.051).epsilon(0.02));

  Profile apart;
  for (int i = 0; i < 20; ++i) {
    apart.x.push_back(2.0 + 0.01 * i);
    apart.y.push_back(1.0);
  }
  CHECK_THROWS_AS(fit_resolution(theory, apart), DataError);
}

TEST_CASE("thermometry from expansion") {
  const std::vector<double> times{1, 2, 3, 4, 5, 6, 7, 8};
  const auto s = synthetic::expansion_series(130.0, units::kRb85MassAmu, 0.3, times, 0.0, 1);
  const auto fit = temperature_from_expansion(s, units::kRb85MassAmu);
  CHECK(fit.temperature_uk == doctest::Approx(130.0).epsilon(1e-9));
  // sqrt(kB T / m) by hand
  const double v = std::sqrt(units::kBoltzmannJoulePerKelvin * 130e-6 / (units::kRb85MassAmu * units::kAtomicMassUnitKg));
  CHECK(fit.speed_m_s == doctest::Approx(v).epsilon(1e-9));
  CHECK(v == doctest::Approx(0.113).epsilon(5e-3));
  CHECK(fit.sigma0_mm == doctest::Approx(0.3).epsilon(1e-9));

  std::vector<ExpansionPoint> flat;
  for (double t : times) flat.push_back({t, 0.4, 0.0});
  CHECK(temperature_from_expansion(flat, units::kRb85MassAmu).temperature_uk == doctest::Approx(0.0).scale(1.0));
  CHECK_THROWS_AS(temperature_from_expansion(std::span(flat).first(2), units::kRb85MassAmu), DataError);
  std::vector<ExpansionPoint> shrinking;
  for (double t : times) shrinking.push_back({t, 1.0 - 0.1 * t, 0.0});
  CHECK_THROWS_AS(temperature_from_expansion(shrinking, units::kRb85MassAmu), DataError);
}

TEST_CASE("scan profile") {
  const auto p = gaussian_profile(-1.6, 1.6, 41, 2e4, 0.0, 1.22 / units::kGaussianFwhmPerSigma);
  const auto fit = scan_profile(p.x, p.y);
  CHECK(fit.fwhm_mm == doctest::Approx(1.22).epsilon(1e-6));
  const std::vector<double> flat(41, 100.0);
  CHECK_THROWS_AS(scan_profile(p.x, flat), Error);
}

TEST_CASE("absorption imaging") {
  CHECK(resonant_cross_section_cm2(780.0) == doctest::Approx(3.0 * 780e-7 * 780e-7 / (2.0 * std::numbers::pi)));
  CHECK(resonant_cross_section_cm2(780.0) == doctest::Approx(2.905e-9).epsilon(1e-3));

  Image ref{8, 8, std::vector<double>(64, 1000.0)};
  Image dark{8, 8, std::vector<double>(64, 50.0)};
  const auto none = absorption_analysis(ref, ref, dark);
  CHECK(none.atom_number == 0.0);
  for (double v : none.optical_density.pixels) CHECK(v == 0.0);

  auto dead = ref;
  dead.at(3, 3) = 10.0;  // below dark
  const auto masked = absorption_analysis(dead, ref, dark);
  CHECK(masked.masked_count == 1);
  CHECK(masked.masked[3 * 8 + 3] == 1);

  Image small{4, 4, std::vector<double>(16, 1.0)};
  CHECK_THROWS_AS(absorption_analysis(small, ref, dark), DataError);

  // Noiseless forward image: 2D Gaussian column density holding 1.5e6 atoms.
  {
    const double n_atoms = 1.5e6, sy = 0.467, sz = 0.297, pix_mm = 0.01;  // widths in mm
    const double sigma0 = resonant_cross_section_cm2(780.0);
    const std::size_t n = 400;
    Image with{n, n, std::vector<double>(n * n)}, without{n, n, std::vector<double>(n * n, 4000.0)},
        dk{n, n, std::vector<double>(n * n, 0.0)};
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) {
        const double z = (r - 199.5) * pix_mm, y = (c - 199.5) * pix_mm;
        const double col = n_atoms / (2.0 * std::numbers::pi * sy * sz * 1e-2) *
                           std::exp(-0.5 * (y * y / (sy * sy) + z * z / (sz * sz)));  // atoms / cm^2
        with.at(r, c) = 4000.0 * std::exp(-sigma0 * col);
      }
    }
    AbsorptionOptions o;
    o.pixel_size_um = 10.0;
    const auto res = absorption_analysis(with, without, dk, o);
    CHECK(res.atom_number == doctest::Approx(n_atoms).epsilon(0.03));
    CHECK(res.atom_number == doctest::Approx(n_atoms).epsilon(1e-4));
    REQUIRE(res.fit_rows.has_value());
    REQUIRE(res.fit_columns.has_value());
    CHECK(res.fit_rows->fwhm() == doctest::Approx(sz * units::kGaussianFwhmPerSigma).epsilon(1e-3));
    CHECK(res.fit_columns->fwhm() == doctest::Approx(sy * units::kGaussianFwhmPerSigma).epsilon(1e-3));
  }

  // Shot-noisy synthetic images. Clamping OD at 0 rectifies background noise
  // into a positive bias of ~0.4 sd per empty pixel, so this needs deep wells.
  auto target = ensemble::TargetEnsemble::mot3d();
  target.fwhm_mm.z = 0.7;
  const auto img = synthetic::absorption_images(target, 10.0, 256, 1e6, 100.0, 780.0, 3);
  AbsorptionOptions o;
  o.pixel_size_um = 10.0;
  const auto res = absorption_analysis(img.with_atoms, img.without_atoms, img.dark, o);
  CHECK(img.true_atom_number == doctest::Approx(1.5e6).epsilon(0.15));
  CHECK(res.atom_number == doctest::Approx(img.true_atom_number).epsilon(0.03));
  REQUIRE(res.fit_rows.has_value());
  CHECK(res.fit_rows->fwhm() == doctest::Approx(0.7).epsilon(0.05));  // rows follow z
  // at 4000 counts the same cloud reads high
  const auto dim = synthetic::absorption_images(target, 10.0, 256, 4000.0, 100.0, 780.0, 3);
  CHECK(absorption_analysis(dim.with_atoms, dim.without_atoms, dim.dark, o).atom_number > res.atom_number);
}

TEST_CASE("p_x width grows with the x temperature") {
  // Everything but T_x fixed. Below ~10 mK the recoil projection swamps the
  // thermal part and the ordering drowns in binning noise.
  auto cfg = small_run(30000);
  const auto cubes = testing::sample_cubes(cfg);
  double prev = 0.0;
  for (double tx : {130.0, 3e4, 1e5, 3e5}) {
    cfg.target.temperature_uk.x = tx;
    const auto recs = testing::reconstruct(cfg, testing::simulate(cfg, cubes).events, true);
    const double w = half_max_width(histogram(recs, {Component::kPx, -0.8, 0.8, 80}).as_profile());
    CHECK(w > prev);
    prev = w;
  }
}
