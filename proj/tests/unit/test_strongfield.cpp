#include <cmath>
#include <numbers>
#include <random>
#include <variant>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "doctest.h"
#include "motrims/analysis.hpp"
#include "motrims/error.hpp"
#include "motrims/strongfield.hpp"
#include "motrims/units.hpp"

using namespace motrims;
using namespace motrims::strongfield;

namespace {

LaserPulse pulse_at(double intensity) {
  LaserPulse p;
  p.intensity_w_per_cm2 = intensity;
  return p;
}

// Textbook sin^2 vector potential, written out independently of PulseField.
double a_reference(const LaserPulse& p, double t) {
  const double w = p.omega_au();
  const double T = 2.0 * std::numbers::pi * p.cycles / w;
  if (t < 0.0 || t > T) return 0.0;
  const double env = std::sin(std::numbers::pi * t / T);
  return p.field_amplitude_au() / w * env * env * std::cos(w * t + p.cep_rad);
}

}  // namespace

TEST_CASE("pulse invariants") {
  auto p = pulse_at(1e10);
  CHECK_NOTHROW(p.validate());
  CHECK(p.vector_potential_amplitude_au() == doctest::Approx(9.372e-3).epsilon(1e-3));
  CHECK(norm(vector_potential(p, 0.0)) == 0.0);
  CHECK(norm(vector_potential(p, p.duration_au())) == doctest::Approx(0.0));
  CHECK(norm(vector_potential(p, -1.0)) == 0.0);
  CHECK(norm(electric_field(p, p.duration_au() + 5.0)) == 0.0);
  // carrier at its peak in the middle of the pulse when cep = -w T/2 mod 2 pi
  auto q = p;
  q.cep_rad = std::fmod(-q.omega_au() * q.duration_au() / 2.0, 2.0 * std::numbers::pi);
  CHECK(std::abs(vector_potential(q, q.duration_au() / 2.0).z) == doctest::Approx(q.vector_potential_amplitude_au()));

  auto bad = p;
  bad.cycles = 0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  bad = p;
  bad.polarization = {0.0, 0.0, 1.0 + 1e-9};
  CHECK_THROWS_AS(bad.validate(), DomainError);
  bad = p;
  bad.intensity_w_per_cm2 = -1.0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("A(t) matches the textbook form and E = -dA/dt by central differences") {
  const auto p = pulse_at(1e10);
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.001, p.duration_au() - 0.001);
  const double h = 1e-3;
  for (int i = 0; i < 100; ++i) {
    const double t = u(gen);
    CHECK(vector_potential(p, t).z == doctest::Approx(a_reference(p, t)).epsilon(1e-10).scale(1e-3));
    const double fd = -(vector_potential(p, t + h).z - vector_potential(p, t - h).z) / (2.0 * h);
    CHECK(std::abs(electric_field(p, t).z - fd) < 1e-8);
  }
  // E integrates to A(0) - A(T) = 0
  const double T = p.duration_au();
  boost::math::quadrature::gauss_kronrod<double, 61> gk;
  const double int_e = gk.integrate([&](double t) { return electric_field(p, t).z; }, 0.0, T, 12, 1e-12);
  CHECK(std::abs(int_e) < 1e-10);
}

TEST_CASE("action phase against adaptive Gauss-Kronrod") {
  const auto p = pulse_at(1e10);
  const auto s = InitialState::rb_5s();
  const Vec3 mom{0.0, 0.0, 0.19};
  const double T = p.duration_au();
  boost::math::quadrature::gauss_kronrod<double, 61> gk;
  auto integrand = [&](double t) {
    const double a = a_reference(p, t);
    return 0.5 * ((mom.x * mom.x) + (mom.y * mom.y) + (mom.z + a) * (mom.z + a)) + s.ip_au();
  };
  const double oracle = gk.integrate(integrand, 0.0, T, 15, 1e-13);
  CHECK(action_phase(p, s, mom, T) == doctest::Approx(oracle).epsilon(1e-6));
  CHECK(action_phase(p, s, mom, 0.0) == 0.0);
  CHECK_THROWS_AS(action_phase(p, s, mom, T * 1.01), DomainError);

  // zero field: (p^2/2 + Ip) t
  const auto dark = pulse_at(0.0);
  CHECK(action_phase(dark, s, mom, 1234.5) == doctest::Approx((0.5 * 0.19 * 0.19 + s.ip_au()) * 1234.5));

  // strictly increasing for random p
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    const Vec3 q{u(gen), u(gen), u(gen)};
    double prev = -1.0;
    for (int i = 0; i <= 200; ++i) {
      const double v = action_phase(pulse_at(1e12), s, q, T * i / 200.0);
      CHECK(v > prev);
      prev = v;
    }
  }
}

TEST_CASE("dipole element") {
  const auto s = InitialState::rb_5s();
  const Vec3 eps{0.0, 0.0, 1.0};
  CHECK(std::abs(dipole_element(s, {}, eps)) == 0.0);
  const Vec3 q{0.1, -0.2, 0.3};
  const auto d = dipole_element(s, q, eps);
  CHECK(dipole_element(s, -1.0 * q, eps).imag() == doctest::Approx(-d.imag()));
  CHECK(dipole_element(s, -1.0 * q, eps).real() == doctest::Approx(-d.real()));
  // maximum of |d| along eps at kappa / sqrt 5, by scan
  double best_q = 0.0, best = 0.0;
  for (int i = 1; i <= 20000; ++i) {
    const double qz = 1e-4 * i;
    const double v = std::abs(dipole_element(s, {0.0, 0.0, qz}, eps));
    if (v > best) best = v, best_q = qz;
  }
  CHECK(best_q == doctest::Approx(s.kappa_au() / std::sqrt(5.0)).epsilon(2e-4 / best_q));
  CHECK(s.kappa_au() * s.kappa_au() == doctest::Approx(2.0 * s.ip_au()).epsilon(1e-12));
}

TEST_CASE("scalar diagnostics") {
  // U_p[eV] = 9.33e-14 I lambda[um]^2
  CHECK(ponderomotive_energy(pulse_at(1e10)).ev == doctest::Approx(9.33e-14 * 1e10 * 0.64).epsilon(2e-3));
  CHECK(ponderomotive_energy(pulse_at(9e11)).ev == doctest::Approx(5.4e-2).epsilon(1e-2));
  CHECK(ponderomotive_energy(pulse_at(2e10)).ev == doctest::Approx(2.0 * ponderomotive_energy(pulse_at(1e10)).ev));

  const auto s = InitialState::rb_5s();
  CHECK(keldysh(s, pulse_at(2e10)).gamma == doctest::Approx(41.8).epsilon(2e-3));
  CHECK(keldysh(s, pulse_at(1e11)).gamma == doctest::Approx(18.7).epsilon(2e-3));
  CHECK(keldysh(s, pulse_at(9e11)).gamma == doctest::Approx(6.23).epsilon(2e-3));
  CHECK(keldysh(s, pulse_at(9e11)).regime == Regime::kMultiphoton);
  CHECK(keldysh(s, pulse_at(1e15)).regime == Regime::kTunneling);
  CHECK(keldysh(s, pulse_at(0.0)).infinite);

  const auto e3 = std::get<ExcessEnergy>(excess_energy(s, 3, pulse_at(1e10)));
  CHECK(e3.energy.ev == doctest::Approx(3 * 1.5498025 - 4.18).epsilon(1e-6));
  CHECK(e3.momentum_au == doctest::Approx(0.1857).epsilon(5e-4));
  const auto e2 = std::get<ExcessEnergy>(excess_energy(InitialState::rb_5p(), 2, pulse_at(1e10)));
  CHECK(e2.energy.ev == doctest::Approx(0.5196).epsilon(1e-3));
  const auto below = excess_energy(s, 2, pulse_at(1e10));
  REQUIRE(std::holds_alternative<BelowThreshold>(below));
  CHECK(std::get<BelowThreshold>(below).minimum_photons == 3);
  const auto shifted = std::get<ExcessEnergy>(excess_energy(s, 3, pulse_at(1e12), true));
  CHECK(shifted.includes_ponderomotive_shift);
  CHECK(shifted.energy.ev == doctest::Approx(3 * 1.5498025 - 4.18 - ponderomotive_energy(pulse_at(1e12)).ev));
}

TEST_CASE("amplitude: zero field, symmetry, convergence") {
  const auto s = InitialState::rb_5s();
  CHECK(std::abs(amplitude(pulse_at(0.0), s, {0.0, 0.0, 0.2}).value) == 0.0);

  const auto p = pulse_at(1e10);
  const AmplitudeEngine engine(p, s);
  QuadratureOptions fine;
  fine.steps_per_cycle = 400;
  const AmplitudeEngine finer(p, s, fine);
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  for (int i = 0; i < 30; ++i) {
    const Vec3 q{u(gen), u(gen), u(gen)};
    const double a = std::abs(engine.evaluate(q).value);
    const double b = std::abs(engine.evaluate({q.x, q.y, -q.z}).value);
    CHECK(std::abs(a - b) <= 1e-3 * std::max(a, b));
    const double c = std::abs(finer.evaluate(q).value);
    CHECK(std::abs(a - c) <= 1e-4 * c + 1e-30);
  }
  // |M| along the polarization axis peaks near the 3-photon ring
  double best = 0.0, best_p = 0.0;
  for (int i = 1; i <= 300; ++i) {
    const double pz = 0.001 * i;
    const double v = std::abs(engine.evaluate({0.0, 0.0, pz}).value);
    if (v > best) best = v, best_p = pz;
  }
  CHECK(best_p == doctest::Approx(0.186).epsilon(0.03));
}

TEST_CASE("spectrum maps") {
  const auto p = pulse_at(1e10);
  const auto grid = MomentumGrid::plane_zx(0.3, 31);
  const auto map = spectrum(p, InitialState::rb_5s(), grid, {}, 1);
  const auto map4 = spectrum(p, InitialState::rb_5s(), grid, {}, 4);
  CHECK(map.values == map4.values);
  for (double v : map.values) CHECK(v >= 0.0);
  CHECK(map.at(15, 0, 15) == 0.0);  // p = 0
  for (std::size_t ix = 0; ix < 31; ++ix) {
    for (std::size_t iz = 0; iz < 31; ++iz) {
      const double a = map.at(ix, 0, iz), b = map.at(ix, 0, 30 - iz);
      CHECK(std::abs(a - b) <= 1e-3 * std::max(a, b));
    }
  }
  CHECK(map.meta.momentum_convention == "p_ion=-p_electron");

  auto n = map;
  normalize(n);
  CHECK(n.riemann_sum() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(n.meta.normalized);

  auto zero = map;
  std::fill(zero.values.begin(), zero.values.end(), 0.0);
  CHECK_THROWS_AS(normalize(zero), DomainError);

  MomentumGrid bad = grid;
  bad.axes[0].max = bad.axes[0].min;
  CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("energy rings sit at sqrt(2(n w - Ip))") {
  // Angle-integrated radial spectrum from the axially symmetric amplitude.
  // At 1e10 the 4-photon ring (~1e-4 of the main one) hides under the sin^2
  // envelope pedestal; 1e11 lifts it clear.
  const auto p = pulse_at(1e11);
  const auto s = InitialState::rb_5s();
  const AmplitudeEngine engine(p, s);
  const double dp = 0.0025;
  Profile radial;
  for (double r = 0.1; r <= 0.45 + 1e-12; r += dp) {
    double acc = 0.0;
    const int nt = 48;  // midpoint in cos(theta) over [0, 1]; symmetric half
    for (int k = 0; k < nt; ++k) {
      const double c = (k + 0.5) / nt;
      const double par = r * c, perp2 = r * r * (1.0 - c * c);
      acc += std::norm(engine.evaluate(par, perp2).value);
    }
    radial.x.push_back(r);
    radial.y.push_back(r * r * r * acc);  // r^2 dr measure times w = r |M|^2
  }
  // Strongest point between neighbouring ring midpoints; the weak outer ring
  // carries interference ripple, so "any local maximum" would be too lax.
  const double w = p.omega_au();
  auto ring = [&](int n) { return std::sqrt(2.0 * (n * w - s.ip_au())); };
  for (int n : {3, 4}) {
    const double lo = n == 3 ? 0.0 : 0.5 * (ring(3) + ring(4));
    const double hi = n == 3 ? 0.5 * (ring(3) + ring(4)) : 0.45;
    double best = -1.0, at = 0.0;
    for (std::size_t i = 0; i < radial.size(); ++i) {
      if (radial.x[i] < lo || radial.x[i] > hi) continue;
      if (radial.y[i] > best) best = radial.y[i], at = radial.x[i];
    }
    CHECK_MESSAGE(std::abs(at - ring(n)) <= dp, "ring n=", n, " expected ", ring(n), " found ", at);
  }
}

TEST_CASE("recoil sampler") {
  const auto map = spectrum(pulse_at(1e10), InitialState::rb_5s(), MomentumGrid::plane_zx(0.3, 21));
  CHECK(sample_recoil_momenta(map, 0, 1).empty());
  const auto a = sample_recoil_momenta(map, 2000, 7, 1);
  const auto b = sample_recoil_momenta(map, 2000, 7, 3);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].x == b[i].x);
    CHECK(a[i].z == b[i].z);
    CHECK(a[i].y == 0.0);
    CHECK(std::abs(a[i].x) <= 0.3);
  }
  const auto c = sample_recoil_momenta(map, 2000, 8, 1);
  CHECK(c[0].z != a[0].z);

  auto zero = map;
  std::fill(zero.values.begin(), zero.values.end(), 0.0);
  CHECK_THROWS_AS(RecoilSampler{zero}, DomainError);

  // cell probabilities sum to one
  const RecoilSampler sampler(map);
  double sum = 0.0;
  for (double v : sampler.cell_probabilities()) sum += v;
  CHECK(sum == doctest::Approx(1.0));
}

TEST_CASE("channel parsing and incoherent sum") {
  CHECK(parse_channel("5s") == Channel::k5s);
  CHECK(parse_channel("Rb-5P") == Channel::k5p);
  CHECK_THROWS_AS(parse_channel("4d"), DomainError);
  const auto g = MomentumGrid::plane_zx(0.3, 11);
  const auto m1 = spectrum(pulse_at(1e10), InitialState::rb_5s(), g);
  const auto m2 = spectrum(pulse_at(1e10), InitialState::rb_5p(), g);
  const std::vector<SpectrumMap> maps{m1, m2};
  const std::vector<double> w{0.75, 0.25};
  const auto sum = incoherent_sum(maps, w);
  for (std::size_t i = 0; i < sum.values.size(); ++i) {
    CHECK(sum.values[i] == doctest::Approx(0.75 * m1.values[i] + 0.25 * m2.values[i]));
  }
  const std::vector<double> neg{1.0, -1.0};
  CHECK_THROWS_AS(incoherent_sum(maps, neg), DomainError);
}
