#include <cmath>
#include <random>
#include <variant>

#include "doctest.h"
#include "motrims/apparatus.hpp"
#include "motrims/error.hpp"
#include "motrims/units.hpp"

using namespace motrims;
using namespace motrims::apparatus;

namespace {

// SI evaluation of the uniform-field + drift flight time, kept apart from the
// library's a.u. path.
double tof_si_us(double pz_au, double z_birth_mm, double field_v_cm = 0.5, double accel_mm = 85.0,
                 double drift_mm = 670.0) {
  const double e = 1.602176634e-19;
  const double m = units::kRb85MassAmu * units::kAtomicMassUnitKg;
  const double a = e * field_v_cm * 100.0 / m;
  const double v = pz_au * units::kMomentumAuSi / m;
  const double s = (accel_mm - z_birth_mm) * 1e-3;
  const double vf = std::sqrt(v * v + 2.0 * a * s);
  return ((vf - v) / a + drift_mm * 1e-3 / vf) * 1e6;
}

DetectorModel noiseless() {
  DetectorModel d;
  d.position_sigma_mm = 0.0;
  d.time_sigma_ns = 0.0;
  return d;
}

}  // namespace

TEST_CASE("time of flight against the SI closed form") {
  const SpectrometerGeometry g;
  const auto rb = IonSpecies::rb85();
  for (double pz : {-0.5, -0.19, 0.0, 0.07, 0.5}) {
    for (double zb : {-2.0, 0.0, 1.5}) {
      CHECK(time_of_flight_us(g, rb, pz, zb) == doctest::Approx(tof_si_us(pz, zb)).epsilon(1e-10));
    }
  }
  // 270 us at the default field, not milliseconds
  CHECK(time_of_flight_us(g, rb, 0.0, 0.0) == doctest::Approx(270.29).epsilon(1e-4));
  CHECK_THROWS_AS(time_of_flight_us(g, rb, 0.0, 85.0), DomainError);
  CHECK_THROWS_AS(time_of_flight_us(g, rb, 0.0, 90.0), DomainError);
}

TEST_CASE("TOF is strictly decreasing in p_z and linear near zero") {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> field(0.1, 5.0), mass(1.0, 250.0);
  for (int k = 0; k < 20; ++k) {
    SpectrometerGeometry g;
    g.field_v_per_cm = field(gen);
    const IonSpecies sp{mass(gen), 1};
    double prev = std::numeric_limits<double>::infinity();
    for (int i = -50; i <= 50; ++i) {
      const double t = time_of_flight_au(g, sp, 0.02 * i, 0.0);
      CHECK(t < prev);
      prev = t;
    }
  }
  const SpectrometerGeometry g;
  const auto rb = IonSpecies::rb85();
  const double t0 = time_of_flight_au(g, rb, 0.0, 0.0);
  const double qe = extraction_force_au(g, rb);
  for (double pz : {-0.5, -0.2, 0.1, 0.5}) {
    const double exact = time_of_flight_au(g, rb, pz, 0.0) - t0;
    const double linear = -pz / qe;
    CHECK(std::abs(exact - linear) <= 0.01 * std::abs(linear));
  }
  // exact slope against central differences
  const double h = 1e-5;
  const double fd = (time_of_flight_au(g, rb, 0.1 + h, 0.0) - time_of_flight_au(g, rb, 0.1 - h, 0.0)) / (2 * h);
  CHECK(time_of_flight_slope_au(g, rb, 0.1, 0.0) == doctest::Approx(fd).epsilon(1e-6));
}

TEST_CASE("timing sensitivity qE * 1 ns") {
  // E = 0.5 V/cm = 9.7235e-11 a.u.; 1 ns = 4.1341e7 a.u.
  const double expect = 0.5 * 100.0 / units::kFieldAuVoltPerMeter * 1e-9 / units::kTimeAuSeconds;
  CHECK(timing_momentum_sensitivity_au({}, IonSpecies::rb85(), 1.0) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(expect == doctest::Approx(4.02e-3).epsilon(1e-3));
  CHECK(timing_momentum_sensitivity_au({}, {units::kRb85MassAmu, 2}, 1.0) == doctest::Approx(2 * expect));
}

TEST_CASE("transverse hit") {
  const auto rb = IonSpecies::rb85();
  auto h = transverse_hit(rb, 0.0, 0.0, 0.0, 0.0, 270.0);
  CHECK(h.x_mm == 0.0);
  CHECK(h.y_mm == 0.0);
  // v = 0.19 a.u. / 154785 m_e * 2.1877e6 m/s = 2.686 m/s
  h = transverse_hit(rb, 0.19, 0.0, 0.0, 0.0, 270.29);
  const double v = 0.19 * units::kVelocityAuMetersPerSecond / units::amu_to_au(units::kRb85MassAmu);
  CHECK(v == doctest::Approx(2.686).epsilon(1e-3));
  CHECK(h.x_mm == doctest::Approx(v * 270.29e-6 * 1e3).epsilon(1e-12));
  const auto h2 = transverse_hit(rb, 0.19, -0.3, 0.0, 0.0, 540.58);
  CHECK(h2.x_mm == doctest::Approx(2.0 * h.x_mm));
  CHECK(transverse_hit(rb, 0.0, 0.0, 1.5, -2.0, 100.0).y_mm == -2.0);
  CHECK_THROWS_AS(transverse_hit(rb, 0.1, 0.1, 0.0, 0.0, 0.0), DomainError);
}

TEST_CASE("simulate_event basics") {
  const SpectrometerGeometry g;
  const auto rb = IonSpecies::rb85();
  std::mt19937_64 rng(3);
  auto out = simulate_event(g, noiseless(), rb, BornIon{}, rng);
  REQUIRE(std::holds_alternative<DetectorEvent>(out));
  const auto& ev = std::get<DetectorEvent>(out);
  CHECK(ev.x_mm == 0.0);
  CHECK(ev.y_mm == 0.0);
  CHECK(ev.t_us == doctest::Approx(time_of_flight_us(g, rb, 0.0, 0.0)));
  REQUIRE(ev.truth.has_value());
  CHECK(ev.truth->species.mass_amu == rb.mass_amu);

  auto d = noiseless();
  d.efficiency = 0.0;
  for (int i = 0; i < 100; ++i) {
    auto r = simulate_event(g, d, rb, BornIon{}, rng);
    REQUIRE(std::holds_alternative<Rejection>(r));
    CHECK(std::get<Rejection>(r) == Rejection::kEfficiencyLoss);
  }
  d = noiseless();
  d.window_us = 100.0;
  CHECK(std::get<Rejection>(simulate_event(g, d, rb, BornIon{}, rng)) == Rejection::kOutsideWindow);
  // 40 mm radius at 270 us needs |p| ~ 10 a.u.
  const BornIon fast{{}, {12.0, 0.0, 0.0}, strongfield::Channel::k5s};
  d.efficiency = 0.0;
  CHECK(std::get<Rejection>(simulate_event(g, d, rb, fast, rng)) == Rejection::kOutsideRadius);

  // axis offset moves every hit
  d = noiseless();
  d.axis_x_mm = 1.25;
  d.axis_y_mm = -0.5;
  const auto& shifted = std::get<DetectorEvent>(simulate_event(g, d, rb, BornIon{}, rng));
  CHECK(shifted.x_mm == doctest::Approx(1.25));
  CHECK(shifted.y_mm == doctest::Approx(-0.5));
}

TEST_CASE("rejection reasons are exclusive and exhaustive") {
  SpectrometerGeometry g;
  g.detector_radius_mm = 5.0;
  DetectorModel d;
  d.window_us = 270.35;  // 1 a.u. of p_z is only ~0.25 us of TOF
  d.efficiency = 0.7;
  const auto rb = IonSpecies::rb85();
  const std::vector<BornIon> ions = [] {
    std::vector<BornIon> v;
    std::mt19937_64 gen(2);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int i = 0; i < 5000; ++i) v.push_back({{}, {n(gen), n(gen), 0.3 * n(gen)}, strongfield::Channel::k5s});
    return v;
  }();
  const auto sum = simulate_events(g, d, rb, ions, 77);
  std::size_t rejected = 0;
  for (auto r : sum.rejected) rejected += r;
  CHECK(sum.generated == ions.size());
  CHECK(sum.events.size() + rejected == ions.size());
  for (auto r : sum.rejected) CHECK(r > 0);
  for (const auto& e : sum.events) {
    CHECK(e.x_mm * e.x_mm + e.y_mm * e.y_mm <= 25.0);
    CHECK(e.t_us <= 270.35);
  }
  // ids are the born-ion indices, in order
  for (std::size_t i = 1; i < sum.events.size(); ++i) CHECK(sum.events[i].id > sum.events[i - 1].id);
}

TEST_CASE("position and time noise statistics") {
  const SpectrometerGeometry g;
  const auto rb = IonSpecies::rb85();
  const DetectorModel d;  // 0.1 mm, 1 ns
  const std::vector<BornIon> ions(10000);
  const auto sum = simulate_events(g, d, rb, ions, 5);
  REQUIRE(sum.events.size() == ions.size());
  double sx = 0, sy = 0, st = 0;
  const double t0 = time_of_flight_us(g, rb, 0.0, 0.0);
  for (const auto& e : sum.events) {
    sx += e.x_mm * e.x_mm;
    sy += e.y_mm * e.y_mm;
    st += (e.t_us - t0) * (e.t_us - t0);
  }
  const double n = static_cast<double>(ions.size());
  CHECK(std::sqrt(sx / n) == doctest::Approx(0.1).epsilon(0.05));
  CHECK(std::sqrt(sy / n) == doctest::Approx(0.1).epsilon(0.05));
  CHECK(std::sqrt(st / n) * 1e3 == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("efficiency is a Bernoulli trial") {
  DetectorModel d = noiseless();
  d.efficiency = 0.5;
  const std::vector<BornIon> ions(20000);
  const auto sum = simulate_events({}, d, IonSpecies::rb85(), ions, 9);
  const double frac = static_cast<double>(sum.events.size()) / 20000.0;
  // 5 sigma of sqrt(p(1-p)/n) = 0.0035
  CHECK(std::abs(frac - 0.5) < 0.018);
  CHECK(sum.rejected[static_cast<std::size_t>(Rejection::kEfficiencyLoss)] == 20000 - sum.events.size());
}

TEST_CASE("simulation is independent of worker count") {
  std::vector<BornIon> ions;
  for (int i = 0; i < 3000; ++i) ions.push_back({{0.01 * (i % 7), 0.0, 0.0}, {0.001 * (i % 13), 0.1, -0.05}, strongfield::Channel::k5p});
  DetectorModel d;
  d.momentum_blur_au = {0.02, 0.02, 0.05};
  const auto a = simulate_events({}, d, IonSpecies::rb85(), ions, 4, 1);
  const auto b = simulate_events({}, d, IonSpecies::rb85(), ions, 4, 4);
  REQUIRE(a.events.size() == b.events.size());
  for (std::size_t i = 0; i < a.events.size(); ++i) {
    CHECK(a.events[i].t_us == b.events[i].t_us);
    CHECK(a.events[i].x_mm == b.events[i].x_mm);
    CHECK(a.events[i].truth->momentum_au.z == b.events[i].truth->momentum_au.z);
  }
}

TEST_CASE("validation") {
  SpectrometerGeometry g;
  g.field_v_per_cm = 0.0;
  CHECK_THROWS_AS(g.validate(), DomainError);
  g = {};
  g.drift_length_mm = -1.0;
  CHECK_THROWS_AS(g.validate(), DomainError);
  DetectorModel d;
  d.efficiency = 1.5;
  CHECK_THROWS_AS(d.validate(), DomainError);
  d = {};
  d.position_sigma_mm = -0.1;
  CHECK_THROWS_AS(d.validate(), DomainError);
  IonSpecies s{85.0, 0};
  CHECK_THROWS_AS(s.validate(), DomainError);
  CHECK(IonSpecies::rb87().mass_amu == doctest::Approx(86.909180527));
}
