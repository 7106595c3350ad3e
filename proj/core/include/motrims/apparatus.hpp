#pragma once

// Forward model of the recoil-ion spectrometer: uniform extraction field over
// the acceleration region, field-free drift tube, position- and time-sensitive
// detector at the end. The spectrometer axis is +z (towards the detector); the
// nominal target point is the origin.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "motrims/strongfield.hpp"
#include "motrims/units.hpp"
#include "motrims/vec3.hpp"

namespace motrims::apparatus {

struct SpectrometerGeometry {
  double field_v_per_cm = 0.5;
  double accel_length_mm = 85.0;  // nominal target point to drift-tube entrance
  double drift_length_mm = 670.0;
  double detector_radius_mm = 40.0;

  void validate() const;
};

struct IonSpecies {
  double mass_amu = units::kRb85MassAmu;
  int charge = 1;

  double mass_au() const { return units::amu_to_au(mass_amu); }
  void validate() const;

  static IonSpecies rb85() { return {units::kRb85MassAmu, 1}; }
  static IonSpecies rb87() { return {units::kRb87MassAmu, 1}; }
};

struct DetectorModel {
  double position_sigma_mm = 0.1;
  double time_sigma_ns = 1.0;
  std::optional<double> window_us;  // TOF acceptance [0, window]; unbounded if empty
  double efficiency = 1.0;
  // Where the spectrometer axis lands, in detector coordinates.
  double axis_x_mm = 0.0;
  double axis_y_mm = 0.0;
  // Effective Gaussian blur applied to birth momenta; stands in for field
  // inhomogeneities and stray fields.
  Vec3 momentum_blur_au{};

  void validate() const;
};

struct TruthRecord {
  Vec3 birth_mm;
  Vec3 momentum_au;
  strongfield::Channel channel = strongfield::Channel::k5s;
  IonSpecies species;
};

struct DetectorEvent {
  std::uint64_t id = 0;
  double t_us = 0.0;
  double x_mm = 0.0;
  double y_mm = 0.0;
  std::optional<TruthRecord> truth;
};

enum class Rejection { kOutsideRadius, kOutsideWindow, kEfficiencyLoss };
std::string_view rejection_label(Rejection r);

using SimulationOutcome = std::variant<DetectorEvent, Rejection>;

// An ion at the moment of ionization.
struct BornIon {
  Vec3 position_mm;
  Vec3 momentum_au;
  strongfield::Channel channel = strongfield::Channel::k5s;
};

// Exact uniform-field + drift time of flight. z_birth is measured from the
// nominal target point towards the detector. Throws DomainError when the ion is
// born at or beyond the drift-tube entrance.
double time_of_flight_au(const SpectrometerGeometry& geom, const IonSpecies& species, double pz_au,
                         double z_birth_mm);
double time_of_flight_us(const SpectrometerGeometry& geom, const IonSpecies& species, double pz_au,
                         double z_birth_mm);
// d t / d p_z, exact.
double time_of_flight_slope_au(const SpectrometerGeometry& geom, const IonSpecies& species, double pz_au,
                               double z_birth_mm);

// Extraction force qE in a.u.; -1/(qE) is the TOF slope at p_z = 0.
double extraction_force_au(const SpectrometerGeometry& geom, const IonSpecies& species);

// qE * dt: momentum spread along z equivalent to a timing error dt.
double timing_momentum_sensitivity_au(const SpectrometerGeometry& geom, const IonSpecies& species,
                                      double dt_ns);

struct Hit {
  double x_mm = 0.0;
  double y_mm = 0.0;
};

// Free transverse flight: birth + (p / m) t. Throws DomainError for t <= 0.
Hit transverse_hit(const IonSpecies& species, double px_au, double py_au, double birth_x_mm, double birth_y_mm,
                   double t_us);

SimulationOutcome simulate_event(const SpectrometerGeometry& geom, const DetectorModel& detector,
                                 const IonSpecies& species, const BornIon& ion, std::mt19937_64& rng);

struct SimulationSummary {
  std::vector<DetectorEvent> events;  // accepted, ids = index of the born ion
  std::size_t generated = 0;
  std::array<std::size_t, 3> rejected{};  // indexed by Rejection
};

// Runs every ion through simulate_event with substream (seed, detector, i).
SimulationSummary simulate_events(const SpectrometerGeometry& geom, const DetectorModel& detector,
                                  const IonSpecies& species, std::span<const BornIon> ions, std::uint64_t seed,
                                  unsigned workers = 0);

}  // namespace motrims::apparatus
