#include "motrims/apparatus.hpp"

#include <cmath>
#include <string>

#include "motrims/error.hpp"
#include "motrims/parallel.hpp"
#include "motrims/rng.hpp"

namespace motrims::apparatus {

void SpectrometerGeometry::validate() const {
  if (!(field_v_per_cm > 0.0)) throw DomainError("spectrometer: extraction field must be positive");
  if (!(accel_length_mm > 0.0)) throw DomainError("spectrometer: acceleration length must be positive");
  if (!(drift_length_mm > 0.0)) throw DomainError("spectrometer: drift length must be positive");
  if (!(detector_radius_mm > 0.0)) throw DomainError("spectrometer: detector radius must be positive");
}

void IonSpecies::validate() const {
  if (!(mass_amu > 0.0)) throw DomainError("ion species: mass must be positive");
  if (charge < 1) throw DomainError("ion species: charge state must be >= 1");
}

void DetectorModel::validate() const {
  if (!(position_sigma_mm >= 0.0)) throw DomainError("detector: position resolution must be >= 0");
  if (!(time_sigma_ns >= 0.0)) throw DomainError("detector: time resolution must be >= 0");
  if (window_us && !(*window_us > 0.0)) throw DomainError("detector: TOF window must be positive");
  if (!(efficiency >= 0.0 && efficiency <= 1.0)) throw DomainError("detector: efficiency must be in [0, 1]");
  for (int a = 0; a < 3; ++a) {
    if (!(momentum_blur_au[a] >= 0.0)) throw DomainError("detector: momentum blur must be >= 0");
  }
}

std::string_view rejection_label(Rejection r) {
  switch (r) {
    case Rejection::kOutsideRadius:
      return "outside_radius";
    case Rejection::kOutsideWindow:
      return "outside_window";
    case Rejection::kEfficiencyLoss:
      return "efficiency_loss";
  }
  return "unknown";
}

namespace {

struct Kinematics {
  double accel;    // qE/m, a.u.
  double s;        // acceleration distance, a.u.
  double drift;    // drift length, a.u.
  double mass;
};

Kinematics kinematics(const SpectrometerGeometry& geom, const IonSpecies& species, double z_birth_mm) {
  geom.validate();
  species.validate();
  const double s_mm = geom.accel_length_mm - z_birth_mm;
  if (!(s_mm > 0.0)) {
    throw DomainError("time_of_flight: ion born at z = " + std::to_string(z_birth_mm) +
                      " mm, at or beyond the drift-tube entrance (" + std::to_string(geom.accel_length_mm) + " mm)");
  }
  const double m = species.mass_au();
  return {species.charge * units::v_per_cm_to_au(geom.field_v_per_cm) / m, units::mm_to_au(s_mm),
          units::mm_to_au(geom.drift_length_mm), m};
}

}  // namespace

double time_of_flight_au(const SpectrometerGeometry& geom, const IonSpecies& species, double pz_au,
                         double z_birth_mm) {
  const Kinematics k = kinematics(geom, species, z_birth_mm);
  const double v = pz_au / k.mass;
  const double vf = std::sqrt(v * v + 2.0 * k.accel * k.s);  // speed entering the drift tube
  // (vf - v)/a, written without cancellation for v > 0.
  const double t_acc = v > 0.0 ? 2.0 * k.s / (vf + v) : (vf - v) / k.accel;
  return t_acc + k.drift / vf;
}

double time_of_flight_us(const SpectrometerGeometry& geom, const IonSpecies& species, double pz_au,
                         double z_birth_mm) {
  return units::au_to_us(time_of_flight_au(geom, species, pz_au, z_birth_mm));
}

double time_of_flight_slope_au(const SpectrometerGeometry& geom, const IonSpecies& species, double pz_au,
                               double z_birth_mm) {
  const Kinematics k = kinematics(geom, species, z_birth_mm);
  const double v = pz_au / k.mass;
  const double vf = std::sqrt(v * v + 2.0 * k.accel * k.s);
  // dt/dv = (v/vf - 1)/a - L v / vf^3
  const double dt_dv = (v / vf - 1.0) / k.accel - k.drift * v / (vf * vf * vf);
  return dt_dv / k.mass;
}

double extraction_force_au(const SpectrometerGeometry& geom, const IonSpecies& species) {
  geom.validate();
  species.validate();
  return species.charge * units::v_per_cm_to_au(geom.field_v_per_cm);
}

double timing_momentum_sensitivity_au(const SpectrometerGeometry& geom, const IonSpecies& species,
                                      double dt_ns) {
  return extraction_force_au(geom, species) * units::ns_to_au(dt_ns);
}

Hit transverse_hit(const IonSpecies& species, double px_au, double py_au, double birth_x_mm, double birth_y_mm,
                   double t_us) {
  species.validate();
  if (!(t_us > 0.0)) throw DomainError("transverse_hit: flight time must be positive");
  const double t = units::us_to_au(t_us);
  const double m = species.mass_au();
  return {birth_x_mm + units::au_to_mm(px_au / m * t), birth_y_mm + units::au_to_mm(py_au / m * t)};
}

SimulationOutcome simulate_event(const SpectrometerGeometry& geom, const DetectorModel& detector,
                                 const IonSpecies& species, const BornIon& ion, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  Vec3 p = ion.momentum_au;
  for (int a = 0; a < 3; ++a) {
    if (detector.momentum_blur_au[a] > 0.0) p[a] += detector.momentum_blur_au[a] * gauss(rng);
  }
  const double t_us = time_of_flight_us(geom, species, p.z, ion.position_mm.z);
  const Hit hit = transverse_hit(species, p.x, p.y, ion.position_mm.x, ion.position_mm.y, t_us);

  DetectorEvent ev;
  ev.t_us = t_us;
  ev.x_mm = hit.x_mm + detector.axis_x_mm;
  ev.y_mm = hit.y_mm + detector.axis_y_mm;
  if (detector.position_sigma_mm > 0.0) {
    ev.x_mm += detector.position_sigma_mm * gauss(rng);
    ev.y_mm += detector.position_sigma_mm * gauss(rng);
  }
  if (detector.time_sigma_ns > 0.0) ev.t_us += detector.time_sigma_ns * 1e-3 * gauss(rng);
  ev.truth = TruthRecord{ion.position_mm, ion.momentum_au, ion.channel, species};

  const double r2 = ev.x_mm * ev.x_mm + ev.y_mm * ev.y_mm;
  if (r2 > geom.detector_radius_mm * geom.detector_radius_mm) return Rejection::kOutsideRadius;
  if (detector.window_us && (ev.t_us < 0.0 || ev.t_us > *detector.window_us)) return Rejection::kOutsideWindow;
  if (detector.efficiency < 1.0 && !(uni(rng) < detector.efficiency)) return Rejection::kEfficiencyLoss;
  return ev;
}

SimulationSummary simulate_events(const SpectrometerGeometry& geom, const DetectorModel& detector,
                                  const IonSpecies& species, std::span<const BornIon> ions, std::uint64_t seed,
                                  unsigned workers) {
  geom.validate();
  detector.validate();
  species.validate();
  std::vector<SimulationOutcome> outcomes(ions.size());
  parallel_for(ions.size(), workers, [&](std::size_t i) {
    auto rng = substream(seed, streams::kDetector, i);
    outcomes[i] = simulate_event(geom, detector, species, ions[i], rng);
  });
  SimulationSummary out;
  out.generated = ions.size();
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (auto* ev = std::get_if<DetectorEvent>(&outcomes[i])) {
      ev->id = i;
      out.events.push_back(std::move(*ev));
    } else {
      ++out.rejected[static_cast<std::size_t>(std::get<Rejection>(outcomes[i]))];
    }
  }
  return out;
}

}  // namespace motrims::apparatus
