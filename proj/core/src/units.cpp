#include "motrims/units.hpp"

#include <cmath>
#include <string>

#include "motrims/error.hpp"

namespace motrims::units {

double photon_energy_ev(double wavelength_nm) {
  if (!(wavelength_nm > 0.0)) {
    throw DomainError("photon_energy: wavelength must be positive, got " +
                      std::to_string(wavelength_nm) + " nm");
  }
  return kPlanckTimesCEvNm / wavelength_nm;
}

double photon_energy_au(double wavelength_nm) { return ev_to_au(photon_energy_ev(wavelength_nm)); }

double intensity_to_field_au(double intensity_w_per_cm2) {
  if (!(intensity_w_per_cm2 >= 0.0)) {
    throw DomainError("intensity_to_field: intensity must be non-negative, got " +
                      std::to_string(intensity_w_per_cm2) + " W/cm^2");
  }
  return std::sqrt(w_per_cm2_to_au(intensity_w_per_cm2));
}

double thermal_momentum_sigma_au(double temperature_uk, double mass_au) {
  if (!(temperature_uk >= 0.0)) {
    throw DomainError("thermal_momentum_sigma: temperature must be non-negative");
  }
  if (!(mass_au > 0.0)) {
    throw DomainError("thermal_momentum_sigma: mass must be positive");
  }
  return std::sqrt(mass_au * uk_to_au(temperature_uk));
}

}  // namespace motrims::units
