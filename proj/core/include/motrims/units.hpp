#pragma once

// Physical constants and unit conversions.
//
// Physics code in this library works in Hartree atomic units (hbar = e = m_e = 1).
// Public boundaries use laboratory units: nm, eV, W/cm^2, V/cm, uK, mm, us, ns.
// Conversion helpers carry the unit in their name.

namespace motrims::units {

// CODATA 2018 recommended values.
inline constexpr double kHartreeEv = 27.211386245988;            // eV
inline constexpr double kHartreeJoule = 4.3597447222071e-18;     // J
inline constexpr double kTimeAuSeconds = 2.4188843265857e-17;    // s
inline constexpr double kBohrMeters = 5.29177210903e-11;         // m
inline constexpr double kFieldAuVoltPerMeter = 5.14220674763e11; // V/m
inline constexpr double kElectronMassKg = 9.1093837015e-31;      // kg
inline constexpr double kAtomicMassUnitKg = 1.66053906660e-27;   // kg
inline constexpr double kBoltzmannJoulePerKelvin = 1.380649e-23; // J/K (exact)
inline constexpr double kVacuumPermittivity = 8.8541878128e-12;  // F/m
inline constexpr double kSpeedOfLight = 299792458.0;             // m/s (exact)
inline constexpr double kPlanckTimesCEvNm = 1239.8419843320026;  // h c in eV nm

// Derived from the table above.
inline constexpr double kAmuInElectronMasses = kAtomicMassUnitKg / kElectronMassKg;  // 1822.888...
inline constexpr double kBoltzmannAuPerKelvin = kBoltzmannJoulePerKelvin / kHartreeJoule;
inline constexpr double kMomentumAuSi = kElectronMassKg * kBohrMeters / kTimeAuSeconds;  // kg m/s
inline constexpr double kVelocityAuMetersPerSecond = kBohrMeters / kTimeAuSeconds;
// Peak intensity of a linearly polarized wave with field amplitude 1 a.u.:
// I = eps0 c E^2 / 2, expressed in W/cm^2.
inline constexpr double kIntensityAuWattPerCm2 =
    0.5 * kVacuumPermittivity * kSpeedOfLight * kFieldAuVoltPerMeter * kFieldAuVoltPerMeter * 1e-4;

// Isotope masses of the neutral atoms (AME2016), in amu.
inline constexpr double kRb85MassAmu = 84.911789738;
inline constexpr double kRb87MassAmu = 86.909180527;

inline constexpr double kGaussianFwhmPerSigma = 2.3548200450309493;  // 2 sqrt(2 ln 2)

// --- scalar conversions -----------------------------------------------------

constexpr double ev_to_au(double ev) { return ev / kHartreeEv; }
constexpr double au_to_ev(double au) { return au * kHartreeEv; }

constexpr double mm_to_au(double mm) { return mm * 1e-3 / kBohrMeters; }
constexpr double au_to_mm(double au) { return au * kBohrMeters * 1e3; }
constexpr double um_to_au(double um) { return um * 1e-6 / kBohrMeters; }
constexpr double nm_to_au(double nm) { return nm * 1e-9 / kBohrMeters; }

constexpr double us_to_au(double us) { return us * 1e-6 / kTimeAuSeconds; }
constexpr double au_to_us(double au) { return au * kTimeAuSeconds * 1e6; }
constexpr double ns_to_au(double ns) { return ns * 1e-9 / kTimeAuSeconds; }
constexpr double au_to_ns(double au) { return au * kTimeAuSeconds * 1e9; }
constexpr double fs_to_au(double fs) { return fs * 1e-15 / kTimeAuSeconds; }
constexpr double au_to_fs(double au) { return au * kTimeAuSeconds * 1e15; }

constexpr double v_per_cm_to_au(double v_per_cm) { return v_per_cm * 100.0 / kFieldAuVoltPerMeter; }
constexpr double au_to_v_per_cm(double au) { return au * kFieldAuVoltPerMeter / 100.0; }

constexpr double m_per_s_to_au(double m_per_s) { return m_per_s / kVelocityAuMetersPerSecond; }
constexpr double au_to_m_per_s(double au) { return au * kVelocityAuMetersPerSecond; }

constexpr double amu_to_au(double amu) { return amu * kAmuInElectronMasses; }
constexpr double au_to_amu(double au) { return au / kAmuInElectronMasses; }

constexpr double uk_to_au(double micro_kelvin) { return micro_kelvin * 1e-6 * kBoltzmannAuPerKelvin; }
constexpr double au_to_uk(double au) { return au / kBoltzmannAuPerKelvin * 1e6; }

constexpr double w_per_cm2_to_au(double w_per_cm2) { return w_per_cm2 / kIntensityAuWattPerCm2; }
constexpr double au_to_w_per_cm2(double au) { return au * kIntensityAuWattPerCm2; }

// --- physics helpers --------------------------------------------------------

// Photon energy hc/lambda. Throws DomainError for lambda <= 0.
double photon_energy_ev(double wavelength_nm);
double photon_energy_au(double wavelength_nm);

// Peak field amplitude E0 = sqrt(I / I_au) in a.u. Throws DomainError for I < 0.
double intensity_to_field_au(double intensity_w_per_cm2);

// Per-axis Maxwell-Boltzmann momentum width sqrt(m kB T) in a.u.
// Throws DomainError for T < 0 or m <= 0.
double thermal_momentum_sigma_au(double temperature_uk, double mass_au);

}  // namespace motrims::units
