#pragma once

// Cold-atom targets, the femtosecond focus, and Monte Carlo generation of
// ionization events (where and with which momentum each ion is born).
//
// Lab frame: laser propagates along y, polarization and spectrometer axis
// along z, 2D-MOT atomic beam along x. Positions in mm.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "motrims/apparatus.hpp"
#include "motrims/strongfield.hpp"
#include "motrims/units.hpp"
#include "motrims/vec3.hpp"

namespace motrims::ensemble {

enum class TargetKind { kMot3D, kMolasses2D, kBeam2D };
std::string_view target_kind_label(TargetKind kind);
TargetKind parse_target_kind(std::string_view text);

struct TargetEnsemble {
  TargetKind kind = TargetKind::kMot3D;
  Vec3 fwhm_mm{0.35, 1.1, 1.22};         // x ignored for kBeam2D (flat along the beam)
  Vec3 center_mm{};
  Vec3 temperature_uk{130.0, 130.0, 130.0};
  double peak_density_cm3 = 5.0e9;
  double excited_fraction = 0.25;        // f_5p
  double beam_velocity_m_s = 0.0;        // mean velocity along x, kBeam2D only
  double mass_amu = units::kRb85MassAmu;

  void validate() const;
  double state_fraction(strongfield::Channel channel) const;

  static TargetEnsemble mot3d();
  static TargetEnsemble molasses2d();
  static TargetEnsemble beam2d();
};

struct FocusModel {
  double waist_um = 10.0;       // 1/e^2 intensity radius
  double rayleigh_um = 716.0;
  Vec3 focus_mm{};
  int photon_order_5s = 3;
  int photon_order_5p = 2;

  void validate() const;
  int photon_order(strongfield::Channel channel) const;
};

struct CoilCalibration {
  double x_mm_per_a = 1.04;
  double z_mm_per_a = 0.63;

  void validate() const;
};

// atoms/cm^3 at r. Separable Gaussian; kBeam2D is flat along x.
double density_at(const TargetEnsemble& target, const Vec3& r_mm);

// I / I0 of a Gaussian beam propagating along y.
double relative_intensity(const FocusModel& focus, const Vec3& r_mm);

// density x state fraction x (I/I0)^n.
double ionization_weight(const TargetEnsemble& target, const FocusModel& focus, const Vec3& r_mm,
                         strongfield::Channel channel);

// Volume integral of ionization_weight (atoms/cm^3 x mm^3). Simpson along the
// beam axis and over +-6 sigma of the transverse (I/I0)^n profile.
double integrated_yield(const TargetEnsemble& target, const FocusModel& focus, strongfield::Channel channel);

struct Displacement {
  double dx_mm = 0.0;
  double dz_mm = 0.0;
};

Displacement coil_displacement(const CoilCalibration& cal, double delta_current_x_a, double delta_current_z_a);

// Recoil spectra available to the generator, one per channel (null = off).
struct ChannelSpectra {
  const strongfield::SpectrumMap* s5 = nullptr;
  const strongfield::SpectrumMap* p5 = nullptr;
};

// Draws n ions. Channel c is chosen with probability proportional to its
// integrated yield, the birth position from that channel's ionization weight
// (exact rejection sampler), the momentum as SFA recoil + thermal atom momentum
// (+ m v_beam along x for kBeam2D). Substream (seed, ionization, i) per ion.
std::vector<apparatus::BornIon> generate_ionization_events(const TargetEnsemble& target, const FocusModel& focus,
                                                           const ChannelSpectra& spectra, std::size_t n,
                                                           std::uint64_t seed, unsigned workers = 0);

}  // namespace motrims::ensemble
