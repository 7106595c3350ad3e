#pragma once

// Strong-field-approximation (SFA) ionization of a single active electron in a
// linearly polarized, sin^2-envelope laser pulse.
//
// All times, momenta and fields are atomic units. The ionization amplitude is
//
//   M_p = \int_0^T dt  E(t) . d(p + A(t))  exp[i S(t)],
//   S(t) = \int_0^t dt' [ (p + A(t'))^2 / 2 + I_p ],
//
// evaluated by composite Simpson quadrature on a uniform time grid that is
// doubled until the amplitude stops changing. The recoil-ion distribution is
// w(p) = |p| |M_p|^2 with p_ion = -p_electron (photon momentum neglected).

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "motrims/profile.hpp"
#include "motrims/vec3.hpp"

namespace motrims::strongfield {

enum class Envelope { kSin2 };

// CEP for which A(t) is odd and E(t) even about the pulse centre. With this
// phase the recoil spectrum is exactly symmetric under p_z -> -p_z.
inline constexpr double kSymmetricCep = std::numbers::pi / 2.0;

struct LaserPulse {
  double wavelength_nm = 800.0;
  double intensity_w_per_cm2 = 1.0e10;
  int cycles = 20;                 // full envelope width in optical cycles
  double cep_rad = kSymmetricCep;  // phase of the A(t) carrier, A ~ cos(w t + cep)
  Vec3 polarization{0.0, 0.0, 1.0};
  Envelope envelope = Envelope::kSin2;

  // Throws DomainError when an invariant is violated.
  void validate() const;

  double omega_au() const;
  double duration_au() const;               // T_pulse
  double field_amplitude_au() const;        // E0
  double vector_potential_amplitude_au() const;  // A0 = E0 / omega
};

enum class Channel { k5s, k5p };

std::string_view channel_label(Channel channel);
// Accepts "5s" / "5p" (case-insensitive, optional "Rb-" prefix).
Channel parse_channel(std::string_view text);

struct InitialState {
  std::string label;
  double ip_ev = 0.0;

  double ip_au() const;
  double kappa_au() const;  // sqrt(2 I_p)
  void validate() const;

  static InitialState rb_5s();
  static InitialState rb_5p();
  static InitialState for_channel(Channel channel);
};

// A uniform axis. count == 1 pins the axis at min (== max); otherwise count >= 2
// and max > min.
struct GridAxis {
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 1;

  bool pinned() const { return count == 1; }
  double spacing() const { return pinned() ? 0.0 : (max - min) / static_cast<double>(count - 1); }
  double value(std::size_t i) const {
    return pinned() ? min : min + (max - min) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
};

// Momentum grid over (p_x, p_y, p_z); z is the polarization / time-of-flight axis.
struct MomentumGrid {
  std::array<GridAxis, 3> axes{};

  void validate() const;
  std::size_t size() const { return axes[0].count * axes[1].count * axes[2].count; }
  // Row-major flat index, z fastest.
  std::size_t index(std::size_t ix, std::size_t iy, std::size_t iz) const {
    return (ix * axes[1].count + iy) * axes[2].count + iz;
  }
  Vec3 node(std::size_t flat) const;
  int active_dimensions() const;
  double cell_volume() const;  // product of active-axis spacings

  // Cube [-half_range, half_range]^3 with `nodes` samples per axis.
  static MomentumGrid cube(double half_range, std::size_t nodes);
  // (p_z, p_x) plane at p_y = 0.
  static MomentumGrid plane_zx(double half_range, std::size_t nodes);
};

struct SpectrumMetadata {
  LaserPulse pulse;
  InitialState state;
  bool normalized = false;
  std::string momentum_convention = "p_ion=-p_electron";
};

struct SpectrumMap {
  MomentumGrid grid;
  std::vector<double> values;  // w at each node, row-major
  SpectrumMetadata meta;

  double at(std::size_t ix, std::size_t iy, std::size_t iz) const { return values[grid.index(ix, iy, iz)]; }
  double max_value() const;
  double riemann_sum() const;  // sum(values) * cell_volume
};

// Scale so that riemann_sum() == 1. Throws DomainError on an all-zero map.
void normalize(SpectrumMap& map);

// Incoherent weighted sum of maps on an identical grid (channel mixing).
SpectrumMap incoherent_sum(std::span<const SpectrumMap> maps, std::span<const double> weights);

// --- fields -----------------------------------------------------------------

// A(t) and E(t) = -dA/dt, both zero outside [0, T_pulse].
Vec3 vector_potential(const LaserPulse& pulse, double t_au);
Vec3 electric_field(const LaserPulse& pulse, double t_au);

// Analytic form of the sin^2 pulse as a finite cosine series, so that A, E,
// int A dt and int A^2 dt are all available in closed form.
class PulseField {
 public:
  explicit PulseField(const LaserPulse& pulse);

  double duration() const { return duration_; }
  // Scalar components along the polarization axis; zero outside the pulse.
  double a(double t) const;
  double e(double t) const;
  // int_0^t A dt' and int_0^t A^2 dt' for t in [0, T] (clamped outside).
  double a_integral(double t) const;
  double a2_integral(double t) const;

 private:
  struct Term {
    double amp;
    double freq;
    double phase;
  };
  static double eval(const std::vector<Term>& terms, double t);
  static double eval_derivative(const std::vector<Term>& terms, double t);
  static double eval_integral(const std::vector<Term>& terms, double t);

  double duration_;
  std::vector<Term> a_terms_;
  std::vector<Term> a2_terms_;
};

// S(t') with lower limit 0. Throws DomainError for t' outside [0, T_pulse].
double action_phase(const LaserPulse& pulse, const InitialState& state, const Vec3& p, double t_au);

// Length-gauge bound-continuum element <q| r . eps |Psi_0> for a hydrogen-like
// s state with binding momentum kappa:
//   d(q) = -i (8 sqrt(2) / pi) kappa^{5/2} q_eps / (q^2 + kappa^2)^3.
// The same radial form is used for the 5p state (with its own I_p).
std::complex<double> dipole_element(const InitialState& state, const Vec3& q, const Vec3& polarization);

struct QuadratureOptions {
  int steps_per_cycle = 200;  // base grid; Simpson needs an even total
  int max_refinements = 4;    // grid doublings beyond the first comparison
  double rtol = 1e-4;         // |M_2N - M_N| <= rtol |M_2N| + floor
};

struct AmplitudeResult {
  std::complex<double> value;
  long steps = 0;            // intervals of the accepted estimate
  double relative_change = 0.0;
};

// Precomputed time samples for one pulse/state pair; evaluate() is const and
// safe to call concurrently.
class AmplitudeEngine {
 public:
  AmplitudeEngine(const LaserPulse& pulse, const InitialState& state, QuadratureOptions options = {});

  // Electron momentum p (a.u.). Throws NumericalError if not converged.
  AmplitudeResult evaluate(const Vec3& p_electron) const;
  AmplitudeResult evaluate(double p_parallel, double p_perp_squared) const;

 private:
  struct Samples {
    std::vector<double> t, a, e, b, c;  // t, A, E, int A, int A^2 / 2
  };
  const Samples& samples_for_level(int level) const { return levels_[static_cast<std::size_t>(level)]; }

  LaserPulse pulse_;
  Vec3 eps_;
  double ip_;
  double kappa2_;
  std::complex<double> prefactor_;
  QuadratureOptions options_;
  long base_steps_;
  std::vector<Samples> levels_;
};

AmplitudeResult amplitude(const LaserPulse& pulse, const InitialState& state, const Vec3& p_electron,
                          QuadratureOptions options = {});

// w(p_ion) on every grid node. Nodes sharing (p.eps, |p_perp|) are computed once.
// Deterministic for any worker count (0 = hardware concurrency).
SpectrumMap spectrum(const LaserPulse& pulse, const InitialState& state, const MomentumGrid& grid,
                     QuadratureOptions options = {}, unsigned workers = 0);

// Cylindrically integrated p_z profile  f(p_z) = int_{rho < rho_max} w(p_z, rho) 2 pi rho d rho
// from a (p_z, p_x) plane map, using p_x >= 0 as rho.
Profile cylinder_slice(const SpectrumMap& plane_zx, double rho_max_au);

// --- scalar diagnostics -----------------------------------------------------

struct Energy {
  double au = 0.0;
  double ev = 0.0;
};

Energy ponderomotive_energy(const LaserPulse& pulse);

enum class Regime { kMultiphoton, kIntermediate, kTunneling };
std::string_view regime_label(Regime regime);

struct KeldyshResult {
  double gamma = 0.0;
  bool infinite = false;  // zero intensity
  Regime regime = Regime::kMultiphoton;
};

// gamma = sqrt(I_p / 2 U_p). Regime tag: gamma > 3 multiphoton, gamma < 1/3
// tunneling, otherwise intermediate (descriptive only).
KeldyshResult keldysh(const InitialState& state, const LaserPulse& pulse);

struct ExcessEnergy {
  int photons = 0;
  Energy energy;
  double momentum_au = 0.0;  // sqrt(2 E_e)
  bool includes_ponderomotive_shift = false;
};

struct BelowThreshold {
  int photons = 0;
  int minimum_photons = 0;
};

// E_e = n hbar omega - I_p (- U_p when include_ponderomotive_shift).
std::variant<ExcessEnergy, BelowThreshold> excess_energy(const InitialState& state, int photons,
                                                         const LaserPulse& pulse,
                                                         bool include_ponderomotive_shift = false);

double excess_momentum_au(const Energy& excess);

// --- sampling ---------------------------------------------------------------

// Draws momenta distributed as the multilinear interpolant of a SpectrumMap:
// a cell is picked with probability proportional to its integral, then a point
// inside it by rejection against the cell's largest corner.
class RecoilSampler {
 public:
  explicit RecoilSampler(const SpectrumMap& map);

  Vec3 sample(std::mt19937_64& rng) const;
  // Probability mass of each cell (row-major over cells of active axes).
  const std::vector<double>& cell_probabilities() const { return cell_prob_; }
  const MomentumGrid& grid() const { return grid_; }

 private:
  double interpolate(const std::array<std::size_t, 3>& cell, const std::array<double, 3>& frac) const;

  MomentumGrid grid_;
  std::vector<double> values_;
  std::array<std::size_t, 3> cells_per_axis_{};
  std::vector<double> cell_prob_;
  std::vector<double> cdf_;
  std::vector<double> cell_max_;
};

std::vector<Vec3> sample_recoil_momenta(const SpectrumMap& map, std::size_t n, std::uint64_t seed,
                                        unsigned workers = 0);

}  // namespace motrims::strongfield
