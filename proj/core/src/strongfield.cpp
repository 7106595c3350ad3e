#include "motrims/strongfield.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <utility>

#include "motrims/error.hpp"
#include "motrims/parallel.hpp"
#include "motrims/rng.hpp"
#include "motrims/units.hpp"

namespace motrims::strongfield {

namespace {

constexpr double kPi = std::numbers::pi;

std::string format_vec(const Vec3& v) {
  std::ostringstream os;
  os.precision(6);
  os << "(" << v.x << ", " << v.y << ", " << v.z << ")";
  return os.str();
}

}  // namespace

// --- LaserPulse -------------------------------------------------------------

void LaserPulse::validate() const {
  if (!(wavelength_nm > 0.0)) throw DomainError("laser pulse: wavelength must be positive");
  if (!(intensity_w_per_cm2 >= 0.0)) throw DomainError("laser pulse: intensity must be non-negative");
  if (cycles < 1) throw DomainError("laser pulse: cycle count must be >= 1");
  if (!std::isfinite(cep_rad)) throw DomainError("laser pulse: CEP must be finite");
  if (std::abs(norm(polarization) - 1.0) > 1e-12) {
    throw DomainError("laser pulse: polarization axis must have unit norm, got " + format_vec(polarization));
  }
}

double LaserPulse::omega_au() const { return units::photon_energy_au(wavelength_nm); }

double LaserPulse::duration_au() const { return 2.0 * kPi * cycles / omega_au(); }

double LaserPulse::field_amplitude_au() const { return units::intensity_to_field_au(intensity_w_per_cm2); }

double LaserPulse::vector_potential_amplitude_au() const { return field_amplitude_au() / omega_au(); }

// --- channels and states ----------------------------------------------------

std::string_view channel_label(Channel channel) { return channel == Channel::k5s ? "5s" : "5p"; }

Channel parse_channel(std::string_view text) {
  std::string s;
  for (char c : text) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (s.rfind("rb-", 0) == 0) s.erase(0, 3);
  if (s == "5s") return Channel::k5s;
  if (s == "5p") return Channel::k5p;
  throw DomainError("unknown channel '" + std::string(text) + "' (expected 5s or 5p)");
}

double InitialState::ip_au() const { return units::ev_to_au(ip_ev); }

double InitialState::kappa_au() const { return std::sqrt(2.0 * ip_au()); }

void InitialState::validate() const {
  if (!(ip_ev > 0.0)) throw DomainError("initial state '" + label + "': ionization potential must be positive");
}

InitialState InitialState::rb_5s() { return {"Rb-5s", 4.18}; }
InitialState InitialState::rb_5p() { return {"Rb-5p", 2.58}; }
InitialState InitialState::for_channel(Channel channel) {
  return channel == Channel::k5s ? rb_5s() : rb_5p();
}

// --- grids and maps ---------------------------------------------------------

void MomentumGrid::validate() const {
  static constexpr const char* kNames[3] = {"p_x", "p_y", "p_z"};
  for (int i = 0; i < 3; ++i) {
    const auto& ax = axes[static_cast<std::size_t>(i)];
    if (ax.count == 0) throw DomainError(std::string("momentum grid: axis ") + kNames[i] + " has no nodes");
    if (ax.count == 1) {
      if (ax.min != ax.max) {
        throw DomainError(std::string("momentum grid: pinned axis ") + kNames[i] + " needs min == max");
      }
      continue;
    }
    if (!(ax.max > ax.min)) throw DomainError(std::string("momentum grid: axis ") + kNames[i] + " needs max > min");
  }
  if (active_dimensions() == 0) throw DomainError("momentum grid: at least one axis needs >= 2 nodes");
}

Vec3 MomentumGrid::node(std::size_t flat) const {
  const std::size_t iz = flat % axes[2].count;
  const std::size_t rest = flat / axes[2].count;
  const std::size_t iy = rest % axes[1].count;
  const std::size_t ix = rest / axes[1].count;
  return {axes[0].value(ix), axes[1].value(iy), axes[2].value(iz)};
}

int MomentumGrid::active_dimensions() const {
  int d = 0;
  for (const auto& ax : axes) d += ax.pinned() ? 0 : 1;
  return d;
}

double MomentumGrid::cell_volume() const {
  double v = 1.0;
  for (const auto& ax : axes) {
    if (!ax.pinned()) v *= ax.spacing();
  }
  return v;
}

MomentumGrid MomentumGrid::cube(double half_range, std::size_t nodes) {
  MomentumGrid g;
  for (auto& ax : g.axes) ax = {-half_range, half_range, nodes};
  g.validate();
  return g;
}

MomentumGrid MomentumGrid::plane_zx(double half_range, std::size_t nodes) {
  MomentumGrid g;
  g.axes[0] = {-half_range, half_range, nodes};
  g.axes[1] = {0.0, 0.0, 1};
  g.axes[2] = {-half_range, half_range, nodes};
  g.validate();
  return g;
}

double SpectrumMap::max_value() const {
  return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
}

double SpectrumMap::riemann_sum() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s * grid.cell_volume();
}

void normalize(SpectrumMap& map) {
  const double total = map.riemann_sum();
  if (!(total > 0.0)) throw DomainError("normalize: spectrum map has no positive weight");
  for (double& v : map.values) v /= total;
  map.meta.normalized = true;
}

SpectrumMap incoherent_sum(std::span<const SpectrumMap> maps, std::span<const double> weights) {
  if (maps.empty() || maps.size() != weights.size()) {
    throw DomainError("incoherent_sum: need one weight per map and at least one map");
  }
  SpectrumMap out = maps[0];
  std::fill(out.values.begin(), out.values.end(), 0.0);
  out.meta.normalized = false;
  for (std::size_t m = 0; m < maps.size(); ++m) {
    if (weights[m] < 0.0) throw DomainError("incoherent_sum: weights must be non-negative");
    if (maps[m].values.size() != out.values.size()) throw DomainError("incoherent_sum: grid mismatch");
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += weights[m] * maps[m].values[i];
  }
  return out;
}

// --- PulseField -------------------------------------------------------------

PulseField::PulseField(const LaserPulse& pulse) {
  pulse.validate();
  const double w = pulse.omega_au();
  duration_ = pulse.duration_au();
  const double a0 = pulse.vector_potential_amplitude_au();
  const double env = kPi / duration_;  // sin^2(env t)
  // sin^2(x) cos(y) = cos(y)/2 - [cos(y + 2x) + cos(y - 2x)]/4
  a_terms_ = {{0.5 * a0, w, pulse.cep_rad},
              {-0.25 * a0, w + 2.0 * env, pulse.cep_rad},
              {-0.25 * a0, w - 2.0 * env, pulse.cep_rad}};
  // Product-to-sum for A^2.
  for (const auto& p : a_terms_) {
    for (const auto& q : a_terms_) {
      a2_terms_.push_back({0.5 * p.amp * q.amp, p.freq - q.freq, p.phase - q.phase});
      a2_terms_.push_back({0.5 * p.amp * q.amp, p.freq + q.freq, p.phase + q.phase});
    }
  }
}

double PulseField::eval(const std::vector<Term>& terms, double t) {
  double s = 0.0;
  for (const auto& term : terms) s += term.amp * std::cos(term.freq * t + term.phase);
  return s;
}

double PulseField::eval_derivative(const std::vector<Term>& terms, double t) {
  double s = 0.0;
  for (const auto& term : terms) s -= term.amp * term.freq * std::sin(term.freq * t + term.phase);
  return s;
}

double PulseField::eval_integral(const std::vector<Term>& terms, double t) {
  double s = 0.0;
  for (const auto& term : terms) {
    // Frequencies are sums/differences of O(omega) values; anything this small
    // is an exact cancellation.
    if (std::abs(term.freq) < 1e-12) {
      s += term.amp * std::cos(term.phase) * t;
    } else {
      s += term.amp * (std::sin(term.freq * t + term.phase) - std::sin(term.phase)) / term.freq;
    }
  }
  return s;
}

double PulseField::a(double t) const {
  if (t <= 0.0 || t >= duration_) return 0.0;
  return eval(a_terms_, t);
}

double PulseField::e(double t) const {
  if (t <= 0.0 || t >= duration_) return 0.0;
  return -eval_derivative(a_terms_, t);
}

double PulseField::a_integral(double t) const { return eval_integral(a_terms_, std::clamp(t, 0.0, duration_)); }

double PulseField::a2_integral(double t) const { return eval_integral(a2_terms_, std::clamp(t, 0.0, duration_)); }

Vec3 vector_potential(const LaserPulse& pulse, double t_au) {
  return PulseField(pulse).a(t_au) * pulse.polarization;
}

Vec3 electric_field(const LaserPulse& pulse, double t_au) {
  return PulseField(pulse).e(t_au) * pulse.polarization;
}

double action_phase(const LaserPulse& pulse, const InitialState& state, const Vec3& p, double t_au) {
  state.validate();
  const PulseField field(pulse);
  if (!(t_au >= 0.0 && t_au <= field.duration())) {
    throw DomainError("action_phase: time outside the pulse [0, T_pulse]");
  }
  const double p_par = dot(p, pulse.polarization);
  return (0.5 * dot(p, p) + state.ip_au()) * t_au + p_par * field.a_integral(t_au) +
         0.5 * field.a2_integral(t_au);
}

namespace {

double dipole_prefactor(double kappa) { return 8.0 * std::numbers::sqrt2 / kPi * std::pow(kappa, 2.5); }

}  // namespace

std::complex<double> dipole_element(const InitialState& state, const Vec3& q, const Vec3& polarization) {
  state.validate();
  const double kappa = state.kappa_au();
  const double den = dot(q, q) + kappa * kappa;
  const double real = dipole_prefactor(kappa) * dot(q, polarization) / (den * den * den);
  return {0.0, -real};
}

// --- amplitude --------------------------------------------------------------

AmplitudeEngine::AmplitudeEngine(const LaserPulse& pulse, const InitialState& state, QuadratureOptions options)
    : pulse_(pulse), eps_(pulse.polarization), options_(options) {
  pulse.validate();
  state.validate();
  if (options.steps_per_cycle < 2 || options.steps_per_cycle % 2 != 0) {
    throw DomainError("quadrature: steps_per_cycle must be even and >= 2");
  }
  if (options.max_refinements < 0 || options.max_refinements > 8) {
    throw DomainError("quadrature: max_refinements must be in [0, 8]");
  }
  if (!(options.rtol > 0.0)) throw DomainError("quadrature: rtol must be positive");

  ip_ = state.ip_au();
  const double kappa = state.kappa_au();
  kappa2_ = kappa * kappa;
  prefactor_ = {0.0, -dipole_prefactor(kappa)};
  base_steps_ = static_cast<long>(options.steps_per_cycle) * pulse.cycles;

  const PulseField field(pulse);
  const int finest = options.max_refinements + 1;
  levels_.resize(static_cast<std::size_t>(finest) + 1);
  {
    Samples& s = levels_.back();
    const long n = base_steps_ << finest;
    const double dt = field.duration() / static_cast<double>(n);
    s.t.resize(static_cast<std::size_t>(n) + 1);
    s.a.resize(s.t.size());
    s.e.resize(s.t.size());
    s.b.resize(s.t.size());
    s.c.resize(s.t.size());
    for (long k = 0; k <= n; ++k) {
      const auto i = static_cast<std::size_t>(k);
      const double t = (k == n) ? field.duration() : dt * static_cast<double>(k);
      s.t[i] = t;
      s.a[i] = field.a(t);
      s.e[i] = field.e(t);
      s.b[i] = field.a_integral(t);
      s.c[i] = 0.5 * field.a2_integral(t);
    }
  }
  for (int level = finest - 1; level >= 0; --level) {
    const Samples& fine = levels_[static_cast<std::size_t>(level) + 1];
    Samples& s = levels_[static_cast<std::size_t>(level)];
    const std::size_t n = (fine.t.size() - 1) / 2;
    auto thin = [n](const std::vector<double>& src, std::vector<double>& dst) {
      dst.resize(n + 1);
      for (std::size_t k = 0; k <= n; ++k) dst[k] = src[2 * k];
    };
    thin(fine.t, s.t);
    thin(fine.a, s.a);
    thin(fine.e, s.e);
    thin(fine.b, s.b);
    thin(fine.c, s.c);
  }
}

namespace {

std::complex<double> simpson(const std::vector<std::complex<double>>& f, std::size_t stride, double h) {
  const std::size_t n = (f.size() - 1) / stride;
  std::complex<double> odd{}, even{};
  for (std::size_t k = 1; k < n; k += 2) odd += f[k * stride];
  for (std::size_t k = 2; k < n; k += 2) even += f[k * stride];
  return (f.front() + f.back() + 4.0 * odd + 2.0 * even) * (h / 3.0);
}

}  // namespace

AmplitudeResult AmplitudeEngine::evaluate(const Vec3& p_electron) const {
  const double p_par = dot(p_electron, eps_);
  const double p_perp2 = std::max(0.0, dot(p_electron, p_electron) - p_par * p_par);
  return evaluate(p_par, p_perp2);
}

AmplitudeResult AmplitudeEngine::evaluate(double p_par, double p_perp2) const {
  const double energy = 0.5 * (p_par * p_par + p_perp2) + ip_;
  double l1 = 0.0;  // running int |integrand| dt, scale for the absolute floor
  auto integrand = [&](const Samples& s, std::size_t k) {
    const double q_par = p_par + s.a[k];
    const double den = q_par * q_par + p_perp2 + kappa2_;
    const double g = s.e[k] * q_par / (den * den * den);
    const double phase = energy * s.t[k] + p_par * s.b[k] + s.c[k];
    return std::complex<double>(g * std::cos(phase), g * std::sin(phase));
  };

  // Level 1 holds twice the base resolution; its even points are level 0.
  const Samples& s1 = samples_for_level(1);
  std::vector<std::complex<double>> f(s1.t.size());
  for (std::size_t k = 0; k < f.size(); ++k) {
    f[k] = integrand(s1, k);
    l1 += std::abs(f[k]);
  }
  const double duration = s1.t.back();
  long steps = base_steps_ * 2;
  std::complex<double> coarse = simpson(f, 2, duration / static_cast<double>(base_steps_));
  std::complex<double> fine = simpson(f, 1, duration / static_cast<double>(steps));
  l1 *= duration / static_cast<double>(steps);

  const int finest = options_.max_refinements + 1;
  for (int level = 1;; ++level) {
    const double change = std::abs(fine - coarse);
    // Floor: quadrature round-off relative to the integrand's total variation.
    const double floor = 1e-12 * l1;
    if (change <= options_.rtol * std::abs(fine) + floor) {
      const double rel = std::abs(fine) > 0.0 ? change / std::abs(fine) : 0.0;
      return {prefactor_ * fine, steps, rel};
    }
    if (level == finest) {
      std::ostringstream os;
      os.precision(6);
      os << "amplitude quadrature did not converge at p_par=" << p_par << ", p_perp=" << std::sqrt(p_perp2)
         << " a.u. after " << steps << " steps: |M_2N - M_N| = " << change << ", |M_2N| = " << std::abs(fine);
      throw NumericalError(os.str());
    }
    const Samples& sn = samples_for_level(level + 1);
    std::vector<std::complex<double>> g(sn.t.size());
    for (std::size_t k = 0; k < g.size(); ++k) g[k] = (k % 2 == 0) ? f[k / 2] : integrand(sn, k);
    f = std::move(g);
    steps *= 2;
    coarse = fine;
    fine = simpson(f, 1, duration / static_cast<double>(steps));
  }
}

AmplitudeResult amplitude(const LaserPulse& pulse, const InitialState& state, const Vec3& p_electron,
                          QuadratureOptions options) {
  return AmplitudeEngine(pulse, state, options).evaluate(p_electron);
}

SpectrumMap spectrum(const LaserPulse& pulse, const InitialState& state, const MomentumGrid& grid,
                     QuadratureOptions options, unsigned workers) {
  grid.validate();
  const AmplitudeEngine engine(pulse, state, options);
  const Vec3 eps = pulse.polarization;

  // Amplitudes depend on p only through (p.eps, |p_perp|^2). Collect unique
  // keys in node order so the result is independent of scheduling.
  double scale = 0.0;
  for (const auto& ax : grid.axes) scale = std::max({scale, std::abs(ax.min), std::abs(ax.max)});
  const double quantum = std::max(scale, 1e-300) * 1e-12;

  const std::size_t n_nodes = grid.size();
  std::vector<std::size_t> node_key(n_nodes);
  std::vector<std::pair<double, double>> keys;
  std::vector<std::size_t> key_first_node;
  std::map<std::pair<long long, long long>, std::size_t> lookup;
  for (std::size_t i = 0; i < n_nodes; ++i) {
    const Vec3 p_e = -grid.node(i);
    const double par = dot(p_e, eps);
    const double perp2 = std::max(0.0, dot(p_e, p_e) - par * par);
    const auto key = std::make_pair(std::llround(par / quantum), std::llround(perp2 / (quantum * scale)));
    auto [it, inserted] = lookup.try_emplace(key, keys.size());
    if (inserted) {
      keys.emplace_back(par, perp2);
      key_first_node.push_back(i);
    }
    node_key[i] = it->second;
  }

  std::vector<double> mod2(keys.size());
  parallel_for(keys.size(), workers, [&](std::size_t k) {
    try {
      const auto r = engine.evaluate(keys[k].first, keys[k].second);
      mod2[k] = std::norm(r.value);
    } catch (const NumericalError& e) {
      const Vec3 p = grid.node(key_first_node[k]);
      throw NumericalError("spectrum: node " + std::to_string(key_first_node[k]) + " p_ion=" + format_vec(p) +
                           ": " + e.what());
    }
  });

  SpectrumMap map;
  map.grid = grid;
  map.meta.pulse = pulse;
  map.meta.state = state;
  map.values.resize(n_nodes);
  for (std::size_t i = 0; i < n_nodes; ++i) {
    map.values[i] = norm(grid.node(i)) * mod2[node_key[i]];
  }
  return map;
}

Profile cylinder_slice(const SpectrumMap& plane_zx, double rho_max_au) {
  const auto& g = plane_zx.grid;
  if (g.axes[0].pinned() || g.axes[2].pinned() || !g.axes[1].pinned()) {
    throw DomainError("cylinder_slice: expects a (p_z, p_x) plane map");
  }
  if (!(rho_max_au > 0.0)) throw DomainError("cylinder_slice: rho_max must be positive");
  const auto& ax = g.axes[0];
  const auto& az = g.axes[2];
  Profile out;
  out.x.resize(az.count);
  out.y.assign(az.count, 0.0);
  const double h = ax.spacing();
  for (std::size_t iz = 0; iz < az.count; ++iz) {
    out.x[iz] = az.value(iz);
    // Trapezoid in rho over the p_x >= 0 half, with the last partial interval
    // cut at rho_max by linear interpolation.
    double acc = 0.0;
    for (std::size_t ix = 0; ix + 1 < ax.count; ++ix) {
      const double r0 = ax.value(ix);
      const double r1 = ax.value(ix + 1);
      if (r1 <= 0.0 || r0 >= rho_max_au) continue;
      double lo = std::max(r0, 0.0);
      double hi = std::min(r1, rho_max_au);
      const double w0 = plane_zx.at(ix, 0, iz);
      const double w1 = plane_zx.at(ix + 1, 0, iz);
      auto w_at = [&](double r) { return w0 + (w1 - w0) * (r - r0) / h; };
      acc += 0.5 * (hi - lo) * (w_at(lo) * 2.0 * kPi * lo + w_at(hi) * 2.0 * kPi * hi);
    }
    out.y[iz] = acc;
  }
  return out;
}

// --- scalar diagnostics -----------------------------------------------------

Energy ponderomotive_energy(const LaserPulse& pulse) {
  pulse.validate();
  const double e0 = pulse.field_amplitude_au();
  const double w = pulse.omega_au();
  const double up = e0 * e0 / (4.0 * w * w);
  return {up, units::au_to_ev(up)};
}

std::string_view regime_label(Regime regime) {
  switch (regime) {
    case Regime::kMultiphoton:
      return "multiphoton";
    case Regime::kIntermediate:
      return "intermediate";
    case Regime::kTunneling:
      return "tunneling";
  }
  return "unknown";
}

KeldyshResult keldysh(const InitialState& state, const LaserPulse& pulse) {
  state.validate();
  const Energy up = ponderomotive_energy(pulse);
  KeldyshResult r;
  if (up.au <= 0.0) {
    r.infinite = true;
    r.gamma = std::numeric_limits<double>::infinity();
    r.regime = Regime::kMultiphoton;
    return r;
  }
  r.gamma = std::sqrt(state.ip_au() / (2.0 * up.au));
  r.regime = r.gamma > 3.0 ? Regime::kMultiphoton : (r.gamma < 1.0 / 3.0 ? Regime::kTunneling : Regime::kIntermediate);
  return r;
}

std::variant<ExcessEnergy, BelowThreshold> excess_energy(const InitialState& state, int photons,
                                                         const LaserPulse& pulse,
                                                         bool include_ponderomotive_shift) {
  state.validate();
  if (photons < 1) throw DomainError("excess_energy: photon number must be >= 1");
  const double w = pulse.omega_au();
  const double shift = include_ponderomotive_shift ? ponderomotive_energy(pulse).au : 0.0;
  const double threshold = state.ip_au() + shift;
  const double e = photons * w - threshold;
  if (!(e > 0.0)) {
    const int min_n = static_cast<int>(std::floor(threshold / w)) + 1;
    return BelowThreshold{photons, min_n};
  }
  ExcessEnergy out;
  out.photons = photons;
  out.energy = {e, units::au_to_ev(e)};
  out.momentum_au = std::sqrt(2.0 * e);
  out.includes_ponderomotive_shift = include_ponderomotive_shift;
  return out;
}

double excess_momentum_au(const Energy& excess) {
  if (excess.au < 0.0) throw DomainError("excess_momentum: negative energy");
  return std::sqrt(2.0 * excess.au);
}

// --- sampling ---------------------------------------------------------------

RecoilSampler::RecoilSampler(const SpectrumMap& map) : grid_(map.grid), values_(map.values) {
  grid_.validate();
  if (values_.size() != grid_.size()) throw DomainError("recoil sampler: value count does not match grid");
  for (double v : values_) {
    if (!(v >= 0.0)) throw DomainError("recoil sampler: spectrum has negative or NaN values");
  }
  std::size_t n_cells = 1;
  for (std::size_t a = 0; a < 3; ++a) {
    cells_per_axis_[a] = grid_.axes[a].pinned() ? 1 : grid_.axes[a].count - 1;
    n_cells *= cells_per_axis_[a];
  }
  cell_prob_.resize(n_cells);
  cell_max_.resize(n_cells);
  const int corners = 1 << grid_.active_dimensions();
  double total = 0.0;
  for (std::size_t cx = 0; cx < cells_per_axis_[0]; ++cx) {
    for (std::size_t cy = 0; cy < cells_per_axis_[1]; ++cy) {
      for (std::size_t cz = 0; cz < cells_per_axis_[2]; ++cz) {
        double sum = 0.0, mx = 0.0;
        for (int dx = 0; dx < 2; ++dx) {
          if (dx && grid_.axes[0].pinned()) continue;
          for (int dy = 0; dy < 2; ++dy) {
            if (dy && grid_.axes[1].pinned()) continue;
            for (int dz = 0; dz < 2; ++dz) {
              if (dz && grid_.axes[2].pinned()) continue;
              const double v = values_[grid_.index(cx + dx, cy + dy, cz + dz)];
              sum += v;
              mx = std::max(mx, v);
            }
          }
        }
        const std::size_t c = (cx * cells_per_axis_[1] + cy) * cells_per_axis_[2] + cz;
        cell_prob_[c] = sum / corners;
        cell_max_[c] = mx;
        total += cell_prob_[c];
      }
    }
  }
  if (!(total > 0.0)) throw DomainError("recoil sampler: spectrum map is identically zero");
  cdf_.resize(n_cells);
  double acc = 0.0;
  for (std::size_t c = 0; c < n_cells; ++c) {
    cell_prob_[c] /= total;
    acc += cell_prob_[c];
    cdf_[c] = acc;
  }
  cdf_.back() = 1.0;
}

double RecoilSampler::interpolate(const std::array<std::size_t, 3>& cell, const std::array<double, 3>& frac) const {
  double out = 0.0;
  for (int dx = 0; dx < 2; ++dx) {
    if (dx && grid_.axes[0].pinned()) continue;
    const double wx = grid_.axes[0].pinned() ? 1.0 : (dx ? frac[0] : 1.0 - frac[0]);
    for (int dy = 0; dy < 2; ++dy) {
      if (dy && grid_.axes[1].pinned()) continue;
      const double wy = grid_.axes[1].pinned() ? 1.0 : (dy ? frac[1] : 1.0 - frac[1]);
      for (int dz = 0; dz < 2; ++dz) {
        if (dz && grid_.axes[2].pinned()) continue;
        const double wz = grid_.axes[2].pinned() ? 1.0 : (dz ? frac[2] : 1.0 - frac[2]);
        out += wx * wy * wz * values_[grid_.index(cell[0] + dx, cell[1] + dy, cell[2] + dz)];
      }
    }
  }
  return out;
}

Vec3 RecoilSampler::sample(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double u = uni(rng);
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  std::size_t c = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cdf_.begin(), static_cast<std::ptrdiff_t>(cdf_.size()) - 1));
  // Skip zero-probability cells that upper_bound can land on at plateaus.
  while (cell_prob_[c] <= 0.0 && c + 1 < cdf_.size()) ++c;
  const std::array<std::size_t, 3> cell = {c / (cells_per_axis_[1] * cells_per_axis_[2]),
                                           (c / cells_per_axis_[2]) % cells_per_axis_[1], c % cells_per_axis_[2]};
  for (;;) {
    std::array<double, 3> frac{};
    for (std::size_t a = 0; a < 3; ++a) frac[a] = grid_.axes[a].pinned() ? 0.0 : uni(rng);
    if (uni(rng) * cell_max_[c] <= interpolate(cell, frac)) {
      Vec3 p;
      for (std::size_t a = 0; a < 3; ++a) {
        const auto& ax = grid_.axes[a];
        p[static_cast<int>(a)] = ax.pinned() ? ax.min : ax.value(cell[a]) + frac[a] * ax.spacing();
      }
      return p;
    }
  }
}

std::vector<Vec3> sample_recoil_momenta(const SpectrumMap& map, std::size_t n, std::uint64_t seed, unsigned workers) {
  const RecoilSampler sampler(map);
  if (n == 0) return {};
  std::vector<Vec3> out(n);
  parallel_for(n, workers, [&](std::size_t i) {
    auto rng = substream(seed, streams::kRecoilSampling, i);
    out[i] = sampler.sample(rng);
  });
  return out;
}

}  // namespace motrims::strongfield
