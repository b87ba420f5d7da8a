#pragma once

// Two-atom level structure, Hamiltonian assembly, dissipation, leakage,
// motional dephasing and the two-photon ladder.
//
// Control atom levels {0, 1, R', r'}, target atom levels {0, 1, r, R}. When
// the two-photon ladder is resolved each atom gains an intermediate level P.
// Leakage states are appended after the product space.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "rydgate/core.hpp"
#include "rydgate/hamiltonian.hpp"
#include "rydgate/pulse.hpp"

namespace rydgate {

enum class Atom : std::size_t { control = 0, target = 1 };

inline std::size_t factor(Atom a) { return static_cast<std::size_t>(a); }

inline const std::vector<std::string>& control_levels() {
  static const std::vector<std::string> l{"0", "1", "R'", "r'"};
  return l;
}
inline const std::vector<std::string>& target_levels() {
  static const std::vector<std::string> l{"0", "1", "r", "R"};
  return l;
}

// ---------------------------------------------------------------------------
// Model description

struct LeakageChannel {
  std::string label;
  std::string control_level;  // source pair state |control_level, target_level>
  std::string target_level;
  double coupling = 0.0;  // rad/us
  double detuning = 0.0;  // rad/us
};

/// Default channels: |R'r> -> L1 and |r'R> -> L2.
inline std::vector<LeakageChannel> default_leakage_channels() {
  return {{"L1", "R'", "r", mhz(120.0), mhz(65.0)}, {"L2", "r'", "R", mhz(156.8), mhz(190.0)}};
}

enum class LadderModulation { red, blue };

struct TwoPhotonLadder {
  double omega_r = 0.0;
  double omega_b = 0.0;
  double delta = 0.0;
  double gamma_p = 0.0;
  // Which leg carries the pulse envelope and phase; the other is held at its
  // peak Rabi frequency while the drive is on.
  LadderModulation modulation = LadderModulation::red;

  double effective_rabi() const {
    if (delta == 0.0) throw Error("TwoPhotonLadder: delta must be non-zero");
    return omega_r * omega_b / (2.0 * delta);
  }
  /// True when |delta| is less than 5x the larger single-photon Rabi frequency.
  bool weak_detuning() const { return std::abs(delta) < 5.0 * std::max(std::abs(omega_r), std::abs(omega_b)); }
};

/// Cs 6S -> 6P3/2 -> nS ladder of the numerical examples.
inline TwoPhotonLadder default_ladder() { return {mhz(245.0), mhz(80.0), mhz(1225.0), mhz(3.2), LadderModulation::red}; }

enum class InteractionForm {
  exchange,     // V(|r'R><R'r| + h.c.)
  level_shift,  // V|R'r><R'r|, used by the blockade baseline
};

struct AtomPairModel {
  double V = mhz(298.0);
  std::function<double(double)> V_of_t;  // overrides V when set
  std::optional<double> C3;              // rad/us um^3
  std::optional<double> distance;        // um
  InteractionForm interaction = InteractionForm::exchange;
  std::vector<LeakageChannel> leakage;
  std::optional<TwoPhotonLadder> ladder;  // set: resolve the intermediate level
  bool stark_compensation = true;

  static AtomPairModel from_c3(double c3, double d) {
    if (!(c3 > 0) || !(d > 0)) throw Error("AtomPairModel: C3 and distance must be positive");
    AtomPairModel m;
    m.C3 = c3;
    m.distance = d;
    m.V = c3 / (d * d * d);
    return m;
  }

  double V_at(double t) const { return V_of_t ? V_of_t(t) : V; }

  void validate() const {
    if (!V_of_t && !(V > 0)) throw Error("AtomPairModel: V must be positive");
    if (C3 && distance && !V_of_t) {
      const double ref = *C3 / std::pow(*distance, 3);
      if (std::abs(V - ref) > 1e-9 * ref) throw Error("AtomPairModel: V inconsistent with C3/d^3");
    }
    for (std::size_t i = 0; i < leakage.size(); ++i)
      for (std::size_t j = i + 1; j < leakage.size(); ++j)
        if (leakage[i].label == leakage[j].label) throw Error("duplicate leakage channel label '" + leakage[i].label + "'");
  }
};

/// V(t) = C3 / (a t)^3: distance growing linearly in time.
inline std::function<double(double)> receding_interaction(double c3, double a) {
  return [c3, a](double t) {
    const double d = a * t;
    return c3 / (d * d * d);
  };
}

inline HilbertSpace model_space(const AtomPairModel& m) {
  auto c = control_levels();
  auto t = target_levels();
  if (m.ladder) {
    c.push_back("P");
    t.push_back("P");
  }
  std::vector<std::string> extras;
  for (const auto& ch : m.leakage) extras.push_back(ch.label);
  return HilbertSpace({c, t}, extras);
}

inline AtomPairModel with_leakage_channels(const AtomPairModel& model, const std::vector<LeakageChannel>& channels) {
  AtomPairModel out = model;
  const auto base = model_space(model);
  for (const auto& ch : channels) {
    if (!base.has_level(0, ch.control_level) || !base.has_level(1, ch.target_level))
      throw Error("leakage channel '" + ch.label + "': unknown source pair state");
    if (!std::isfinite(ch.coupling) || !std::isfinite(ch.detuning))
      throw Error("leakage channel '" + ch.label + "': non-finite coupling or detuning");
    out.leakage.push_back(ch);
  }
  out.validate();
  return out;
}

// ---------------------------------------------------------------------------
// Motional dephasing

enum class VelocityMode { constant, gaussian };

inline constexpr double boltzmann = 1.380649e-23;  // J/K
inline constexpr double cesium_mass = 2.207e-25;   // kg

/// sqrt(k_B T / m) in um/us (numerically equal to m/s).
inline double thermal_speed(double temperature_uK, double mass_kg = cesium_mass) {
  if (temperature_uK < 0 || !(mass_kg > 0)) throw Error("thermal_speed: invalid temperature or mass");
  return std::sqrt(boltzmann * temperature_uK * 1e-6 / mass_kg);
}

struct DopplerModel {
  bool enabled = false;
  double temperature_uK = 0.0;
  double k_eff = two_pi * (1.0 / 0.509 - 1.0 / 0.852);  // rad/um
  double mass_kg = cesium_mass;
  bool echo = false;
  VelocityMode mode = VelocityMode::constant;
  double spread = 0.1;                  // Gaussian std as a fraction of |v|
  std::optional<double> speed_override;  // um/us

  double mean_speed() const { return speed_override ? *speed_override : thermal_speed(temperature_uK, mass_kg); }
};

/// Velocity of the atom driven in one protocol step.
struct StepMotion {
  double t0 = 0.0;
  double t1 = 0.0;
  double velocity = 0.0;
};

struct DopplerProfile {
  std::vector<StepMotion> steps;
};

template <class Rng>
DopplerProfile sample_doppler_profile(const DopplerModel& dop, const std::vector<std::pair<double, double>>& windows,
                                      Rng& rng) {
  DopplerProfile p;
  const double v = dop.enabled ? dop.mean_speed() : 0.0;
  for (const auto& [a, b] : windows) {
    double vk = v;
    if (dop.enabled && dop.mode == VelocityMode::gaussian && v > 0) {
      std::normal_distribution<double> dist(v, dop.spread * v);
      vk = dist(rng);
    }
    p.steps.push_back({a, b, vk});
  }
  return p;
}

/// Accumulated Doppler phase k v s, s measured from the step start. With
/// echo the detuning reverses at the step midpoint, so the phase returns to
/// zero at the step end.
inline double doppler_phase(const DopplerModel& dop, const StepMotion& step, double t) {
  if (!dop.enabled) return 0.0;
  const double s = std::clamp(t, step.t0, step.t1) - step.t0;
  const double tau = step.t1 - step.t0;
  const double kv = dop.k_eff * step.velocity;
  if (!dop.echo || s <= 0.5 * tau) return kv * s;
  return kv * (tau - s);
}

inline double doppler_phase(const DopplerModel& dop, const DopplerProfile& prof, std::size_t step_index, double t) {
  if (step_index >= prof.steps.size()) throw Error("doppler_phase: step index out of range");
  return doppler_phase(dop, prof.steps[step_index], t);
}

// ---------------------------------------------------------------------------
// Hamiltonian assembly

/// H_d (or the blockade level shift), leakage couplings and the detuned
/// intermediate levels. Leakage and P energies are time independent.
inline void add_interaction(TimeDependentHamiltonian& H, const HilbertSpace& space, const AtomPairModel& model) {
  const auto d = space.dim();
  const auto Rr = space.index(std::vector<std::string>{"R'", "r"});
  const auto rR = space.index(std::vector<std::string>{"r'", "R"});
  Operator m = Operator::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  if (model.interaction == InteractionForm::exchange) {
    m(static_cast<Eigen::Index>(rR), static_cast<Eigen::Index>(Rr)) = 1.0;
    m(static_cast<Eigen::Index>(Rr), static_cast<Eigen::Index>(rR)) = 1.0;
  } else {
    m(static_cast<Eigen::Index>(Rr), static_cast<Eigen::Index>(Rr)) = 1.0;
  }
  if (model.V_of_t)
    H.add_real_term(m, model.V_of_t);
  else
    H.add_static(model.V * m);

  for (const auto& ch : model.leakage) {
    const auto L = space.extra_index(ch.label);
    const auto src = space.index(std::vector<std::string>{ch.control_level, ch.target_level});
    H.add_static_entry(L, L, ch.detuning);
    H.add_static_entry(L, src, ch.coupling);
    H.add_static_entry(src, L, ch.coupling);
  }

  if (model.ladder) {
    for (std::size_t f = 0; f < 2; ++f)
      H.add_static(model.ladder->delta * local_transition(space, f, "P", "P"));
  }
}

/// One resonant transition lower -> upper driven by `schedule`.
struct DriveLine {
  std::string lower;
  PulseSchedule schedule;
};

/// Adds the drives of one atom. In the effective picture each line gives
/// <upper|H|lower> = W(t)/2 with W = |W| e^{-i phi} e^{i phi_D}. With the
/// ladder resolved the same W is realized through |lower> -> P -> |upper>;
/// the red leg carries a pi phase so that adiabatic elimination returns +W/2,
/// and the second-order light shifts are optionally cancelled.
inline void add_atom_drive(TimeDependentHamiltonian& H, const HilbertSpace& space, const AtomPairModel& model,
                           Atom atom, const std::string& upper, const std::vector<DriveLine>& lines,
                           std::function<double(double)> doppler = {}) {
  const auto f = factor(atom);
  for (const auto& line : lines) H.add_breakpoints(line.schedule.breakpoints());
  std::vector<std::function<cplx(double)>> w;
  for (const auto& line : lines) {
    auto sched = line.schedule;
    w.push_back([sched, doppler](double t) {
      cplx c = 0.5 * sched.complex_amplitude(t);
      if (doppler) c *= std::exp(I_unit * doppler(t));
      return c;
    });
  }

  if (!model.ladder) {
    for (std::size_t k = 0; k < lines.size(); ++k)
      H.add_term(local_transition(space, f, upper, lines[k].lower), w[k]);
    return;
  }

  const auto& lad = *model.ladder;
  if (lad.delta == 0.0 || lad.omega_b == 0.0 || lad.omega_r == 0.0)
    throw Error("two-photon ladder needs non-zero delta, omega_r and omega_b");
  const double D = lad.delta;
  std::vector<std::function<cplx(double)>> red;
  std::function<cplx(double)> blue;

  if (lad.modulation == LadderModulation::red) {
    const double scale = -2.0 * D / lad.omega_b;
    for (std::size_t k = 0; k < lines.size(); ++k) red.push_back([wk = w[k], scale](double t) { return scale * wk(t); });
    const cplx b = 0.5 * lad.omega_b;
    blue = [b](double) { return b; };
  } else {
    // Lines must share one complex envelope: w_k(t) = f(t) u_k.
    double t0 = lines.front().schedule.t_start(), t1 = lines.front().schedule.t_end();
    for (const auto& line : lines) {
      t0 = std::min(t0, line.schedule.t_start());
      t1 = std::max(t1, line.schedule.t_end());
    }
    std::vector<cplx> u(lines.size());
    std::size_t ref = 0;
    double best = 0.0;
    std::vector<double> probe;
    for (int i = 0; i < 257; ++i) probe.push_back(t0 + (t1 - t0) * (i + 0.5) / 257.0);
    for (double t : probe) {
      double tot = 0.0;
      for (std::size_t k = 0; k < lines.size(); ++k) tot += std::norm(w[k](t));
      if (tot > best) {
        best = tot;
        for (std::size_t k = 0; k < lines.size(); ++k) u[k] = w[k](t);
      }
    }
    if (best == 0.0) throw Error("two-photon ladder: drive lines are identically zero");
    for (std::size_t k = 0; k < lines.size(); ++k)
      if (std::abs(u[k]) > std::abs(u[ref])) ref = k;
    const cplx uref = u[ref];
    double unorm = 0.0;
    for (auto& uk : u) {
      uk /= uref;
      unorm += std::norm(uk);
    }
    unorm = std::sqrt(unorm);
    for (double t : probe)
      for (std::size_t k = 0; k < lines.size(); ++k)
        if (std::abs(w[k](t) - w[ref](t) * u[k]) > 1e-9 * std::sqrt(best))
          throw Error("two-photon ladder: blue-leg modulation needs drive lines with a common envelope");
    for (std::size_t k = 0; k < lines.size(); ++k) {
      const cplx a = -0.5 * lad.omega_r * u[k] / unorm;
      red.push_back([a, t0, t1](double t) { return (t >= t0 && t <= t1) ? a : cplx{}; });
    }
    H.add_breakpoints({t0, t1});
    const double scale = 2.0 * D * unorm / lad.omega_r;
    blue = [wr = w[ref], scale](double t) { return scale * wr(t); };
  }
  for (std::size_t k = 0; k < lines.size(); ++k) H.add_term(local_transition(space, f, "P", lines[k].lower), red[k]);
  H.add_term(local_transition(space, f, upper, "P"), blue);

  if (!model.stark_compensation) return;
  // Second-order shifts through P are -conj(c_k) c_l / delta; add them back.
  const double inv = 1.0 / D;
  H.add_real_term(local_transition(space, f, upper, upper), [blue, inv](double t) { return std::norm(blue(t)) * inv; });
  for (std::size_t k = 0; k < lines.size(); ++k) {
    H.add_real_term(local_transition(space, f, lines[k].lower, lines[k].lower),
                    [rk = red[k], inv](double t) { return std::norm(rk(t)) * inv; });
    for (std::size_t l = k + 1; l < lines.size(); ++l)
      H.add_term(local_transition(space, f, lines[k].lower, lines[l].lower),
                 [rk = red[k], rl = red[l], inv](double t) { return std::conj(rk(t)) * rl(t) * inv; });
  }
}

inline std::vector<DriveLine> target_lines(const TargetSchedules& s) { return {{"0", s.zero}, {"1", s.one}}; }

/// Control drive |1> <-> |R'| tensored with the target identity.
inline Operator hamiltonian_step1(const PulseSchedule& sched, double t) {
  const auto space = model_space(AtomPairModel{});
  TimeDependentHamiltonian H(space.dim());
  add_atom_drive(H, space, AtomPairModel{}, Atom::control, "R'", {{"1", sched}});
  return H.dense(t);
}

/// Target drives on |0>,|1> <-> |r> plus the pair interaction.
inline Operator hamiltonian_step2(const TargetSchedules& scheds, const AtomPairModel& model, double t) {
  const auto space = model_space(model);
  TimeDependentHamiltonian H(space.dim());
  add_interaction(H, space, model);
  add_atom_drive(H, space, model, Atom::target, "r", target_lines(scheds));
  return H.dense(t);
}

// ---------------------------------------------------------------------------
// Dark and bright states

struct DarkBrightStates {
  StateVector bright;   // target atom, basis {|0>, |1>}
  StateVector dark;     // target atom, basis {|0>, |1>}
  StateVector dark2;    // pair, basis {|R'b>, |R'r>, |r'R>}
  StateVector bright_plus;
  StateVector bright_minus;
  double N = 0.0;
};

/// `omega_t` is |W_t| e^{i phi2}.
inline DarkBrightStates dark_bright_decomposition(double Theta, double phi, cplx omega_t, double V) {
  DarkBrightStates s;
  const double c = std::cos(Theta / 2), sn = std::sin(Theta / 2);
  s.bright = StateVector(2);
  s.bright << sn * std::exp(I_unit * phi), c;
  s.dark = StateVector(2);
  s.dark << c, -sn * std::exp(-I_unit * phi);
  s.N = std::sqrt(V * V + std::norm(omega_t) / 4.0);
  if (!(s.N > 0)) throw Error("dark_bright_decomposition: undefined for omega_t = V = 0");
  s.dark2 = StateVector(3);
  s.dark2 << V / s.N, 0.0, -std::conj(omega_t) / (2.0 * s.N);
  const double r = std::sqrt(2.0) * s.N;
  s.bright_plus = StateVector(3);
  s.bright_plus << omega_t / (2.0 * r), s.N / r, V / r;
  s.bright_minus = StateVector(3);
  s.bright_minus << omega_t / (2.0 * r), -s.N / r, V / r;
  return s;
}

/// Full-space vectors |R'b>, |R'r>, |r'R>.
inline std::array<StateVector, 3> pair_block_basis(const HilbertSpace& space, double Theta, double phi) {
  const auto d = space.dim();
  const auto at = [&](const char* c, const char* t) {
    return basis_state(d, space.index(std::vector<std::string>{c, t}));
  };
  const auto db = dark_bright_decomposition(Theta, phi, 0.0, 1.0);
  StateVector Rb = db.bright(0) * at("R'", "0") + db.bright(1) * at("R'", "1");
  return {Rb, at("R'", "r"), at("r'", "R")};
}

// ---------------------------------------------------------------------------
// Dissipation

struct CollapseChannel {
  Operator op;
  double rate = 0.0;
  std::string name;
};

using DecayRates = std::array<double, 12>;

inline DecayRates default_decay_rates() {
  return {khz(0.425), khz(0.425), khz(0.213), khz(0.213), khz(0.169), khz(0.169),
          khz(0.336), khz(0.336), khz(1.0),   khz(1.0),   khz(1.0),   khz(1.0)};
}

inline DecayRates blockade_decay_rates() {
  auto r = default_decay_rates();
  for (int k : {3, 4, 5, 6, 10, 11}) r[static_cast<std::size_t>(k - 1)] = 0.0;
  return r;
}

/// A1..A8 decays and A9..A12 dephasings, embedded in `space`.
inline std::vector<CollapseChannel> collapse_set(const HilbertSpace& space, const DecayRates& rates) {
  for (double r : rates)
    if (!(r >= 0) || !std::isfinite(r)) throw Error("collapse_set: rates must be finite and non-negative");
  const std::size_t c = 0, t = 1;
  auto tr = [&](std::size_t f, const char* to, const char* from) { return local_transition(space, f, to, from); };
  auto deph = [&](std::size_t f, const char* e) { return Operator(tr(f, e, e) - tr(f, "0", "0") - tr(f, "1", "1")); };
  std::vector<Operator> ops{tr(c, "0", "R'"), tr(c, "1", "R'"), tr(c, "0", "r'"), tr(c, "1", "r'"),
                            tr(t, "0", "R"),  tr(t, "1", "R"),  tr(t, "0", "r"),  tr(t, "1", "r"),
                            deph(c, "R'"),    deph(c, "r'"),    deph(t, "R"),     deph(t, "r")};
  std::vector<CollapseChannel> out;
  for (std::size_t k = 0; k < 12; ++k) out.push_back({ops[k], rates[k], "A" + std::to_string(k + 1)});
  return out;
}

/// Spontaneous decay of the intermediate level back to the driven grounds.
inline std::vector<CollapseChannel> intermediate_decay(const HilbertSpace& space, double gamma_p) {
  std::vector<CollapseChannel> out;
  if (!space.has_level(0, "P")) return out;
  out.push_back({local_transition(space, 0, "1", "P"), gamma_p, "P_c->1"});
  out.push_back({local_transition(space, 1, "0", "P"), 0.5 * gamma_p, "P_t->0"});
  out.push_back({local_transition(space, 1, "1", "P"), 0.5 * gamma_p, "P_t->1"});
  return out;
}

// ---------------------------------------------------------------------------
// Two-photon ladder in isolation

struct LadderHamiltonians {
  Operator full;       // basis {|g>, |P>, |e>}
  Operator effective;  // basis {|g>, |e>}
  double omega_eff = 0.0;
};

inline LadderHamiltonians two_photon_hamiltonians(const TwoPhotonLadder& lad) {
  if (lad.delta == 0.0) throw Error("two_photon_hamiltonians: delta must be non-zero");
  LadderHamiltonians h;
  h.full = Operator::Zero(3, 3);
  h.full(1, 1) = lad.delta;
  h.full(1, 0) = h.full(0, 1) = 0.5 * lad.omega_r;
  h.full(2, 1) = h.full(1, 2) = 0.5 * lad.omega_b;
  h.omega_eff = lad.effective_rabi();
  h.effective = Operator::Zero(2, 2);
  h.effective(1, 0) = h.effective(0, 1) = 0.5 * h.omega_eff;
  return h;
}

}  // namespace rydgate
