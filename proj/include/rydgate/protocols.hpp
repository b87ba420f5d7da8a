#pragma once

// Three-step gate protocols (super-robust, dark-state and blockade
// baselines), channel tomography and the ideal comparators.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rydgate/core.hpp"
#include "rydgate/hamiltonian.hpp"
#include "rydgate/model.hpp"
#include "rydgate/parallel.hpp"
#include "rydgate/propagation.hpp"
#include "rydgate/pulse.hpp"

namespace rydgate {

struct GateSpec {
  std::string name = "CZ";
  double Theta = 0.0;
  double phi = 0.0;
};

inline GateSpec gate_cz() { return {"CZ", 0.0, 0.0}; }
inline GateSpec gate_cnot() { return {"CNOT", -pi / 2, 0.0}; }
inline GateSpec gate_chadamard() { return {"CHadamard", -pi / 4, 0.0}; }

inline GateSpec gate_from_name(const std::string& name) {
  if (name == "CZ") return gate_cz();
  if (name == "CNOT") return gate_cnot();
  if (name == "CHadamard") return gate_chadamard();
  throw Error("unknown gate '" + name + "' (expected CZ, CNOT or CHadamard)");
}

enum class Scheme { super_robust, dark_state, blockade };

inline std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::super_robust: return "super_robust";
    case Scheme::dark_state: return "dark_state";
    case Scheme::blockade: return "blockade";
  }
  return "?";
}

inline Scheme scheme_from_string(const std::string& s) {
  if (s == "super_robust") return Scheme::super_robust;
  if (s == "dark_state") return Scheme::dark_state;
  if (s == "blockade") return Scheme::blockade;
  throw Error("unknown scheme '" + s + "'");
}

/// Target operation on the qubit {|0>, |1>} when the control is in |0>.
inline Operator target_operation(double Theta, double phi) {
  Operator u(2, 2);
  u << std::cos(Theta), -std::exp(I_unit * phi) * std::sin(Theta), -std::exp(-I_unit * phi) * std::sin(Theta),
      -std::cos(Theta);
  return u;
}

/// |0><0| (x) U_t + |1><1| (x) I in the basis |c t>, index 2c + t.
inline Operator ideal_two_qubit_unitary(const GateSpec& g) {
  Operator u = Operator::Zero(4, 4);
  u.topLeftCorner(2, 2) = target_operation(g.Theta, g.phi);
  u.bottomRightCorner(2, 2) = Operator::Identity(2, 2);
  return u;
}

/// pi - 2pi - pi blockade sequence: phase -1 on every state but |00>.
inline Operator blockade_comparator() {
  Operator u = Operator::Zero(4, 4);
  u(0, 0) = 1.0;
  u(1, 1) = u(2, 2) = u(3, 3) = -1.0;
  return u;
}

struct ScenarioConfig {
  GateSpec gate = gate_cz();
  Scheme scheme = Scheme::super_robust;
  double omega_max = mhz(8.0);
  double xi = 0.0;
  double epsilon = 0.0;
  AtomPairModel model;
  double rri_fluctuation = 0.0;  // V -> (1 + value) V for the whole run
  DecayRates rates = default_decay_rates();
  DopplerModel doppler;
  std::size_t steps = 4000;  // RK4 steps per protocol step
  double max_phase_per_step = 0.5;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;  // threads for the tomography propagations

  void validate() const {
    if (!(xi >= -1.0) || !(epsilon >= -1.0)) throw Error("xi and epsilon must be >= -1");
    if (steps < 100) throw Error("integrator steps must be >= 100");
    if (!(omega_max > 0)) throw Error("omega_max must be positive");
    if (!(rri_fluctuation > -1.0)) throw Error("rri_fluctuation must be > -1");
    for (double r : rates)
      if (!(r >= 0)) throw Error("decay rates must be non-negative");
    model.validate();
  }
};

struct ProtocolStep {
  std::string name;
  double t0 = 0.0;
  double t1 = 0.0;
  TimeDependentHamiltonian H;
};

struct Protocol {
  HilbertSpace space;
  std::vector<ProtocolStep> steps;
  std::vector<CollapseChannel> channels;
  Operator ideal;  // 4x4 comparator
  DopplerProfile motion;
};

namespace detail {

inline AtomPairModel effective_model(const ScenarioConfig& cfg) {
  AtomPairModel m = cfg.model;
  const double s = 1.0 + cfg.rri_fluctuation;
  if (m.V_of_t) {
    auto f = m.V_of_t;
    m.V_of_t = [f, s](double t) { return s * f(t); };
  }
  m.V *= s;
  m.C3.reset();
  m.distance.reset();
  if (cfg.scheme == Scheme::blockade) m.interaction = InteractionForm::level_shift;
  return m;
}

inline PulseSchedule constant_pulse(DriveChannel ch, double t0, double duration, double amplitude, double phase) {
  return PulseSchedule(ch, {{t0, t0 + duration, ConstEnvelope{amplitude}, phase}});
}

/// Splits a single-segment total drive onto |0>,|1> <-> |r> per (Theta, phi).
inline TargetSchedules split_target(const PulseSchedule& total, double Theta, double phi) {
  const double c = std::cos(Theta / 2), s = std::sin(Theta / 2);
  auto part = [&](double weight, double extra, DriveChannel ch) {
    auto segs = total.segments();
    for (auto& seg : segs) {
      seg.envelope = scaled(seg.envelope, std::abs(weight));
      seg.phase += extra + (weight < 0 ? pi : 0.0);
    }
    return PulseSchedule(ch, std::move(segs));
  };
  TargetSchedules out;
  out.zero = part(s, phi, DriveChannel::target_0_r);
  out.one = part(c, 0.0, DriveChannel::target_1_r);
  out.tau2 = total.duration();
  return out;
}

}  // namespace detail

/// Control and target schedules of each scheme, before any Rabi error.
struct ProtocolPulses {
  PulseSchedule step1;
  TargetSchedules step2;
  PulseSchedule step3;
};

inline ProtocolPulses protocol_pulses(const ScenarioConfig& cfg) {
  const double W = cfg.omega_max;
  const auto& g = cfg.gate;
  ProtocolPulses p;
  switch (cfg.scheme) {
    case Scheme::super_robust: {
      p.step1 = control_schedule_table1(W, 0.0);
      const double tau1 = p.step1.t_end();
      p.step2 = target_schedule_table2(g.Theta, g.phi, 2.0 * W / 3.0, tau1);
      p.step3 = inverse_schedule(p.step1, tau1 + p.step2.tau2);
      break;
    }
    case Scheme::dark_state: {
      p.step1 = detail::constant_pulse(DriveChannel::control_1_Rp, 0.0, pi / W, W, 0.0);
      const double tau1 = p.step1.t_end();
      const double c = std::abs(std::cos(g.Theta / 2));
      if (c < 1e-12) throw Error("dark-state baseline: cos(Theta/2) = 0 leaves tau2 undefined");
      const double tau2 = 6.0 * pi * c / W;
      PulseSchedule total(DriveChannel::target_1_r,
                          {{tau1, tau1 + tau2, Sin2Envelope{4.0 * pi / tau2, tau1, tau2 / 4.0}, 0.0}});
      p.step2 = detail::split_target(total, g.Theta, g.phi);
      p.step3 = inverse_schedule(p.step1, tau1 + tau2);
      break;
    }
    case Scheme::blockade: {
      p.step1 = detail::constant_pulse(DriveChannel::control_1_Rp, 0.0, pi / W, W, 0.0);
      const double tau1 = p.step1.t_end();
      const double tau2 = two_pi / W;
      p.step2.one = detail::constant_pulse(DriveChannel::target_1_r, tau1, tau2, W, 0.0);
      p.step2.tau2 = tau2;
      p.step3 = detail::constant_pulse(DriveChannel::control_1_Rp, tau1 + tau2, pi / W, W, 0.0);
      break;
    }
  }
  return p;
}

inline Protocol build_protocol(const ScenarioConfig& cfg) {
  cfg.validate();
  const AtomPairModel model = detail::effective_model(cfg);
  Protocol proto;
  proto.space = model_space(model);
  const auto pulses = protocol_pulses(cfg);
  const auto s1 = apply_rabi_error(pulses.step1, cfg.xi);
  const auto s3 = apply_rabi_error(pulses.step3, cfg.xi);
  TargetSchedules s2 = pulses.step2;
  if (cfg.scheme == Scheme::blockade)
    s2.one = apply_rabi_error(s2.one, cfg.epsilon);
  else
    s2 = apply_rabi_error(s2, cfg.epsilon);

  const std::vector<std::pair<double, double>> windows{
      {s1.t_start(), s1.t_end()}, {s2.one.t_start(), s2.one.t_end()}, {s3.t_start(), s3.t_end()}};
  std::mt19937_64 rng(cfg.seed);
  proto.motion = sample_doppler_profile(cfg.doppler, windows, rng);

  auto doppler_fn = [&](std::size_t k) -> std::function<double(double)> {
    if (!cfg.doppler.enabled) return {};
    return [dop = cfg.doppler, step = proto.motion.steps[k]](double t) { return doppler_phase(dop, step, t); };
  };

  const auto& space = proto.space;
  auto make_step = [&](std::string name, std::size_t k, Atom atom, const std::string& upper,
                       const std::vector<DriveLine>& lines) {
    ProtocolStep st;
    st.name = std::move(name);
    st.t0 = windows[k].first;
    st.t1 = windows[k].second;
    st.H = TimeDependentHamiltonian(space.dim());
    add_interaction(st.H, space, model);
    add_atom_drive(st.H, space, model, atom, upper, lines, doppler_fn(k));
    return st;
  };
  proto.steps.push_back(make_step("step (i)", 0, Atom::control, "R'", {{"1", s1}}));
  if (cfg.scheme == Scheme::blockade)
    proto.steps.push_back(make_step("step (ii)", 1, Atom::target, "r", {{"1", s2.one}}));
  else
    proto.steps.push_back(make_step("step (ii)", 1, Atom::target, "r", target_lines(s2)));
  proto.steps.push_back(make_step("step (iii)", 2, Atom::control, "R'", {{"1", s3}}));

  DecayRates rates = cfg.rates;
  if (cfg.scheme == Scheme::blockade)
    for (int k : {3, 4, 5, 6, 10, 11}) rates[static_cast<std::size_t>(k - 1)] = 0.0;
  for (auto& ch : collapse_set(space, rates))
    if (ch.rate > 0) proto.channels.push_back(std::move(ch));
  if (model.ladder)
    for (auto& ch : intermediate_decay(space, model.ladder->gamma_p))
      if (ch.rate > 0) proto.channels.push_back(std::move(ch));

  proto.ideal = cfg.scheme == Scheme::blockade ? blockade_comparator() : ideal_two_qubit_unitary(cfg.gate);
  return proto;
}

inline PropagationOptions step_options(const ScenarioConfig& cfg) {
  PropagationOptions opt;
  opt.steps = cfg.steps;
  opt.max_phase_per_step = cfg.max_phase_per_step;
  return opt;
}

namespace detail {

inline std::string step_error(const ProtocolStep& st, std::size_t k, const PropagationError& e) {
  return st.name + " [index " + std::to_string(k) + "]: " + e.reason();
}

}  // namespace detail

/// Propagates a density matrix through all steps. Snapshots of every step
/// are concatenated when opt.snapshot_every > 0.
inline Trajectory<DensityMatrix> evolve_density(const Protocol& proto, const DensityMatrix& rho0,
                                                const PropagationOptions& opt) {
  Trajectory<DensityMatrix> all;
  DensityMatrix rho = rho0;
  for (std::size_t k = 0; k < proto.steps.size(); ++k) {
    const auto& st = proto.steps[k];
    Trajectory<DensityMatrix> tr;
    try {
      tr = propagate_density(st.H, rho, proto.channels, st.t0, st.t1, opt);
    } catch (const PropagationError& e) {
      throw PropagationError(detail::step_error(st, k, e), e.time());
    }
    const std::size_t first = all.times.empty() ? 0 : 1;
    for (std::size_t i = first; i < tr.times.size(); ++i) {
      all.times.push_back(tr.times[i]);
      all.states.push_back(tr.states[i]);
    }
    all.steps_taken += tr.steps_taken;
    all.worst_min_eigenvalue = std::min(all.worst_min_eigenvalue, tr.worst_min_eigenvalue);
    rho = tr.final_state();
  }
  return all;
}

inline Trajectory<StateVector> evolve_state(const Protocol& proto, const StateVector& psi0,
                                            const PropagationOptions& opt) {
  Trajectory<StateVector> all;
  StateVector psi = psi0;
  for (std::size_t k = 0; k < proto.steps.size(); ++k) {
    const auto& st = proto.steps[k];
    Trajectory<StateVector> tr;
    try {
      tr = propagate_state(st.H, psi, st.t0, st.t1, opt);
    } catch (const PropagationError& e) {
      throw PropagationError(detail::step_error(st, k, e), e.time());
    }
    const std::size_t first = all.times.empty() ? 0 : 1;
    for (std::size_t i = first; i < tr.times.size(); ++i) {
      all.times.push_back(tr.times[i]);
      all.states.push_back(tr.states[i]);
    }
    all.steps_taken += tr.steps_taken;
    psi = tr.final_state();
  }
  return all;
}

/// Images of the computational operator basis |i><j| (index 4i + j),
/// projected back onto the qubit block.
struct QuantumChannel {
  std::array<Operator, 16> images;

  Operator apply(const Operator& rho) const {
    if (rho.rows() != 4 || rho.cols() != 4) throw DimensionError("QuantumChannel::apply: expects a 4x4 operator");
    Operator out = Operator::Zero(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        if (rho(i, j) != cplx{}) out += rho(i, j) * images[static_cast<std::size_t>(4 * i + j)];
    return out;
  }

  static QuantumChannel identity() {
    QuantumChannel ch;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) ch.images[static_cast<std::size_t>(4 * i + j)] = basis_op(4, static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    return ch;
  }

  static QuantumChannel from_unitary(const Operator& U) {
    QuantumChannel ch;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        ch.images[static_cast<std::size_t>(4 * i + j)] =
            U * basis_op(4, static_cast<std::size_t>(i), static_cast<std::size_t>(j)) * U.adjoint();
    return ch;
  }
};

/// Builds the channel from an evolver mapping full-space operators to
/// full-space operators. Only i <= j are propagated; the rest follow from
/// Xi(X^dag) = Xi(X)^dag, which the master equation preserves.
template <class Evolver>
QuantumChannel channel_tomography(Evolver&& evolve, const HilbertSpace& space, std::size_t jobs = 1) {
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < 4; ++i)
    for (int j = i; j < 4; ++j) pairs.push_back({i, j});
  QuantumChannel ch;
  parallel_for(pairs.size(), jobs, [&](std::size_t k) {
    const auto [i, j] = pairs[k];
    const Operator in = embed_computational(basis_op(4, static_cast<std::size_t>(i), static_cast<std::size_t>(j)), space);
    ch.images[static_cast<std::size_t>(4 * i + j)] = project_to_computational(evolve(in), space);
  });
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < i; ++j)
      ch.images[static_cast<std::size_t>(4 * i + j)] = ch.images[static_cast<std::size_t>(4 * j + i)].adjoint();
  return ch;
}

/// Closed systems reduce to four state propagations.
inline QuantumChannel unitary_tomography(const Protocol& proto, const PropagationOptions& opt, std::size_t jobs = 1) {
  const auto idx = proto.space.computational_indices();
  std::array<StateVector, 4> out;
  parallel_for(4, jobs, [&](std::size_t i) {
    out[i] = evolve_state(proto, basis_state(proto.space.dim(), idx[i]), opt).final_state();
  });
  QuantumChannel ch;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      Operator full = out[static_cast<std::size_t>(i)] * out[static_cast<std::size_t>(j)].adjoint();
      ch.images[static_cast<std::size_t>(4 * i + j)] = project_to_computational(full, proto.space);
    }
  return ch;
}

inline QuantumChannel protocol_channel(const Protocol& proto, const PropagationOptions& opt, std::size_t jobs = 1) {
  if (proto.channels.empty()) return unitary_tomography(proto, opt, jobs);
  return channel_tomography([&](const Operator& rho) { return evolve_density(proto, rho, opt).final_state(); },
                            proto.space, jobs);
}

inline QuantumChannel run_protocol(const ScenarioConfig& cfg) {
  return protocol_channel(build_protocol(cfg), step_options(cfg), cfg.jobs);
}

inline QuantumChannel run_super_robust_protocol(ScenarioConfig cfg) {
  if (cfg.scheme != Scheme::super_robust) throw Error("run_super_robust_protocol: scheme must be super_robust");
  return run_protocol(cfg);
}
inline QuantumChannel run_dark_state_baseline(ScenarioConfig cfg) {
  if (cfg.scheme != Scheme::dark_state) throw Error("run_dark_state_baseline: scheme must be dark_state");
  return run_protocol(cfg);
}
inline QuantumChannel run_blockade_baseline(ScenarioConfig cfg) {
  if (cfg.scheme != Scheme::blockade) throw Error("run_blockade_baseline: scheme must be blockade");
  return run_protocol(cfg);
}

}  // namespace rydgate
