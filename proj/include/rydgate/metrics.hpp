#pragma once

// Figures of merit: average gate fidelity, populations, leakage during the
// target step and the off-resonant excitation estimate.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "rydgate/core.hpp"
#include "rydgate/model.hpp"
#include "rydgate/propagation.hpp"
#include "rydgate/protocols.hpp"

namespace rydgate {

inline std::vector<Operator> two_qubit_paulis() {
  std::vector<Operator> out;
  for (const auto& a : pauli::all())
    for (const auto& b : pauli::all()) out.push_back(tensor_product(a, b));
  return out;
}

/// F = [sum_j tr(U U_j^dag U^dag Xi(U_j)) + d^2] / [d^2 (d + 1)], d = 4.
inline double average_gate_fidelity(const QuantumChannel& ch, const Operator& U) {
  if (U.rows() != 4 || U.cols() != 4) throw DimensionError("average_gate_fidelity: U must be 4x4");
  if ((U.adjoint() * U - Operator::Identity(4, 4)).norm() > 1e-10)
    throw Error("average_gate_fidelity: U is not unitary");
  static const auto paulis = two_qubit_paulis();
  cplx sum{};
  for (const auto& P : paulis) sum += (U * P.adjoint() * U.adjoint() * ch.apply(P)).trace();
  return (sum.real() + 16.0) / 80.0;
}

/// 1 - tr(Xi(I/4)): population lost from the qubit block for a maximally
/// mixed input.
inline double trace_deficit(const QuantumChannel& ch) {
  return 1.0 - ch.apply(0.25 * Operator::Identity(4, 4)).trace().real();
}

/// <l|rho|l> for each label per snapshot; rows follow the snapshots.
inline std::vector<std::vector<double>> population_trace(const Trajectory<DensityMatrix>& tr,
                                                         const HilbertSpace& space,
                                                         const std::vector<std::string>& labels) {
  std::vector<std::size_t> idx;
  for (const auto& l : labels) {
    bool found = false;
    for (std::size_t i = 0; i < space.dim(); ++i)
      if (space.label_of(i) == l) {
        idx.push_back(i);
        found = true;
        break;
      }
    if (!found) throw Error("population_trace: unknown label '" + l + "'");
  }
  std::vector<std::vector<double>> out;
  for (const auto& rho : tr.states) {
    std::vector<double> row;
    for (auto i : idx) row.push_back(rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real());
    out.push_back(std::move(row));
  }
  return out;
}

/// <psi_ideal| rho_qubit |psi_ideal> with psi_ideal = U psi0.
inline double state_fidelity(const DensityMatrix& rho_full, const HilbertSpace& space, const Operator& U,
                             const StateVector& psi0) {
  const StateVector target = U * psi0;
  const Operator block = project_to_computational(rho_full, space);
  return target.dot(block * target).real();
}

// ---------------------------------------------------------------------------
// Leakage during step (ii)

struct LeakageReport {
  double max_P = 0.0;
  double avg_P = 0.0;
  double max_channel_population = 0.0;  // population in the added leakage states
  std::vector<double> times;
  std::vector<double> P;
};

/// Closed-system step (ii) from |R'>_c |1>_t: P(t) = 1 - |<R'1|psi(t)>|^2,
/// time-averaged with the trapezoid rule over the step.
inline LeakageReport leakage_probability(ScenarioConfig cfg) {
  cfg.rates.fill(0.0);
  cfg.doppler.enabled = false;
  const auto proto = build_protocol(cfg);
  const auto& step = proto.steps.at(1);
  const auto& space = proto.space;
  const auto start = space.index(std::vector<std::string>{"R'", "1"});
  PropagationOptions opt = step_options(cfg);
  opt.snapshot_every = 1;
  const auto tr = propagate_state(step.H, basis_state(space.dim(), start), step.t0, step.t1, opt);
  LeakageReport rep;
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    const auto& psi = tr.states[k];
    const double p = 1.0 - std::norm(psi(static_cast<Eigen::Index>(start)));
    double extra = 0.0;
    for (const auto& l : space.extra_labels()) extra += std::norm(psi(static_cast<Eigen::Index>(space.extra_index(l))));
    rep.times.push_back(tr.times[k]);
    rep.P.push_back(p);
    rep.max_P = std::max(rep.max_P, p);
    rep.max_channel_population = std::max(rep.max_channel_population, extra);
  }
  double area = 0.0;
  for (std::size_t k = 0; k + 1 < rep.times.size(); ++k)
    area += 0.5 * (rep.P[k] + rep.P[k + 1]) * (rep.times[k + 1] - rep.times[k]);
  rep.avg_P = area / (step.t1 - step.t0);
  return rep;
}

// ---------------------------------------------------------------------------
// Off-resonant excitation

struct ExcitationChannel {
  double delta = 0.0;        // rad/us
  double dipole_ratio = 0.0;  // Omega_k / Omega
};

struct ExcitationReport {
  std::vector<double> exact;
  std::vector<double> bound;
  double total = 0.0;
  bool empty_table = false;
};

/// Population of a detuned level after a resonant pi-pulse time t = pi/Omega:
/// Omega_k^2 sin^2(t sqrt(delta^2 + Omega_k^2) / 2) / (delta^2 + Omega_k^2).
inline double detuned_population(double omega_k, double delta, double t) {
  const double g2 = delta * delta + omega_k * omega_k;
  if (g2 == 0.0) return 0.0;
  const double s = std::sin(0.5 * t * std::sqrt(g2));
  return omega_k * omega_k * s * s / g2;
}

inline ExcitationReport excitation_error(const std::vector<ExcitationChannel>& table, double omega, double x) {
  ExcitationReport rep;
  rep.empty_table = table.empty();
  if (!(omega > 0)) throw Error("excitation_error: omega must be positive");
  const double t = pi / omega;
  double sum = 0.0;
  for (const auto& ch : table) {
    if (ch.delta == 0.0) throw Error("excitation_error: channel detuning must be non-zero");
    const double wk = ch.dipole_ratio * omega;
    rep.exact.push_back(detuned_population(wk, ch.delta, t));
    const double b = (wk / ch.delta) * (wk / ch.delta);
    rep.bound.push_back(b);
    sum += b;
  }
  rep.total = x * sum;
  return rep;
}

// ---------------------------------------------------------------------------
// Convergence

struct ConvergenceReport {
  double fidelity = 0.0;
  double fidelity_doubled = 0.0;
  double delta = 0.0;
  bool flagged = false;
};

/// Reruns the scenario at twice the step count. A failed propagation at
/// either resolution is reported as delta = inf, flagged.
inline ConvergenceReport convergence_report(const ScenarioConfig& cfg, double tolerance = 1e-6) {
  ScenarioConfig doubled = cfg;
  doubled.steps *= 2;
  const auto proto = build_protocol(cfg);
  ConvergenceReport r;
  try {
    r.fidelity = average_gate_fidelity(run_protocol(cfg), proto.ideal);
    r.fidelity_doubled = average_gate_fidelity(run_protocol(doubled), proto.ideal);
    r.delta = std::abs(r.fidelity_doubled - r.fidelity);
  } catch (const PropagationError&) {
    r.delta = std::numeric_limits<double>::infinity();
  }
  r.flagged = !(r.delta < tolerance);
  return r;
}

}  // namespace rydgate
