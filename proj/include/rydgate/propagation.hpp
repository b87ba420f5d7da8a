#pragma once

// Fixed-step RK4 for the Schrodinger and Lindblad equations, plus the
// adiabaticity and phase diagnostics of the target step.
//
// Integration is split at Hamiltonian breakpoints so piecewise phases are
// never sampled across a jump. Two back ends exist: a generic one taking any
// callable t -> Operator (dense), and a sparse one for
// TimeDependentHamiltonian that the protocols use.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <type_traits>
#include <vector>

#include "rydgate/core.hpp"
#include "rydgate/hamiltonian.hpp"
#include "rydgate/model.hpp"
#include "rydgate/pulse.hpp"

namespace rydgate {

class PropagationError : public Error {
 public:
  PropagationError(const std::string& what, double time)
      : Error(what + " at t = " + std::to_string(time) + " us"), reason_(what), time_(time) {}
  double time() const { return time_; }
  const std::string& reason() const { return reason_; }

 private:
  std::string reason_;
  double time_;
};

struct PropagationOptions {
  std::size_t steps = 4000;
  std::size_t snapshot_every = 0;   // 0: initial and final state only
  bool check_physical = false;      // density diagnostics on every snapshot
  double positivity_abort = 1e-6;   // abort below -this
  double max_phase_per_step = 0.5;  // h * ||H|| ceiling; 0 disables the guard
  std::vector<double> breakpoints;
};

template <class State>
struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
  std::size_t steps_taken = 0;
  double worst_min_eigenvalue = 0.0;

  const State& final_state() const { return states.back(); }
};

namespace detail {

struct Interval {
  double a, b;
  std::size_t steps;
};

inline std::vector<Interval> plan_intervals(double t0, double t1, std::size_t steps, std::vector<double> bps,
                                            double rate, double max_phase) {
  if (steps < 1) throw Error("propagation: steps must be >= 1");
  if (!(t1 > t0)) {
    if (t1 == t0) return {};
    throw Error("propagation: t1 < t0");
  }
  std::vector<double> cuts{t0};
  std::sort(bps.begin(), bps.end());
  const double eps = 1e-12 * std::max(1.0, std::abs(t1));
  for (double b : bps)
    if (b > t0 + eps && b < t1 - eps && b - cuts.back() > eps) cuts.push_back(b);
  cuts.push_back(t1);
  std::vector<Interval> out;
  const double L = t1 - t0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double len = cuts[k + 1] - cuts[k];
    auto n = static_cast<std::size_t>(std::llround(static_cast<double>(steps) * len / L));
    if (max_phase > 0 && rate > 0) n = std::max(n, static_cast<std::size_t>(std::ceil(len * rate / max_phase)));
    out.push_back({cuts[k], cuts[k + 1], std::max<std::size_t>(n, 1)});
  }
  return out;
}

/// RK4 over planned intervals. rhs(t, y, dy); evaluation times are kept
/// strictly inside each interval.
template <class State, class Rhs, class PostStep, class Snapshot>
std::size_t rk4_run(Rhs&& rhs, State& y, const std::vector<Interval>& plan, PostStep&& post_step,
                    std::size_t snapshot_every, Snapshot&& snapshot) {
  State k1 = y, k2 = y, k3 = y, k4 = y, tmp = y;
  std::size_t count = 0;
  for (const auto& iv : plan) {
    const double h = (iv.b - iv.a) / static_cast<double>(iv.steps);
    const double nudge = std::min(1e-12 * std::max(1.0, std::abs(iv.b)), 1e-3 * h);
    auto at = [&](double t) { return std::clamp(t, iv.a + nudge, iv.b - nudge); };
    for (std::size_t s = 0; s < iv.steps; ++s) {
      const double t = iv.a + h * static_cast<double>(s);
      rhs(at(t), y, k1);
      tmp = y + (0.5 * h) * k1;
      rhs(at(t + 0.5 * h), tmp, k2);
      tmp = y + (0.5 * h) * k2;
      rhs(at(t + 0.5 * h), tmp, k3);
      tmp = y + h * k3;
      rhs(at(t + h), tmp, k4);
      y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      post_step(y);
      ++count;
      const double tn = s + 1 == iv.steps ? iv.b : t + h;
      if ((count & 63u) == 0 && !y.allFinite()) throw PropagationError("non-finite state", tn);
      if (snapshot_every > 0 && count % snapshot_every == 0) snapshot(tn, y);
    }
  }
  return count;
}

inline void symmetrize(DensityMatrix& rho) {
  DensityMatrix h = 0.5 * (rho + rho.adjoint());
  rho = std::move(h);
}

template <class H>
constexpr bool is_sparse_hamiltonian = std::is_same_v<std::decay_t<H>, TimeDependentHamiltonian>;

inline double dense_norm_bound(const std::function<Operator(double)>& H, double t0, double t1) {
  double best = 0.0;
  for (int k = 0; k <= 32; ++k) {
    const Operator m = H(t0 + (t1 - t0) * k / 32.0);
    best = std::max(best, m.cwiseAbs().rowwise().sum().maxCoeff());
  }
  return best;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Lindblad right-hand side on a sparse pattern

/// drho/dt = G rho + rho G^dag + sum_k Gamma_k A_k rho A_k^dag with
/// G = -i H - (1/2) sum_k Gamma_k A_k^dag A_k.
class LindbladKernel {
 public:
  LindbladKernel(const TimeDependentHamiltonian& H, const std::vector<CollapseChannel>& channels)
      : H_(&H), d_(static_cast<Eigen::Index>(H.dim())) {
    Operator K = Operator::Zero(d_, d_);
    Operator jump_src = Operator::Zero(d_ * d_, d_ * d_);  // only used to merge
    bool any = false;
    for (const auto& ch : channels) {
      if (ch.op.rows() != d_) throw DimensionError("LindbladKernel: collapse operator dimension mismatch");
      if (!(ch.rate >= 0)) throw Error("LindbladKernel: negative rate");
      if (ch.rate == 0.0) continue;
      K += ch.rate * ch.op.adjoint() * ch.op;
      any = true;
    }
    for (Eigen::Index i = 0; i < d_; ++i)
      for (Eigen::Index j = 0; j < d_; ++j)
        if (K(i, j) != cplx{}) decay_.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), -0.5 * K(i, j)});
    if (!any) return;
    // Gamma A rho A^dag: (a,b) += Gamma A(a,k) conj(A(b,l)) rho(k,l)
    for (const auto& ch : channels) {
      if (ch.rate == 0.0) continue;
      std::vector<std::pair<Eigen::Index, Eigen::Index>> nz;
      for (Eigen::Index i = 0; i < d_; ++i)
        for (Eigen::Index j = 0; j < d_; ++j)
          if (ch.op(i, j) != cplx{}) nz.push_back({i, j});
      for (const auto& [a, k] : nz)
        for (const auto& [b, l] : nz) jump_src(a + b * d_, k + l * d_) += ch.rate * ch.op(a, k) * std::conj(ch.op(b, l));
    }
    for (Eigen::Index i = 0; i < d_ * d_; ++i)
      for (Eigen::Index j = 0; j < d_ * d_; ++j)
        if (std::abs(jump_src(i, j)) > 0) jumps_.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), jump_src(i, j)});
  }

  Eigen::Index dim() const { return d_; }

  void operator()(double t, const DensityMatrix& rho, DensityMatrix& out) const {
    H_->evaluate(t, values_);
    out.setZero(d_, d_);
    const auto& pat = H_->pattern();
    for (std::size_t s = 0; s < pat.size(); ++s) apply(pat[s].row, pat[s].col, -I_unit * values_[s], rho, out);
    for (const auto& e : decay_) apply(e.r, e.c, e.v, rho, out);
    cplx* o = out.data();
    const cplx* p = rho.data();
    for (const auto& j : jumps_) o[j.r] += j.v * p[j.c];
  }

 private:
  struct Entry {
    std::uint32_t r, c;
    cplx v;
  };

  // out += g E_rc rho + rho (g E_rc)^dag
  void apply(std::uint32_t r, std::uint32_t c, cplx g, const DensityMatrix& rho, DensityMatrix& out) const {
    const cplx gc = std::conj(g);
    for (Eigen::Index b = 0; b < d_; ++b) out(r, b) += g * rho(c, b);
    out.col(r).noalias() += gc * rho.col(c);
  }

  const TimeDependentHamiltonian* H_;
  Eigen::Index d_;
  std::vector<Entry> decay_;
  std::vector<Entry> jumps_;
  mutable std::vector<cplx> values_;
};

// ---------------------------------------------------------------------------
// Schrodinger

inline Trajectory<StateVector> propagate_state(const TimeDependentHamiltonian& H, const StateVector& psi0, double t0,
                                               double t1, const PropagationOptions& opt = {}) {
  if (psi0.size() != static_cast<Eigen::Index>(H.dim())) throw DimensionError("propagate_state: dimension mismatch");
  auto bps = opt.breakpoints;
  bps.insert(bps.end(), H.breakpoints().begin(), H.breakpoints().end());
  const double rate = opt.max_phase_per_step > 0 ? H.norm_bound(t0, t1) : 0.0;
  const auto plan = detail::plan_intervals(t0, t1, opt.steps, bps, rate, opt.max_phase_per_step);
  Trajectory<StateVector> tr;
  tr.times.push_back(t0);
  tr.states.push_back(psi0);
  StateVector y = psi0;
  std::vector<cplx> values;
  const auto& pat = H.pattern();
  auto rhs = [&](double t, const StateVector& psi, StateVector& dpsi) {
    H.evaluate(t, values);
    dpsi.setZero(psi.size());
    for (std::size_t s = 0; s < pat.size(); ++s) dpsi(pat[s].row) += -I_unit * values[s] * psi(pat[s].col);
  };
  tr.steps_taken = detail::rk4_run(rhs, y, plan, [](StateVector&) {}, opt.snapshot_every, [&](double t, const StateVector& s) {
    tr.times.push_back(t);
    tr.states.push_back(s);
  });
  if (!y.allFinite()) throw PropagationError("non-finite state", t1);
  if (tr.times.back() != t1 || opt.snapshot_every == 0) {
    tr.times.push_back(t1);
    tr.states.push_back(y);
  }
  return tr;
}

template <class HFunc, std::enable_if_t<!detail::is_sparse_hamiltonian<HFunc>, int> = 0>
Trajectory<StateVector> propagate_state(const HFunc& H, const StateVector& psi0, double t0, double t1,
                                        const PropagationOptions& opt = {}) {
  std::function<Operator(double)> Hf = [&](double t) { return Operator(H(t)); };
  const double rate = opt.max_phase_per_step > 0 ? detail::dense_norm_bound(Hf, t0, t1) : 0.0;
  const auto plan = detail::plan_intervals(t0, t1, opt.steps, opt.breakpoints, rate, opt.max_phase_per_step);
  Trajectory<StateVector> tr;
  tr.times.push_back(t0);
  tr.states.push_back(psi0);
  StateVector y = psi0;
  auto rhs = [&](double t, const StateVector& psi, StateVector& dpsi) {
    const Operator h = Hf(t);
    if (h.rows() != psi.size()) throw DimensionError("propagate_state: dimension mismatch");
    dpsi = -I_unit * (h * psi);
  };
  tr.steps_taken = detail::rk4_run(rhs, y, plan, [](StateVector&) {}, opt.snapshot_every, [&](double t, const StateVector& s) {
    tr.times.push_back(t);
    tr.states.push_back(s);
  });
  if (!y.allFinite()) throw PropagationError("non-finite state", t1);
  if (tr.times.back() != t1 || opt.snapshot_every == 0) {
    tr.times.push_back(t1);
    tr.states.push_back(y);
  }
  return tr;
}

// ---------------------------------------------------------------------------
// Lindblad

namespace detail {

template <class Rhs>
Trajectory<DensityMatrix> run_density(Rhs&& rhs, const DensityMatrix& rho0, const std::vector<Interval>& plan,
                                      double t0, double t1, const PropagationOptions& opt) {
  const bool hermitian_input = is_hermitian(rho0, 1e-12);
  const cplx trace0 = rho0.trace();
  Trajectory<DensityMatrix> tr;
  tr.worst_min_eigenvalue = hermitian_input ? min_eigenvalue(rho0) : 0.0;
  auto record = [&](double t, const DensityMatrix& r) {
    if (opt.check_physical && hermitian_input) {
      const auto diag = diagnose(r);
      tr.worst_min_eigenvalue = std::min(tr.worst_min_eigenvalue, diag.min_eigenvalue);
      if (diag.min_eigenvalue < -opt.positivity_abort)
        throw PropagationError("negative eigenvalue " + std::to_string(diag.min_eigenvalue), t);
      if (std::abs(diag.trace - trace0.real()) > 1e-8) throw PropagationError("trace drift " + std::to_string(diag.trace), t);
    }
    tr.times.push_back(t);
    tr.states.push_back(r);
  };
  record(t0, rho0);
  DensityMatrix y = rho0;
  auto post = [&](DensityMatrix& r) {
    if (hermitian_input) symmetrize(r);
  };
  tr.steps_taken = rk4_run(rhs, y, plan, post, opt.snapshot_every, record);
  if (!y.allFinite()) throw PropagationError("non-finite density matrix", t1);
  if (tr.times.back() != t1) record(t1, y);
  return tr;
}

}  // namespace detail

inline Trajectory<DensityMatrix> propagate_density(const TimeDependentHamiltonian& H, const DensityMatrix& rho0,
                                                   const std::vector<CollapseChannel>& channels, double t0, double t1,
                                                   const PropagationOptions& opt = {}) {
  if (rho0.rows() != static_cast<Eigen::Index>(H.dim()) || rho0.cols() != rho0.rows())
    throw DimensionError("propagate_density: dimension mismatch");
  LindbladKernel kernel(H, channels);
  auto bps = opt.breakpoints;
  bps.insert(bps.end(), H.breakpoints().begin(), H.breakpoints().end());
  const double rate = opt.max_phase_per_step > 0 ? H.norm_bound(t0, t1) : 0.0;
  const auto plan = detail::plan_intervals(t0, t1, opt.steps, bps, rate, opt.max_phase_per_step);
  return detail::run_density(kernel, rho0, plan, t0, t1, opt);
}

template <class HFunc, std::enable_if_t<!detail::is_sparse_hamiltonian<HFunc>, int> = 0>
Trajectory<DensityMatrix> propagate_density(const HFunc& H, const DensityMatrix& rho0,
                                            const std::vector<CollapseChannel>& channels, double t0, double t1,
                                            const PropagationOptions& opt = {}) {
  std::function<Operator(double)> Hf = [&](double t) { return Operator(H(t)); };
  Operator K = Operator::Zero(rho0.rows(), rho0.cols());
  for (const auto& ch : channels) {
    if (ch.op.rows() != rho0.rows()) throw DimensionError("propagate_density: collapse operator dimension mismatch");
    if (!(ch.rate >= 0)) throw Error("propagate_density: negative rate");
    K += ch.rate * ch.op.adjoint() * ch.op;
  }
  auto rhs = [&](double t, const DensityMatrix& r, DensityMatrix& dr) {
    const Operator G = -I_unit * Hf(t) - 0.5 * K;
    dr = G * r + r * G.adjoint();
    for (const auto& ch : channels)
      if (ch.rate > 0) dr += ch.rate * ch.op * r * ch.op.adjoint();
  };
  const double rate = opt.max_phase_per_step > 0 ? detail::dense_norm_bound(Hf, t0, t1) : 0.0;
  const auto plan = detail::plan_intervals(t0, t1, opt.steps, opt.breakpoints, rate, opt.max_phase_per_step);
  return detail::run_density(rhs, rho0, plan, t0, t1, opt);
}

// ---------------------------------------------------------------------------
// Target-step diagnostics

inline std::vector<double> uniform_grid(double a, double b, std::size_t n) {
  std::vector<double> g;
  for (std::size_t k = 0; k <= n; ++k) g.push_back(a + (b - a) * static_cast<double>(k) / static_cast<double>(n));
  return g;
}

/// |W_t(t)|: combined target drive strength.
inline double target_strength(const TargetSchedules& s, double t) {
  return std::hypot(s.zero.amplitude(t), s.one.amplitude(t));
}

struct AdiabaticityMargin {
  double max_slope = 0.0;
  double bound = 0.0;  // bound at the grid point where the ratio peaks
  double ratio = 0.0;
  bool flagged = false;
};

/// Compares |d|W_t|/dt| with 2 sqrt(2) N^3 / V pointwise.
inline AdiabaticityMargin adiabaticity_margin(const TargetSchedules& s, const AtomPairModel& model,
                                              const std::vector<double>& grid) {
  AdiabaticityMargin m;
  for (double t : grid) {
    const auto* seg = s.one.segment_at(t);
    if (!seg) continue;
    const double a = std::max(seg->t0, t - 1e-6 * (seg->t1 - seg->t0));
    const double b = std::min(seg->t1, t + 1e-6 * (seg->t1 - seg->t0));
    // both channels share breakpoints, so one-sided differences stay inside a segment
    auto strength = [&](double x) { return std::hypot(seg->amplitude(x), s.zero.segment_at(seg->t0)->amplitude(x)); };
    const double slope = std::abs(strength(b) - strength(a)) / (b - a);
    const double V = model.V_at(t);
    const double W = strength(t);
    const double N = std::sqrt(V * V + W * W / 4.0);
    const double bound = 2.0 * std::sqrt(2.0) * N * N * N / V;
    m.max_slope = std::max(m.max_slope, slope);
    if (slope / bound >= m.ratio) {
      m.ratio = slope / bound;
      m.bound = bound;
    }
  }
  m.flagged = m.ratio >= 0.1;
  return m;
}

struct PhaseFunctionals {
  double phi_dy = 0.0;        // integral of <d2|H|d2>
  double phi_ge = 0.0;        // integral of W^2 phi2' / (W^2 + 4 V^2)
  double phi_ge_berry = 0.0;  // discrete Berry phase of the dark pair state
};

/// Evaluated on the step-2 Hamiltonian itself: the block in
/// {|R'b>, |R'r>, |r'R>} gives W_t e^{i phi2} and the dark state at each t.
inline PhaseFunctionals phase_functionals(const TargetSchedules& s, const AtomPairModel& model, double Theta,
                                          double phi, std::size_t points_per_segment = 400) {
  AtomPairModel m = model;
  m.leakage.clear();
  m.ladder.reset();
  const auto space = model_space(m);
  TimeDependentHamiltonian H(space.dim());
  add_interaction(H, space, m);
  add_atom_drive(H, space, m, Atom::target, "r", target_lines(s));
  const auto basis = pair_block_basis(space, Theta, phi);

  struct Sample {
    cplx omega;  // W_t e^{i phi2}
    double V;
    Operator block;
  };
  auto sample = [&](double t) {
    const Operator h = H.dense(t);
    Sample smp;
    smp.block = Operator(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) smp.block(i, j) = basis[static_cast<std::size_t>(i)].dot(h * basis[static_cast<std::size_t>(j)]);
    smp.omega = 2.0 * std::conj(smp.block(1, 0));
    smp.V = smp.block(2, 1).real();
    return smp;
  };
  auto dark = [](const Sample& smp) { return dark_bright_decomposition(0.0, 0.0, smp.omega, smp.V).dark2; };

  PhaseFunctionals out;
  const auto& segs = s.one.segments();
  const std::size_t n = detail::even(points_per_segment);
  cplx berry_product = 1.0;
  StateVector prev_dark;
  for (std::size_t k = 0; k < segs.size(); ++k) {
    const double a = segs[k].t0, b = segs[k].t1;
    const double nudge = 1e-12 * std::max(1.0, std::abs(b));
    const auto nodes = detail::uniform_nodes(a, b, n);
    std::vector<double> dy, ge;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const double t = std::clamp(nodes[i], a + nudge, b - nudge);
      const Sample smp = sample(t);
      const StateVector d = dark(smp);
      dy.push_back((d.dot(smp.block * d)).real());
      ge.push_back(0.0);  // phi2 is constant inside a segment
      if (prev_dark.size() == 3) berry_product *= prev_dark.dot(d);
      prev_dark = d;
    }
    out.phi_dy += detail::simpson(dy, (b - a) / static_cast<double>(n));
    out.phi_ge += detail::simpson(ge, (b - a) / static_cast<double>(n));
    if (k + 1 < segs.size()) {
      // phase jump of phi2 at the boundary, weighted by W^2/(W^2 + 4V^2) there
      const double jump = std::remainder(segs[k + 1].phase - segs[k].phase, two_pi);
      const double W = target_strength(s, b);
      const double V = m.V_at(b);
      out.phi_ge += jump * W * W / (W * W + 4.0 * V * V);
    }
  }
  out.phi_ge_berry = -std::arg(berry_product);
  return out;
}

struct ParallelTransportPhases {
  double dynamical = 0.0;  // integral of <psi|H|psi>
  double total = 0.0;      // phase of the final amplitude on the destination level
  double geometric = 0.0;  // total + dynamical
};

/// Drives a lone two-level atom {|1>, |R'>} from |1> with `sched`.
inline ParallelTransportPhases step1_phases(const PulseSchedule& sched, std::size_t steps = 20000) {
  auto H = [&](double t) {
    Operator h = Operator::Zero(2, 2);
    const cplx w = 0.5 * sched.complex_amplitude(t);
    h(1, 0) = w;
    h(0, 1) = std::conj(w);
    return h;
  };
  PropagationOptions opt;
  opt.steps = steps;
  opt.snapshot_every = 1;
  opt.breakpoints = sched.breakpoints();
  StateVector psi0 = basis_state(2, 0);
  const auto tr = propagate_state(H, psi0, sched.t_start(), sched.t_end(), opt);
  ParallelTransportPhases p;
  // trapezoid on the stored grid, evaluated inside each step
  for (std::size_t k = 0; k + 1 < tr.times.size(); ++k) {
    const double ta = tr.times[k], tb = tr.times[k + 1];
    const double tm = 0.5 * (ta + tb);
    const StateVector mid = 0.5 * (tr.states[k] + tr.states[k + 1]);
    p.dynamical += (mid.dot(H(tm) * mid)).real() * (tb - ta);
  }
  const StateVector& f = tr.final_state();
  const cplx amp = std::abs(f(1)) > std::abs(f(0)) ? f(1) : f(0);
  p.total = std::arg(amp);
  p.geometric = p.total + p.dynamical;
  return p;
}

}  // namespace rydgate
