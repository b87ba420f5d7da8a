#pragma once

// Geometric trajectories and the piecewise laser schedules synthesized from
// them.
//
// Phase convention (used everywhere): a drive with amplitude |W| and phase
// phi contributes <upper|H|lower> = (|W|/2) exp(-i phi) plus the Hermitian
// conjugate.

#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"
#include "rydgate/core.hpp"

namespace rydgate {

class SingularityError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Envelopes and schedules

struct ConstEnvelope {
  double value = 0.0;
};

/// peak * sin^2(pi (t - t_ref) / width): one hump per `width`.
struct Sin2Envelope {
  double peak = 0.0;
  double t_ref = 0.0;
  double width = 1.0;
};

using Envelope = std::variant<ConstEnvelope, Sin2Envelope>;

inline double envelope_value(const Envelope& env, double t) {
  if (const auto* c = std::get_if<ConstEnvelope>(&env)) return c->value;
  const auto& s = std::get<Sin2Envelope>(env);
  const double x = std::sin(pi * (t - s.t_ref) / s.width);
  return s.peak * x * x;
}

/// Exact integral of the envelope over [a, b].
inline double envelope_integral(const Envelope& env, double a, double b) {
  if (const auto* c = std::get_if<ConstEnvelope>(&env)) return c->value * (b - a);
  const auto& s = std::get<Sin2Envelope>(env);
  auto prim = [&](double t) {
    const double u = t - s.t_ref;
    return 0.5 * u - s.width / (4.0 * pi) * std::sin(two_pi * u / s.width);
  };
  return s.peak * (prim(b) - prim(a));
}

inline Envelope scaled(const Envelope& env, double factor) {
  if (const auto* c = std::get_if<ConstEnvelope>(&env)) return ConstEnvelope{c->value * factor};
  auto s = std::get<Sin2Envelope>(env);
  s.peak *= factor;
  return s;
}

struct PulseSegment {
  double t0 = 0.0;
  double t1 = 0.0;
  Envelope envelope = ConstEnvelope{};
  double phase = 0.0;

  double amplitude(double t) const { return envelope_value(envelope, t); }
  double area() const { return envelope_integral(envelope, t0, t1); }
};

/// Which transition a schedule drives.
enum class DriveChannel { control_1_Rp, target_0_r, target_1_r };

inline std::string to_string(DriveChannel c) {
  switch (c) {
    case DriveChannel::control_1_Rp: return "control_1_Rp";
    case DriveChannel::target_0_r: return "target_0_r";
    case DriveChannel::target_1_r: return "target_1_r";
  }
  return "?";
}

inline DriveChannel drive_channel_from_string(const std::string& s) {
  if (s == "control_1_Rp") return DriveChannel::control_1_Rp;
  if (s == "target_0_r") return DriveChannel::target_0_r;
  if (s == "target_1_r") return DriveChannel::target_1_r;
  throw Error("unknown drive channel '" + s + "'");
}

class PulseSchedule {
 public:
  PulseSchedule() = default;
  PulseSchedule(DriveChannel channel, std::vector<PulseSegment> segments)
      : channel_(channel), segments_(std::move(segments)) {
    if (segments_.empty()) throw Error("PulseSchedule: no segments");
    for (std::size_t k = 0; k < segments_.size(); ++k) {
      const auto& s = segments_[k];
      if (!(s.t1 > s.t0)) throw Error("PulseSchedule: segment with t1 <= t0");
      if (!std::isfinite(s.amplitude(s.t0)) || !std::isfinite(s.amplitude(s.t1)))
        throw Error("PulseSchedule: non-finite amplitude");
      if (k > 0 && std::abs(s.t0 - segments_[k - 1].t1) > 1e-12 * std::max(1.0, std::abs(s.t0)))
        throw Error("PulseSchedule: segments are not contiguous");
    }
  }

  DriveChannel channel() const { return channel_; }
  const std::vector<PulseSegment>& segments() const { return segments_; }
  double t_start() const { return segments_.front().t0; }
  double t_end() const { return segments_.back().t1; }
  double duration() const { return t_end() - t_start(); }

  std::vector<double> breakpoints() const {
    std::vector<double> b;
    b.reserve(segments_.size() + 1);
    b.push_back(t_start());
    for (const auto& s : segments_) b.push_back(s.t1);
    return b;
  }

  /// Segment containing t: [t0, t1) except the last, which is closed.
  const PulseSegment* segment_at(double t) const {
    if (segments_.empty() || t < t_start() || t > t_end()) return nullptr;
    for (const auto& s : segments_)
      if (t < s.t1) return &s;
    return &segments_.back();
  }

  double amplitude(double t) const {
    const auto* s = segment_at(t);
    return s ? s->amplitude(t) : 0.0;
  }
  double phase(double t) const {
    const auto* s = segment_at(t);
    return s ? s->phase : 0.0;
  }
  /// |W| exp(-i phi), zero outside the schedule.
  cplx complex_amplitude(double t) const {
    const auto* s = segment_at(t);
    return s ? s->amplitude(t) * std::exp(-I_unit * s->phase) : cplx{};
  }

  double area() const {
    double a = 0.0;
    for (const auto& s : segments_) a += s.area();
    return a;
  }

  double max_amplitude(std::size_t samples_per_segment = 2001) const {
    double m = 0.0;
    for (const auto& s : segments_)
      for (std::size_t i = 0; i < samples_per_segment; ++i) {
        const double t = s.t0 + (s.t1 - s.t0) * static_cast<double>(i) / static_cast<double>(samples_per_segment - 1);
        m = std::max(m, s.amplitude(t));
      }
    return m;
  }

 private:
  DriveChannel channel_ = DriveChannel::control_1_Rp;
  std::vector<PulseSegment> segments_;
};

inline PulseSchedule shifted(const PulseSchedule& sched, double dt) {
  auto segs = sched.segments();
  for (auto& s : segs) {
    s.t0 += dt;
    s.t1 += dt;
    if (auto* e = std::get_if<Sin2Envelope>(&s.envelope)) e->t_ref += dt;
  }
  return PulseSchedule(sched.channel(), std::move(segs));
}

/// Time-reversed schedule with every phase advanced by pi, starting at
/// `new_start`. For piecewise-constant Hamiltonians this realizes the exact
/// inverse propagator, including any common amplitude scaling.
inline PulseSchedule inverse_schedule(const PulseSchedule& sched, double new_start) {
  const double reflect = sched.t_end() + new_start;  // t' = reflect - t
  std::vector<PulseSegment> segs;
  for (auto it = sched.segments().rbegin(); it != sched.segments().rend(); ++it) {
    PulseSegment s = *it;
    s.t0 = reflect - it->t1;
    s.t1 = reflect - it->t0;
    if (auto* e = std::get_if<Sin2Envelope>(&s.envelope)) e->t_ref = reflect - e->t_ref;
    s.phase = it->phase + pi;
    segs.push_back(s);
  }
  return PulseSchedule(sched.channel(), std::move(segs));
}

inline PulseSchedule apply_rabi_error(const PulseSchedule& sched, double eps) {
  if (!(eps >= -1.0)) throw Error("apply_rabi_error: eps must be >= -1");
  auto segs = sched.segments();
  for (auto& s : segs) s.envelope = scaled(s.envelope, 1.0 + eps);
  return PulseSchedule(sched.channel(), std::move(segs));
}

// ---------------------------------------------------------------------------
// Geometric trajectories

struct TrajectorySegment {
  double t0 = 0.0;
  double t1 = 0.0;
  std::function<double(double)> theta;
  std::function<double(double)> eta;
};

class GeometricTrajectory {
 public:
  GeometricTrajectory() = default;
  explicit GeometricTrajectory(std::vector<TrajectorySegment> segments) : segments_(std::move(segments)) {
    if (segments_.empty()) throw Error("GeometricTrajectory: no segments");
    for (std::size_t k = 0; k < segments_.size(); ++k) {
      if (!(segments_[k].t1 > segments_[k].t0)) throw Error("GeometricTrajectory: breakpoints must increase");
      if (!segments_[k].theta || !segments_[k].eta) throw Error("GeometricTrajectory: missing theta/eta");
      if (k > 0 && std::abs(segments_[k].t0 - segments_[k - 1].t1) > 1e-12)
        throw Error("GeometricTrajectory: segments are not contiguous");
    }
  }

  const std::vector<TrajectorySegment>& segments() const { return segments_; }
  double t_start() const { return segments_.front().t0; }
  double t_end() const { return segments_.back().t1; }
  std::vector<double> breakpoints() const {
    std::vector<double> b{t_start()};
    for (const auto& s : segments_) b.push_back(s.t1);
    return b;
  }

 private:
  std::vector<TrajectorySegment> segments_;
};

namespace detail {

/// Derivative of f on [a, b] at t; fourth-order central differences in the
/// interior, second-order one-sided near the segment ends.
inline double segment_derivative(const std::function<double(double)>& f, double t, double a, double b) {
  // written as differences so a constant gives exactly zero
  const double h = 1e-4 * (b - a);
  if (t - 2 * h >= a && t + 2 * h <= b)
    return (8 * (f(t + h) - f(t - h)) - (f(t + 2 * h) - f(t - 2 * h))) / (12 * h);
  const double f0 = f(t);
  if (t - 2 * h < a) return (4 * (f(t + h) - f0) - (f(t + 2 * h) - f0)) / (2 * h);
  return ((f(t - 2 * h) - f0) - 4 * (f(t - h) - f0)) / (2 * h);
}

inline std::vector<double> uniform_nodes(double a, double b, std::size_t intervals) {
  std::vector<double> t(intervals + 1);
  for (std::size_t i = 0; i <= intervals; ++i)
    t[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(intervals);
  t.back() = b;
  return t;
}

/// Composite Simpson over uniformly spaced samples (even interval count).
template <class T>
T simpson(const std::vector<T>& f, double h) {
  const std::size_t n = f.size() - 1;
  if (n == 0) return T{};
  if (n % 2 != 0) throw Error("simpson: even number of intervals required");
  T acc = f.front() + f.back();
  for (std::size_t i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * f[i];
  return acc * (h / 3.0);
}

inline bool near_half_pi(double theta, double tol = 1e-6) {
  const double r = std::remainder(theta - pi / 2, pi);
  return std::abs(r) < tol;
}

inline std::size_t even(std::size_t n) { return n < 2 ? 2 : n + (n % 2); }

}  // namespace detail

struct LaserProfile {
  std::vector<double> t;
  std::vector<std::size_t> segment;
  std::vector<double> amplitude;
  std::vector<double> phase;
  std::vector<double> gamma_dot;
};

/// Inverse-engineered laser parameters along a trajectory:
/// |W| = sqrt(th'^2 + et'^2 tan^2 th), phi = eta - pi/2 - atan(et' tan th / th'),
/// gamma' = -et' sin^2(th/2) / cos th.
inline LaserProfile laser_from_trajectory(const GeometricTrajectory& traj, std::size_t points_per_segment) {
  LaserProfile out;
  const std::size_t n = std::max<std::size_t>(points_per_segment, 2) - 1;
  for (std::size_t k = 0; k < traj.segments().size(); ++k) {
    const auto& s = traj.segments()[k];
    for (double t : detail::uniform_nodes(s.t0, s.t1, n)) {
      const double th = s.theta(t);
      const double th_dot = detail::segment_derivative(s.theta, t, s.t0, s.t1);
      const double et_dot = detail::segment_derivative(s.eta, t, s.t0, s.t1);
      const bool moving_eta = std::abs(et_dot) > 1e-9;
      if (moving_eta && detail::near_half_pi(th))
        throw SingularityError("laser_from_trajectory: tan(theta) singular at t=" + std::to_string(t));
      const double tan_term = moving_eta ? et_dot * std::tan(th) : 0.0;
      double correction = 0.0;
      if (tan_term != 0.0) correction = th_dot != 0.0 ? std::atan(tan_term / th_dot) : std::copysign(pi / 2, tan_term);
      out.t.push_back(t);
      out.segment.push_back(k);
      out.amplitude.push_back(std::sqrt(th_dot * th_dot + tan_term * tan_term));
      out.phase.push_back(s.eta(t) - pi / 2 - correction);
      const double sh = std::sin(th / 2);
      out.gamma_dot.push_back(moving_eta ? -et_dot * sh * sh / std::cos(th) : 0.0);
    }
  }
  return out;
}

/// max |eta' sin theta| over the grid.
inline double parallel_transport_residual(const GeometricTrajectory& traj, std::size_t points_per_segment) {
  double worst = 0.0;
  const std::size_t n = std::max<std::size_t>(points_per_segment, 2) - 1;
  for (const auto& s : traj.segments())
    for (double t : detail::uniform_nodes(s.t0, s.t1, n)) {
      const double et_dot = detail::segment_derivative(s.eta, t, s.t0, s.t1);
      worst = std::max(worst, std::abs(et_dot * std::sin(s.theta(t))));
    }
  return worst;
}

/// int (theta'/2) exp(-i int_0^t eta'/cos theta dt') dt. The inner phase is
/// accumulated segment by segment; a jump of eta at a breakpoint contributes
/// (eta+ - eta-) / cos theta(breakpoint).
inline cplx super_robust_integral(const GeometricTrajectory& traj, std::size_t points_per_segment) {
  const std::size_t n = detail::even(points_per_segment);
  // three-point Gauss-Legendre for the inner integral between nodes
  static constexpr double gl_x[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
  static constexpr double gl_w[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};

  auto inner_integrand = [](const TrajectorySegment& s, double t) {
    const double et_dot = detail::segment_derivative(s.eta, t, s.t0, s.t1);
    if (std::abs(et_dot) <= 1e-12) return 0.0;
    const double c = std::cos(s.theta(t));
    if (std::abs(c) < 1e-12) throw SingularityError("super_robust_integral: cos(theta) = 0 with eta' != 0");
    return et_dot / c;
  };

  cplx total{};
  double accumulated = 0.0;
  for (std::size_t k = 0; k < traj.segments().size(); ++k) {
    const auto& s = traj.segments()[k];
    if (k > 0) {
      const auto& prev = traj.segments()[k - 1];
      const double jump = s.eta(s.t0) - prev.eta(prev.t1);
      if (std::abs(jump) > 1e-15) {
        const double c = std::cos(prev.theta(prev.t1));
        if (std::abs(c) < 1e-12) throw SingularityError("super_robust_integral: eta jumps where cos(theta) = 0");
        accumulated += jump / c;
      }
    }
    const auto nodes = detail::uniform_nodes(s.t0, s.t1, n);
    const double h = (s.t1 - s.t0) / static_cast<double>(n);
    std::vector<cplx> f(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (i > 0) {
        const double mid = 0.5 * (nodes[i - 1] + nodes[i]);
        double inc = 0.0;
        for (int g = 0; g < 3; ++g) inc += gl_w[g] * inner_integrand(s, mid + 0.5 * h * gl_x[g]);
        accumulated += 0.5 * h * inc;
      }
      const double th_dot = detail::segment_derivative(s.theta, nodes[i], s.t0, s.t1);
      f[i] = 0.5 * th_dot * std::exp(-I_unit * accumulated);
    }
    total += detail::simpson(f, h);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Published parameter sets

/// Three-segment trajectory whose laser is |W| = omega_max with phases
/// {pi/3, -pi/3, pi/3}; theta advances by pi per segment.
inline GeometricTrajectory table1_trajectory(double omega_max, double t_start = 0.0) {
  if (!(omega_max > 0)) throw Error("table1_trajectory: omega_max must be positive");
  const double tau = 3 * pi / omega_max;
  const double phases[3] = {pi / 3, -pi / 3, pi / 3};
  std::vector<TrajectorySegment> segs;
  for (int k = 0; k < 3; ++k) {
    const double eta = phases[k] + pi / 2;
    segs.push_back({t_start + k * tau / 3, t_start + (k + 1) * tau / 3,
                    [=](double t) { return omega_max * (t - t_start); }, [=](double) { return eta; }});
  }
  return GeometricTrajectory(std::move(segs));
}

inline PulseSchedule control_schedule_table1(double omega_max, double t_start = 0.0) {
  if (!(omega_max > 0)) throw Error("control_schedule_table1: omega_max must be positive");
  const double tau = 3 * pi / omega_max;
  const double phases[3] = {pi / 3, -pi / 3, pi / 3};
  std::vector<PulseSegment> segs;
  for (int k = 0; k < 3; ++k)
    segs.push_back({t_start + k * tau / 3, t_start + (k + 1) * tau / 3, ConstEnvelope{omega_max}, phases[k]});
  return PulseSchedule(DriveChannel::control_1_Rp, std::move(segs));
}

/// Four sin^2 humps (area pi each) with phi2 = {0, 3pi/2, 0, 3pi/2}.
inline GeometricTrajectory table2_trajectory(double tau2, double t_start = 0.0) {
  if (!(tau2 > 0)) throw Error("table2_trajectory: tau2 must be positive");
  const double phi2[4] = {0.0, 3 * pi / 2, 0.0, 3 * pi / 2};
  std::vector<TrajectorySegment> segs;
  for (int k = 0; k < 4; ++k) {
    const double eta = phi2[k] + pi / 2;
    segs.push_back({t_start + k * tau2 / 4, t_start + (k + 1) * tau2 / 4,
                    [=](double t) {
                      const double s = t - t_start;
                      return 4 * pi / tau2 * s - 0.5 * std::sin(8 * pi * s / tau2);
                    },
                    [=](double) { return eta; }});
  }
  return GeometricTrajectory(std::move(segs));
}

struct TargetSchedules {
  PulseSchedule zero;  // |0> <-> |r>
  PulseSchedule one;   // |1> <-> |r>
  double tau2 = 0.0;
};

/// |W_t(t)| envelope of the four-hump target pulse, peak 8 pi / tau2.
inline PulseSchedule table2_envelope(double tau2, double t_start, double scale, double phase_offset,
                                     DriveChannel channel) {
  const double phi2[4] = {0.0, 3 * pi / 2, 0.0, 3 * pi / 2};
  std::vector<PulseSegment> segs;
  for (int k = 0; k < 4; ++k) {
    const double t_ref = t_start + (k < 2 ? 0.0 : tau2 / 2);
    segs.push_back({t_start + k * tau2 / 4, t_start + (k + 1) * tau2 / 4,
                    Sin2Envelope{scale * 8 * pi / tau2, t_ref, tau2 / 4}, phi2[k] + phase_offset});
  }
  return PulseSchedule(channel, std::move(segs));
}

/// Splits a total drive |W_t| e^{i phi2} onto the two target transitions:
/// |W_t0| = |W_t| sin(Theta/2), |W_t1| = |W_t| cos(Theta/2), phases
/// phi_t1 = phi2 and phi_t0 = phi + phi2. A negative projection is carried
/// as an extra pi in the phase so amplitudes stay non-negative.
inline TargetSchedules target_schedule_table2(double Theta, double phi, double omega_max_t1, double t_start = 0.0) {
  if (!(omega_max_t1 > 0)) throw Error("target_schedule_table2: omega_max_t1 must be positive");
  const double c = std::cos(Theta / 2), s = std::sin(Theta / 2);
  if (std::abs(c) < 1e-12) throw Error("target_schedule_table2: cos(Theta/2) = 0 leaves tau2 undefined");
  const double tau2 = 8 * pi * std::abs(c) / omega_max_t1;
  TargetSchedules out;
  out.tau2 = tau2;
  out.one = table2_envelope(tau2, t_start, std::abs(c), c < 0 ? pi : 0.0, DriveChannel::target_1_r);
  out.zero = table2_envelope(tau2, t_start, std::abs(s), phi + (s < 0 ? pi : 0.0), DriveChannel::target_0_r);
  return out;
}

inline TargetSchedules apply_rabi_error(const TargetSchedules& t, double eps) {
  return {apply_rabi_error(t.zero, eps), apply_rabi_error(t.one, eps), t.tau2};
}

// ---------------------------------------------------------------------------
// JSON form: {"channel": ..., "segments": [{"t0", "t1", "envelope": {"kind",
// "params"}, "phase"}]}; see schema/pulse_schedule.schema.json.

inline nlohmann::json to_json(const PulseSchedule& sched) {
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& s : sched.segments()) {
    nlohmann::json env;
    if (const auto* c = std::get_if<ConstEnvelope>(&s.envelope)) {
      env = {{"kind", "const"}, {"params", {{"value", c->value}}}};
    } else {
      const auto& e = std::get<Sin2Envelope>(s.envelope);
      env = {{"kind", "sin2"}, {"params", {{"peak", e.peak}, {"t_ref", e.t_ref}, {"width", e.width}}}};
    }
    segs.push_back({{"t0", s.t0}, {"t1", s.t1}, {"envelope", env}, {"phase", s.phase}});
  }
  return {{"channel", to_string(sched.channel())}, {"segments", segs}};
}

inline PulseSchedule schedule_from_json(const nlohmann::json& j) {
  try {
    std::vector<PulseSegment> segs;
    for (const auto& s : j.at("segments")) {
      PulseSegment seg;
      seg.t0 = s.at("t0").get<double>();
      seg.t1 = s.at("t1").get<double>();
      seg.phase = s.at("phase").get<double>();
      const auto& env = s.at("envelope");
      const auto kind = env.at("kind").get<std::string>();
      const auto& p = env.at("params");
      if (kind == "const") {
        seg.envelope = ConstEnvelope{p.at("value").get<double>()};
      } else if (kind == "sin2") {
        seg.envelope = Sin2Envelope{p.at("peak").get<double>(), p.at("t_ref").get<double>(), p.at("width").get<double>()};
      } else {
        throw Error("unknown envelope kind '" + kind + "'");
      }
      segs.push_back(seg);
    }
    return PulseSchedule(drive_channel_from_string(j.at("channel").get<std::string>()), std::move(segs));
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("schedule_from_json: ") + e.what());
  }
}

}  // namespace rydgate
