#pragma once

// Scenario runner, Cartesian parameter sweeps and CSV output.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "rydgate/config.hpp"
#include "rydgate/metrics.hpp"
#include "rydgate/parallel.hpp"
#include "rydgate/protocols.hpp"

namespace rydgate {

enum class SweepParameter { xi, epsilon, V, temperature, rri_fluctuation };

inline std::string to_string(SweepParameter p) {
  switch (p) {
    case SweepParameter::xi: return "xi";
    case SweepParameter::epsilon: return "epsilon";
    case SweepParameter::V: return "V";
    case SweepParameter::temperature: return "temperature";
    case SweepParameter::rri_fluctuation: return "rri_fluctuation";
  }
  return "?";
}

inline SweepParameter sweep_parameter_from_string(const std::string& s) {
  for (auto p : {SweepParameter::xi, SweepParameter::epsilon, SweepParameter::V, SweepParameter::temperature,
                 SweepParameter::rri_fluctuation})
    if (to_string(p) == s) return p;
  throw ConfigError("axis", "unknown sweep parameter '" + s + "'");
}

/// V in MHz/2pi, temperature in uK, the rest dimensionless.
struct SweepAxis {
  SweepParameter parameter = SweepParameter::xi;
  std::vector<double> values;

  static SweepAxis grid(SweepParameter p, double start, double stop, std::size_t count) {
    if (count < 1) throw ConfigError("axis." + to_string(p), "count must be >= 1");
    SweepAxis a{p, {}};
    for (std::size_t i = 0; i < count; ++i)
      a.values.push_back(count == 1 ? start : start + (stop - start) * static_cast<double>(i) / static_cast<double>(count - 1));
    a.validate();
    return a;
  }

  void validate() const {
    const auto path = "axis." + to_string(parameter);
    if (values.empty()) throw ConfigError(path, "needs at least one value");
    for (double v : values)
      if (!std::isfinite(v)) throw ConfigError(path, "values must be finite");
  }
};

/// NAME=START:STOP:COUNT or NAME=v1,v2,...
inline SweepAxis parse_axis(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos) throw ConfigError("axis", "expected NAME=START:STOP:COUNT or NAME=v1,v2,...");
  const auto p = sweep_parameter_from_string(spec.substr(0, eq));
  const std::string rest = spec.substr(eq + 1);
  const std::string path = "axis." + to_string(p);
  auto to_num = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      throw ConfigError(path, "cannot parse '" + s + "'");
    }
    if (used != s.size()) throw ConfigError(path, "cannot parse '" + s + "'");
    return v;
  };
  if (rest.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(rest);
    for (std::string tok; std::getline(ss, tok, ':');) parts.push_back(tok);
    if (parts.size() != 3) throw ConfigError(path, "expected START:STOP:COUNT");
    const double count = to_num(parts[2]);
    if (count < 1 || count != std::floor(count)) throw ConfigError(path, "count must be a positive integer");
    return SweepAxis::grid(p, to_num(parts[0]), to_num(parts[1]), static_cast<std::size_t>(count));
  }
  SweepAxis a{p, {}};
  std::stringstream ss(rest);
  for (std::string tok; std::getline(ss, tok, ',');) a.values.push_back(to_num(tok));
  a.validate();
  return a;
}

inline void apply_axis_value(ScenarioConfig& cfg, SweepParameter p, double v) {
  switch (p) {
    case SweepParameter::xi: cfg.xi = v; break;
    case SweepParameter::epsilon: cfg.epsilon = v; break;
    case SweepParameter::V:
      cfg.model.V = mhz(v);
      cfg.model.V_of_t = nullptr;
      cfg.model.C3.reset();
      cfg.model.distance.reset();
      break;
    case SweepParameter::temperature:
      cfg.doppler.enabled = true;
      cfg.doppler.temperature_uK = v;
      break;
    case SweepParameter::rri_fluctuation: cfg.rri_fluctuation = v; break;
  }
}

struct ResultRow {
  std::string scheme;
  std::string gate;
  double xi = 0.0;
  double epsilon = 0.0;
  double V_MHz_over_2pi = 0.0;
  double temperature_uK = 0.0;
  bool spin_echo = false;
  double rri_fluctuation = 0.0;
  std::uint64_t seed = 0;
  double avg_fidelity = std::numeric_limits<double>::quiet_NaN();
  double max_leakage = std::numeric_limits<double>::quiet_NaN();
  double trace_deficit = std::numeric_limits<double>::quiet_NaN();
  double runtime_s = 0.0;
  std::string status = "ok";
};

inline const std::vector<std::string>& result_columns() {
  static const std::vector<std::string> cols{"scheme",          "gate",         "xi",          "epsilon",
                                             "V_MHz_over_2pi",  "temperature_uK", "spin_echo", "rri_fluctuation",
                                             "seed",            "avg_fidelity", "max_leakage", "trace_deficit",
                                             "runtime_s",       "status"};
  return cols;
}

inline ResultRow describe(const ScenarioConfig& cfg) {
  ResultRow r;
  r.scheme = to_string(cfg.scheme);
  r.gate = cfg.gate.name;
  r.xi = cfg.xi;
  r.epsilon = cfg.epsilon;
  r.V_MHz_over_2pi = cfg.model.V_of_t ? std::numeric_limits<double>::quiet_NaN() : cfg.model.V / two_pi;
  r.temperature_uK = cfg.doppler.enabled ? cfg.doppler.temperature_uK : 0.0;
  r.spin_echo = cfg.doppler.enabled && cfg.doppler.echo;
  r.rri_fluctuation = cfg.rri_fluctuation;
  r.seed = cfg.seed;
  return r;
}

/// Throws on invalid configs and failed propagations.
inline ResultRow run_scenario(const ScenarioConfig& cfg, bool timing = true) {
  const auto start = std::chrono::steady_clock::now();
  ResultRow r = describe(cfg);
  const auto proto = build_protocol(cfg);
  const auto ch = protocol_channel(proto, step_options(cfg), cfg.jobs);
  r.avg_fidelity = average_gate_fidelity(ch, proto.ideal);
  r.trace_deficit = trace_deficit(ch);
  r.max_leakage = leakage_probability(cfg).max_P;
  if (timing) r.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t point_seed(std::uint64_t master, std::size_t index) {
  return splitmix64(master ^ splitmix64(static_cast<std::uint64_t>(index)));
}

/// Points follow the Cartesian product with the last axis varying fastest.
inline std::vector<ScenarioConfig> sweep_points(const ScenarioConfig& base, const std::vector<SweepAxis>& axes) {
  std::size_t total = 1;
  for (const auto& a : axes) {
    a.validate();
    total *= a.values.size();
  }
  std::vector<ScenarioConfig> out;
  out.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    ScenarioConfig c = base;
    std::size_t rem = i;
    for (std::size_t k = axes.size(); k-- > 0;) {
      const auto n = axes[k].values.size();
      apply_axis_value(c, axes[k].parameter, axes[k].values[rem % n]);
      rem /= n;
    }
    c.seed = point_seed(base.seed, i);
    c.jobs = 1;
    out.push_back(std::move(c));
  }
  return out;
}

inline std::vector<ResultRow> run_sweep(const ScenarioConfig& base, const std::vector<SweepAxis>& axes,
                                        std::size_t jobs, bool timing = true) {
  if (jobs < 1) throw ConfigError("jobs", "must be >= 1");
  const auto points = sweep_points(base, axes);
  std::vector<ResultRow> rows(points.size());
  parallel_for(points.size(), jobs, [&](std::size_t i) {
    try {
      rows[i] = run_scenario(points[i], timing);
    } catch (const PropagationError& e) {
      rows[i] = describe(points[i]);
      rows[i].status = std::string("propagation_error: ") + e.what();
    } catch (const Error& e) {
      rows[i] = describe(points[i]);
      rows[i].status = std::string("error: ") + e.what();
    }
  });
  return rows;
}

// ---------------------------------------------------------------------------
// CSV

class OutputError : public Error {
 public:
  using Error::Error;
};

inline std::string csv_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string csv_line(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += csv_field(fields[i]);
  }
  return out + "\r\n";
}

inline std::string csv_row(const ResultRow& r) {
  return csv_line({r.scheme, r.gate, csv_number(r.xi), csv_number(r.epsilon), csv_number(r.V_MHz_over_2pi),
                   csv_number(r.temperature_uK), r.spin_echo ? "true" : "false", csv_number(r.rri_fluctuation),
                   std::to_string(r.seed), csv_number(r.avg_fidelity), csv_number(r.max_leakage),
                   csv_number(r.trace_deficit), csv_number(r.runtime_s), r.status});
}

inline std::string format_csv(const std::vector<ResultRow>& rows) {
  std::string out = csv_line(result_columns());
  for (const auto& r : rows) out += csv_row(r);
  return out;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw OutputError("cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw OutputError("write to '" + path + "' failed");
}

inline void emit_csv(const std::vector<ResultRow>& rows, const std::string& path) {
  if (rows.empty()) throw Error("emit_csv: no rows");
  write_text(path, format_csv(rows));
}

/// time_us, then the population of every basis state, then the trace.
inline std::string trajectory_csv(const Trajectory<DensityMatrix>& tr, const HilbertSpace& space) {
  std::vector<std::string> head{"time_us"};
  for (std::size_t i = 0; i < space.dim(); ++i) head.push_back("P_" + space.label_of(i));
  head.push_back("trace");
  std::string out = csv_line(head);
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    const auto& rho = tr.states[k];
    std::vector<std::string> f{csv_number(tr.times[k])};
    for (Eigen::Index i = 0; i < rho.rows(); ++i) f.push_back(csv_number(rho(i, i).real()));
    f.push_back(csv_number(rho.trace().real()));
    out += csv_line(f);
  }
  return out;
}

}  // namespace rydgate
