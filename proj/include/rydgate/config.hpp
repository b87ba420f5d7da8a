#pragma once

// Strict JSON scenario configuration. Every section is optional; unknown keys
// and wrongly typed values are rejected with the offending field path.

#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "rydgate/metrics.hpp"
#include "rydgate/protocols.hpp"

namespace rydgate {

inline constexpr const char* schema_version = "1";

class ConfigError : public Error {
 public:
  ConfigError(const std::string& path, const std::string& what) : Error(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

namespace config_detail {

using nlohmann::json;

inline std::string child(const std::string& path, const std::string& key) { return path + "." + key; }
inline std::string child(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

inline void expect_object(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) throw ConfigError(child(path, k), "unknown key");
}

inline double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(path, "must be finite");
  return v;
}

inline bool boolean(const json& j, const std::string& path) {
  if (!j.is_boolean()) throw ConfigError(path, "expected true or false");
  return j.get<bool>();
}

inline std::string string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path, "expected a string");
  return j.get<std::string>();
}

inline std::uint64_t unsigned_int(const json& j, const std::string& path) {
  if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() && j.get<std::int64_t>() < 0))
    throw ConfigError(path, "expected a non-negative integer");
  return j.get<std::uint64_t>();
}

template <class Fn>
void optional(const json& obj, const std::string& path, const char* key, Fn&& fn) {
  if (obj.contains(key)) fn(obj.at(key), child(path, key));
}

inline void positive(double v, const std::string& path) {
  if (!(v > 0)) throw ConfigError(path, "must be positive");
}

inline GateSpec parse_gate(const json& j, const std::string& path) {
  if (j.is_string()) {
    try {
      return gate_from_name(j.get<std::string>());
    } catch (const Error& e) {
      throw ConfigError(path, e.what());
    }
  }
  expect_object(j, path, {"name", "Theta", "phi"});
  GateSpec g{"custom", 0.0, 0.0};
  if (j.contains("name")) {
    const auto name = string(j.at("name"), child(path, "name"));
    if (name != "custom") {
      if (j.contains("Theta") || j.contains("phi"))
        throw ConfigError(path, "named gates fix Theta and phi; use name \"custom\"");
      try {
        return gate_from_name(name);
      } catch (const Error& e) {
        throw ConfigError(child(path, "name"), e.what());
      }
    }
  }
  if (!j.contains("Theta")) throw ConfigError(child(path, "Theta"), "required for a custom gate");
  g.Theta = number(j.at("Theta"), child(path, "Theta"));
  optional(j, path, "phi", [&](const json& v, const std::string& p) { g.phi = number(v, p); });
  return g;
}

inline void parse_drive(const json& j, const std::string& path, ScenarioConfig& cfg) {
  expect_object(j, path, {"omega_max_MHz_over_2pi", "xi", "epsilon"});
  optional(j, path, "omega_max_MHz_over_2pi", [&](const json& v, const std::string& p) {
    cfg.omega_max = mhz(number(v, p));
    positive(cfg.omega_max, p);
  });
  optional(j, path, "xi", [&](const json& v, const std::string& p) {
    cfg.xi = number(v, p);
    if (cfg.xi < -1) throw ConfigError(p, "must be >= -1");
  });
  optional(j, path, "epsilon", [&](const json& v, const std::string& p) {
    cfg.epsilon = number(v, p);
    if (cfg.epsilon < -1) throw ConfigError(p, "must be >= -1");
  });
}

inline LeakageChannel parse_leakage_channel(const json& j, const std::string& path) {
  expect_object(j, path, {"label", "control_level", "target_level", "coupling_MHz_over_2pi", "detuning_MHz_over_2pi"});
  for (const char* k : {"label", "control_level", "target_level", "coupling_MHz_over_2pi", "detuning_MHz_over_2pi"})
    if (!j.contains(k)) throw ConfigError(child(path, k), "required");
  LeakageChannel ch;
  ch.label = string(j.at("label"), child(path, "label"));
  ch.control_level = string(j.at("control_level"), child(path, "control_level"));
  ch.target_level = string(j.at("target_level"), child(path, "target_level"));
  ch.coupling = mhz(number(j.at("coupling_MHz_over_2pi"), child(path, "coupling_MHz_over_2pi")));
  ch.detuning = mhz(number(j.at("detuning_MHz_over_2pi"), child(path, "detuning_MHz_over_2pi")));
  if (ch.label.empty()) throw ConfigError(child(path, "label"), "must not be empty");
  return ch;
}

inline void parse_model(const json& j, const std::string& path, ScenarioConfig& cfg) {
  expect_object(j, path, {"V_MHz_over_2pi", "C3_GHz_um3", "distance_um", "rri_fluctuation", "leakage"});
  auto& m = cfg.model;
  const bool has_v = j.contains("V_MHz_over_2pi");
  const bool has_c3 = j.contains("C3_GHz_um3");
  if (has_v && has_c3) throw ConfigError(path, "give either V_MHz_over_2pi or C3_GHz_um3, not both");
  if (has_v) {
    m.V = mhz(number(j.at("V_MHz_over_2pi"), child(path, "V_MHz_over_2pi")));
    positive(m.V, child(path, "V_MHz_over_2pi"));
  }
  if (!has_c3 && j.contains("distance_um")) throw ConfigError(child(path, "distance_um"), "needs C3_GHz_um3");
  if (has_c3) {
    const double c3 = mhz(1e3 * number(j.at("C3_GHz_um3"), child(path, "C3_GHz_um3")));
    positive(c3, child(path, "C3_GHz_um3"));
    if (!j.contains("distance_um")) throw ConfigError(child(path, "distance_um"), "required with C3_GHz_um3");
    const auto p = child(path, "distance_um");
    const double d = number(j.at("distance_um"), p);
    positive(d, p);
    auto leak = m.leakage;
    m = AtomPairModel::from_c3(c3, d);
    m.leakage = leak;
  }
  optional(j, path, "rri_fluctuation", [&](const json& v, const std::string& p) {
    cfg.rri_fluctuation = number(v, p);
    if (!(cfg.rri_fluctuation > -1)) throw ConfigError(p, "must be > -1");
  });
  optional(j, path, "leakage", [&](const json& v, const std::string& p) {
    std::vector<LeakageChannel> chans;
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      if (s == "default")
        chans = default_leakage_channels();
      else if (s != "none")
        throw ConfigError(p, "expected \"default\", \"none\" or a list of channels");
    } else if (v.is_array()) {
      for (std::size_t i = 0; i < v.size(); ++i) chans.push_back(parse_leakage_channel(v[i], child(p, i)));
    } else {
      throw ConfigError(p, "expected \"default\", \"none\" or a list of channels");
    }
    AtomPairModel base = m;
    base.leakage.clear();
    try {
      m = with_leakage_channels(base, chans);
    } catch (const Error& e) {
      throw ConfigError(p, e.what());
    }
  });
}

inline void parse_dissipation(const json& j, const std::string& path, ScenarioConfig& cfg) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "default")
      cfg.rates = default_decay_rates();
    else if (s == "none")
      cfg.rates.fill(0.0);
    else
      throw ConfigError(path, "expected \"default\", \"none\" or an object");
    return;
  }
  expect_object(j, path, {"rates_kHz_over_2pi"});
  optional(j, path, "rates_kHz_over_2pi", [&](const json& v, const std::string& p) {
    if (!v.is_array() || v.size() != 12) throw ConfigError(p, "expected 12 rates (A1..A12)");
    for (std::size_t i = 0; i < 12; ++i) {
      const double r = number(v[i], child(p, i));
      if (r < 0) throw ConfigError(child(p, i), "must be non-negative");
      cfg.rates[i] = khz(r);
    }
  });
}

inline void parse_doppler(const json& j, const std::string& path, ScenarioConfig& cfg) {
  expect_object(j, path, {"enabled", "temperature_uK", "k_eff_rad_per_um", "mass_kg", "echo", "velocity", "spread",
                          "speed_um_per_us", "seed"});
  auto& d = cfg.doppler;
  d.enabled = true;
  optional(j, path, "enabled", [&](const json& v, const std::string& p) { d.enabled = boolean(v, p); });
  optional(j, path, "temperature_uK", [&](const json& v, const std::string& p) {
    d.temperature_uK = number(v, p);
    if (d.temperature_uK < 0) throw ConfigError(p, "must be non-negative");
  });
  optional(j, path, "k_eff_rad_per_um", [&](const json& v, const std::string& p) { d.k_eff = number(v, p); });
  optional(j, path, "mass_kg", [&](const json& v, const std::string& p) {
    d.mass_kg = number(v, p);
    positive(d.mass_kg, p);
  });
  optional(j, path, "echo", [&](const json& v, const std::string& p) { d.echo = boolean(v, p); });
  optional(j, path, "velocity", [&](const json& v, const std::string& p) {
    const auto s = string(v, p);
    if (s == "constant")
      d.mode = VelocityMode::constant;
    else if (s == "gaussian")
      d.mode = VelocityMode::gaussian;
    else
      throw ConfigError(p, "expected \"constant\" or \"gaussian\"");
  });
  optional(j, path, "spread", [&](const json& v, const std::string& p) {
    d.spread = number(v, p);
    if (d.spread < 0) throw ConfigError(p, "must be non-negative");
  });
  optional(j, path, "speed_um_per_us", [&](const json& v, const std::string& p) {
    d.speed_override = number(v, p);
    if (*d.speed_override < 0) throw ConfigError(p, "must be non-negative");
  });
  optional(j, path, "seed", [&](const json& v, const std::string& p) { cfg.seed = unsigned_int(v, p); });
}

inline void parse_excitation(const json& j, const std::string& path, ScenarioConfig& cfg) {
  expect_object(j, path, {"mode", "omega_r_MHz_over_2pi", "omega_b_MHz_over_2pi", "delta_MHz_over_2pi",
                          "gamma_p_MHz_over_2pi", "modulation", "stark_compensation"});
  std::string mode = "effective";
  optional(j, path, "mode", [&](const json& v, const std::string& p) {
    mode = string(v, p);
    if (mode != "effective" && mode != "ladder") throw ConfigError(p, "expected \"effective\" or \"ladder\"");
  });
  if (mode == "effective") {
    for (const auto& [k, v] : j.items())
      if (k != "mode") throw ConfigError(child(path, k), "only used with mode \"ladder\"");
    cfg.model.ladder.reset();
    return;
  }
  TwoPhotonLadder lad = default_ladder();
  optional(j, path, "omega_r_MHz_over_2pi", [&](const json& v, const std::string& p) { lad.omega_r = mhz(number(v, p)); positive(lad.omega_r, p); });
  optional(j, path, "omega_b_MHz_over_2pi", [&](const json& v, const std::string& p) { lad.omega_b = mhz(number(v, p)); positive(lad.omega_b, p); });
  optional(j, path, "delta_MHz_over_2pi", [&](const json& v, const std::string& p) {
    lad.delta = mhz(number(v, p));
    if (lad.delta == 0) throw ConfigError(p, "must be non-zero");
  });
  optional(j, path, "gamma_p_MHz_over_2pi", [&](const json& v, const std::string& p) {
    lad.gamma_p = mhz(number(v, p));
    if (lad.gamma_p < 0) throw ConfigError(p, "must be non-negative");
  });
  optional(j, path, "modulation", [&](const json& v, const std::string& p) {
    const auto s = string(v, p);
    if (s == "red")
      lad.modulation = LadderModulation::red;
    else if (s == "blue")
      lad.modulation = LadderModulation::blue;
    else
      throw ConfigError(p, "expected \"red\" or \"blue\"");
  });
  optional(j, path, "stark_compensation",
           [&](const json& v, const std::string& p) { cfg.model.stark_compensation = boolean(v, p); });
  cfg.model.ladder = lad;
}

inline void parse_integrator(const json& j, const std::string& path, ScenarioConfig& cfg) {
  expect_object(j, path, {"steps", "max_phase_per_step", "jobs"});
  optional(j, path, "steps", [&](const json& v, const std::string& p) {
    cfg.steps = unsigned_int(v, p);
    if (cfg.steps < 100) throw ConfigError(p, "must be >= 100");
  });
  optional(j, path, "max_phase_per_step", [&](const json& v, const std::string& p) {
    cfg.max_phase_per_step = number(v, p);
    positive(cfg.max_phase_per_step, p);
  });
  optional(j, path, "jobs", [&](const json& v, const std::string& p) {
    cfg.jobs = unsigned_int(v, p);
    if (cfg.jobs < 1) throw ConfigError(p, "must be >= 1");
  });
}

}  // namespace config_detail

/// Sections: gate, scheme, drive, model, dissipation, doppler, excitation,
/// integrator, seed. A top-level seed wins over doppler.seed.
inline ScenarioConfig config_from_json(const nlohmann::json& j) {
  using namespace config_detail;
  const std::string root = "$";
  expect_object(j, root, {"gate", "scheme", "drive", "model", "dissipation", "doppler", "excitation", "integrator", "seed"});
  ScenarioConfig cfg;
  optional(j, root, "gate", [&](const json& v, const std::string& p) { cfg.gate = parse_gate(v, p); });
  optional(j, root, "scheme", [&](const json& v, const std::string& p) {
    try {
      cfg.scheme = scheme_from_string(string(v, p));
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(p, e.what());
    }
  });
  optional(j, root, "drive", [&](const json& v, const std::string& p) { parse_drive(v, p, cfg); });
  optional(j, root, "model", [&](const json& v, const std::string& p) { parse_model(v, p, cfg); });
  optional(j, root, "dissipation", [&](const json& v, const std::string& p) { parse_dissipation(v, p, cfg); });
  optional(j, root, "doppler", [&](const json& v, const std::string& p) { parse_doppler(v, p, cfg); });
  optional(j, root, "excitation", [&](const json& v, const std::string& p) { parse_excitation(v, p, cfg); });
  optional(j, root, "integrator", [&](const json& v, const std::string& p) { parse_integrator(v, p, cfg); });
  optional(j, root, "seed", [&](const json& v, const std::string& p) { cfg.seed = unsigned_int(v, p); });
  try {
    cfg.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(root, e.what());
  }
  return cfg;
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open file");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path, std::string("invalid JSON: ") + e.what());
  }
}

inline ScenarioConfig load_config(const std::string& path) { return config_from_json(read_json_file(path)); }

// ---------------------------------------------------------------------------
// Excitation channel tables

struct ExcitationTable {
  double x = 2.0;
  std::vector<ExcitationChannel> control;
  std::vector<ExcitationChannel> target;
  std::string note;
};

inline ExcitationTable excitation_table_from_json(const nlohmann::json& j) {
  using namespace config_detail;
  const std::string root = "$";
  expect_object(j, root, {"x", "control", "target", "note"});
  ExcitationTable t;
  optional(j, root, "x", [&](const json& v, const std::string& p) {
    t.x = number(v, p);
    if (t.x != 2.0 && t.x != 3.0) throw ConfigError(p, "must be 2 or 3");
  });
  optional(j, root, "note", [&](const json& v, const std::string& p) { t.note = string(v, p); });
  auto list = [&](const char* key, std::vector<ExcitationChannel>& out) {
    optional(j, root, key, [&](const json& v, const std::string& p) {
      if (!v.is_array()) throw ConfigError(p, "expected a list");
      for (std::size_t i = 0; i < v.size(); ++i) {
        const auto pi_ = child(p, i);
        expect_object(v[i], pi_, {"delta_MHz_over_2pi", "dipole_ratio"});
        for (const char* k : {"delta_MHz_over_2pi", "dipole_ratio"})
          if (!v[i].contains(k)) throw ConfigError(child(pi_, k), "required");
        ExcitationChannel ch;
        ch.delta = mhz(number(v[i].at("delta_MHz_over_2pi"), child(pi_, "delta_MHz_over_2pi")));
        ch.dipole_ratio = number(v[i].at("dipole_ratio"), child(pi_, "dipole_ratio"));
        if (ch.delta == 0) throw ConfigError(child(pi_, "delta_MHz_over_2pi"), "must be non-zero");
        out.push_back(ch);
      }
    });
  };
  list("control", t.control);
  list("target", t.target);
  return t;
}

}  // namespace rydgate
