// rydgate: command-line front end for scenarios, sweeps and pulse checks.
//
// Exit codes: 0 ok, 1 a check failed, 2 bad config or arguments,
// 3 propagation failure, 4 output failure.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rydgate/rydgate.hpp"

using namespace rydgate;

namespace {

constexpr int exit_check_failed = 1;
constexpr int exit_config = 2;
constexpr int exit_propagation = 3;
constexpr int exit_output = 4;

struct CheckTable {
  bool all_pass = true;

  void row(const std::string& name, double value, double limit, bool pass) {
    all_pass = all_pass && pass;
    std::printf("%-34s %14.6e  %-12s %s\n", name.c_str(), value, ("<= " + csv_number(limit)).c_str(), pass ? "PASS" : "FAIL");
  }
};

int check_pulses(const ScenarioConfig& cfg) {
  CheckTable tab;
  std::printf("%-34s %14s  %-12s %s\n", "check", "value", "limit", "result");
  const auto t1 = table1_trajectory(cfg.omega_max);
  const auto pulses = protocol_pulses([&] {
    ScenarioConfig c = cfg;
    c.scheme = Scheme::super_robust;
    return c;
  }());
  const auto t2 = table2_trajectory(pulses.step2.tau2, pulses.step2.one.t_start());
  const double r1 = parallel_transport_residual(t1, 2001);
  const double r2 = parallel_transport_residual(t2, 2001);
  tab.row("transport residual, control", r1, 1e-10, r1 <= 1e-10);
  tab.row("transport residual, target", r2, 1e-10, r2 <= 1e-10);
  const double i1 = std::abs(super_robust_integral(t1, 2000));
  const double i2 = std::abs(super_robust_integral(t2, 2000));
  tab.row("|super-robust integral|, control", i1, 1e-10, i1 <= 1e-10);
  tab.row("|super-robust integral|, target", i2, 1e-10, i2 <= 1e-10);

  AtomPairModel model = cfg.model;
  model.V *= 1.0 + cfg.rri_fluctuation;
  model.ladder.reset();
  const auto grid = uniform_grid(pulses.step2.one.t_start(), pulses.step2.one.t_end(), 4001);
  const auto margin = adiabaticity_margin(pulses.step2, model, grid);
  tab.row("adiabaticity ratio", margin.ratio, 0.1, !margin.flagged);
  const auto ph = phase_functionals(pulses.step2, model, cfg.gate.Theta, cfg.gate.phi);
  tab.row("|dynamical phase|", std::abs(ph.phi_dy), 1e-8, std::abs(ph.phi_dy) <= 1e-8);
  tab.row("|geometric phase|", std::abs(ph.phi_ge), 1e-8, std::abs(ph.phi_ge) <= 1e-8);

  const auto conv = convergence_report(cfg);
  tab.row("convergence |F(2N) - F(N)|", conv.delta, 1e-6, !conv.flagged);
  std::printf("fidelity %.9f (doubled steps %.9f)\n", conv.fidelity, conv.fidelity_doubled);
  return tab.all_pass ? 0 : exit_check_failed;
}

int simulate(const ScenarioConfig& cfg, const std::string& out, const std::string& trajectory, bool timing,
             std::size_t snapshots) {
  const auto row = run_scenario(cfg, timing);
  emit_csv({row}, out);
  std::printf("%s %s F=%.9f trace_deficit=%.3e max_leakage=%.3e\n", row.scheme.c_str(), row.gate.c_str(),
              row.avg_fidelity, row.trace_deficit, row.max_leakage);
  if (!trajectory.empty()) {
    const auto proto = build_protocol(cfg);
    StateVector psi = StateVector::Zero(static_cast<Eigen::Index>(proto.space.dim()));
    for (auto i : proto.space.computational_indices()) psi(static_cast<Eigen::Index>(i)) = 0.5;
    auto opt = step_options(cfg);
    opt.snapshot_every = std::max<std::size_t>(1, cfg.steps / std::max<std::size_t>(1, snapshots));
    const auto tr = evolve_density(proto, psi * psi.adjoint(), opt);
    write_text(trajectory, trajectory_csv(tr, proto.space));
  }
  return 0;
}

int leakage(const ScenarioConfig& cfg) {
  const auto rep = leakage_probability(cfg);
  std::printf("max_P %.6e\navg_P %.6e\nmax_channel_population %.6e\n", rep.max_P, rep.avg_P,
              rep.max_channel_population);
  return 0;
}

int excitation(const std::string& path, double omega_mhz) {
  const auto table = excitation_table_from_json(read_json_file(path));
  const double omega = mhz(omega_mhz);
  if (!(omega > 0)) throw ConfigError("omega", "must be positive");
  if (!table.note.empty()) std::printf("note: %s\n", table.note.c_str());
  double total = 0.0;
  for (const auto& [name, list] : {std::pair{"control", &table.control}, std::pair{"target", &table.target}}) {
    const auto rep = excitation_error(*list, omega, table.x);
    if (rep.empty_table) std::fprintf(stderr, "warning: no %s channels; contribution is 0\n", name);
    for (std::size_t k = 0; k < list->size(); ++k)
      std::printf("%s[%zu] delta/2pi=%.6g MHz exact=%.6e bound=%.6e\n", name, k, (*list)[k].delta / two_pi,
                  rep.exact[k], rep.bound[k]);
    std::printf("%s total %.6e\n", name, rep.total);
    total += rep.total;
  }
  std::printf("total %.6e\n", total);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pulse-level simulator for geometric Rydberg gates"};
  app.require_subcommand(0, 1);
  bool version = false;
  app.add_flag("--version", version, "Print the config schema version");

  std::string config, out, trajectory, channels;
  std::vector<std::string> axes;
  std::size_t jobs = default_jobs(), snapshots = 400;
  std::uint64_t seed = 0;
  bool no_timing = false;
  double omega_mhz = 8.0;

  auto* sim = app.add_subcommand("simulate", "Run one scenario and write a one-row CSV");
  sim->add_option("--config", config, "Scenario JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("--out", out, "Output CSV")->required();
  sim->add_option("--trajectory", trajectory, "Population trajectory CSV for the uniform superposition input");
  sim->add_option("--snapshots", snapshots, "Approximate snapshots per step in the trajectory");
  sim->add_flag("--no-timing", no_timing, "Write runtime_s = 0");

  auto* sw = app.add_subcommand("sweep", "Cartesian parameter sweep");
  sw->add_option("--config", config, "Base scenario JSON")->required()->check(CLI::ExistingFile);
  sw->add_option("--axis", axes, "NAME=START:STOP:COUNT or NAME=v1,v2,...")->required();
  sw->add_option("--jobs", jobs, "Worker threads");
  auto* seed_opt = sw->add_option("--seed", seed, "Master seed (defaults to the config seed)");
  sw->add_option("--out", out, "Output CSV")->required();
  sw->add_flag("--no-timing", no_timing, "Write runtime_s = 0 so output is byte-stable");

  auto* chk = app.add_subcommand("check-pulses", "Pulse conditions, adiabaticity, phases, convergence");
  chk->add_option("--config", config, "Scenario JSON")->required()->check(CLI::ExistingFile);

  auto* leak = app.add_subcommand("leakage", "Step (ii) leakage from |R'1>");
  leak->add_option("--config", config, "Scenario JSON")->required()->check(CLI::ExistingFile);

  auto* exc = app.add_subcommand("excitation-error", "Off-resonant Rydberg excitation estimate");
  exc->add_option("--channels", channels, "Channel table JSON")->required()->check(CLI::ExistingFile);
  exc->add_option("--omega", omega_mhz, "Rabi frequency in MHz/2pi");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_config;
  }

  if (version) {
    std::printf("%s\n", schema_version);
    return 0;
  }
  if (app.get_subcommands().empty()) {
    std::cout << app.help();
    return exit_config;
  }

  try {
    if (*exc) return excitation(channels, omega_mhz);
    ScenarioConfig cfg = load_config(config);
    if (*sim) return simulate(cfg, out, trajectory, !no_timing, snapshots);
    if (*chk) return check_pulses(cfg);
    if (*leak) return leakage(cfg);
    if (*sw) {
      std::vector<SweepAxis> parsed;
      for (const auto& a : axes) parsed.push_back(parse_axis(a));
      if (*seed_opt) cfg.seed = seed;
      const auto rows = run_sweep(cfg, parsed, jobs, !no_timing);
      emit_csv(rows, out);
      std::size_t failed = 0;
      for (const auto& r : rows) failed += r.status != "ok";
      std::printf("%zu points, %zu failed\n", rows.size(), failed);
      return 0;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return exit_config;
  } catch (const PropagationError& e) {
    std::fprintf(stderr, "propagation failed: %s\n", e.what());
    return exit_propagation;
  } catch (const OutputError& e) {
    std::fprintf(stderr, "output error: %s\n", e.what());
    return exit_output;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_config;
  }
  return 0;
}
