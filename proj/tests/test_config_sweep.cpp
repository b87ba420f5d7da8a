#include <sstream>

#include <gtest/gtest.h>

#include "rydgate/sweep.hpp"

using namespace rydgate;
using nlohmann::json;

namespace {

std::string error_path(const json& j) {
  try {
    config_from_json(j);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "";
}

ScenarioConfig quick() {
  ScenarioConfig c;
  c.rates.fill(0.0);
  c.steps = 400;
  return c;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) out.push_back(f);
  return out;
}

}  // namespace

TEST(Config, EmptyObjectGivesDefaults) {
  const auto c = config_from_json(json::object());
  EXPECT_EQ(c.gate.name, "CZ");
  EXPECT_EQ(c.scheme, Scheme::super_robust);
  EXPECT_DOUBLE_EQ(c.omega_max, mhz(8.0));
  EXPECT_DOUBLE_EQ(c.model.V, mhz(298.0));
  EXPECT_EQ(c.rates, default_decay_rates());
  EXPECT_FALSE(c.doppler.enabled);
  EXPECT_FALSE(c.model.ladder.has_value());
  EXPECT_EQ(c.steps, 4000u);
}

TEST(Config, ErrorsCarryAPath) {
  EXPECT_EQ(error_path(json{{"drvie", json::object()}}), "$.drvie");
  EXPECT_EQ(error_path(json{{"drive", {{"xi", "big"}}}}), "$.drive.xi");
  EXPECT_EQ(error_path(json{{"model", {{"V_MHz_over_2pi", -1}}}}), "$.model.V_MHz_over_2pi");
  EXPECT_EQ(error_path(json{{"model", {{"distance_um", 6}}}}), "$.model.distance_um");
  EXPECT_EQ(error_path(json{{"integrator", {{"steps", 10}}}}), "$.integrator.steps");
  EXPECT_EQ(error_path(json{{"dissipation", {{"rates_kHz_over_2pi", {1, 2}}}}}), "$.dissipation.rates_kHz_over_2pi");
  EXPECT_EQ(error_path(json{{"gate", {{"name", "custom"}}}}), "$.gate.Theta");
  EXPECT_EQ(error_path(json{{"gate", {{"name", "CZ"}, {"Theta", 1.0}}}}), "$.gate");
  EXPECT_EQ(error_path(json{{"excitation", {{"delta_MHz_over_2pi", 100}}}}), "$.excitation.delta_MHz_over_2pi");
  EXPECT_EQ(error_path(json{{"model", {{"leakage", {{{"label", "L"}}}}}}}), "$.model.leakage[0].control_level");
  EXPECT_EQ(error_path(json{{"seed", -3}}), "$.seed");
  EXPECT_EQ(error_path(json::array()), "$");
}

TEST(Config, PhysicalUnits) {
  const auto c = config_from_json(json::parse(R"({
    "gate": {"name": "custom", "Theta": -1.0, "phi": 0.5},
    "drive": {"omega_max_MHz_over_2pi": 4, "xi": 0.1},
    "model": {"C3_GHz_um3": 64.4, "distance_um": 6, "leakage": "default"},
    "dissipation": {"rates_kHz_over_2pi": [1,2,3,4,5,6,7,8,9,10,11,12]},
    "doppler": {"temperature_uK": 10, "echo": true},
    "integrator": {"steps": 500, "jobs": 2},
    "seed": 17
  })"));
  EXPECT_DOUBLE_EQ(c.gate.Theta, -1.0);
  EXPECT_DOUBLE_EQ(c.omega_max, mhz(4.0));
  EXPECT_NEAR(to_mhz(c.model.V), 64.4e3 / 216, 1e-9);
  EXPECT_EQ(c.model.leakage.size(), 2u);
  EXPECT_DOUBLE_EQ(c.rates[11], khz(12.0));
  EXPECT_TRUE(c.doppler.enabled);
  EXPECT_TRUE(c.doppler.echo);
  EXPECT_EQ(c.steps, 500u);
  EXPECT_EQ(c.jobs, 2u);
  EXPECT_EQ(c.seed, 17u);
}

TEST(Config, SeedPrecedence) {
  EXPECT_EQ(config_from_json(json{{"doppler", {{"seed", 5}}}}).seed, 5u);
  EXPECT_EQ(config_from_json(json{{"seed", 9}, {"doppler", {{"seed", 5}}}}).seed, 9u);
}

TEST(Config, LadderSection) {
  const auto c = config_from_json(json{{"excitation", {{"mode", "ladder"}, {"modulation", "blue"}}}});
  ASSERT_TRUE(c.model.ladder.has_value());
  EXPECT_EQ(c.model.ladder->modulation, LadderModulation::blue);
  EXPECT_DOUBLE_EQ(c.model.ladder->delta, mhz(1225.0));
  EXPECT_FALSE(config_from_json(json{{"excitation", {{"mode", "effective"}}}}).model.ladder.has_value());
}

TEST(Config, ShippedConfigsLoad) {
  for (const char* name : {"cz_default", "cnot_default", "dark_state_cz", "blockade_cz", "weak_blockade_cz",
                           "leakage_cz", "ladder_cnot", "doppler_cnot_echo", "random_velocity_cnot",
                           "reduced_regime_cz", "custom_gate"})
    EXPECT_NO_THROW(load_config(std::string(RYDGATE_SOURCE_DIR) + "/configs/" + name + ".json")) << name;
  EXPECT_THROW(load_config("/nonexistent.json"), ConfigError);
}

TEST(Config, ExcitationTable) {
  const auto t = excitation_table_from_json(json::parse(R"({"x": 3, "control": [{"delta_MHz_over_2pi": 50, "dipole_ratio": 0.3}]})"));
  EXPECT_EQ(t.x, 3.0);
  ASSERT_EQ(t.control.size(), 1u);
  EXPECT_DOUBLE_EQ(t.control[0].delta, mhz(50.0));
  EXPECT_TRUE(t.target.empty());
  EXPECT_THROW(excitation_table_from_json(json{{"x", 4}}), ConfigError);
  EXPECT_NO_THROW(excitation_table_from_json(
      read_json_file(std::string(RYDGATE_SOURCE_DIR) + "/data/excitation_channels_placeholder.json")));
}

TEST(Sweep, ParseAxis) {
  const auto a = parse_axis("xi=0:0.2:21");
  EXPECT_EQ(a.parameter, SweepParameter::xi);
  ASSERT_EQ(a.values.size(), 21u);
  EXPECT_DOUBLE_EQ(a.values[20], 0.2);
  EXPECT_NEAR(a.values[1], 0.01, 1e-15);
  const auto b = parse_axis("V=50,100,298");
  EXPECT_EQ(b.values, (std::vector<double>{50, 100, 298}));
  EXPECT_THROW(parse_axis("xi"), ConfigError);
  EXPECT_THROW(parse_axis("nope=1,2"), ConfigError);
  EXPECT_THROW(parse_axis("xi=0:1:x"), ConfigError);
  EXPECT_THROW(parse_axis("xi=0:1:0"), ConfigError);
}

TEST(Sweep, PointsLastAxisFastest) {
  ScenarioConfig base;
  base.seed = 42;
  const auto pts = sweep_points(base, {parse_axis("xi=0:0.2:21"), parse_axis("epsilon=0:0.2:21")});
  ASSERT_EQ(pts.size(), 441u);
  EXPECT_DOUBLE_EQ(pts[1].epsilon, 0.01);
  EXPECT_DOUBLE_EQ(pts[1].xi, 0.0);
  EXPECT_DOUBLE_EQ(pts[21].xi, 0.01);
  EXPECT_EQ(pts[7].seed, point_seed(42, 7));
  EXPECT_NE(pts[7].seed, pts[8].seed);
  EXPECT_EQ(point_seed(42, 7), point_seed(42, 7));
  const auto v = sweep_points(ScenarioConfig{}, {parse_axis("V=10"), parse_axis("temperature=5")});
  EXPECT_DOUBLE_EQ(v[0].model.V, mhz(10.0));
  EXPECT_TRUE(v[0].doppler.enabled);
}

TEST(Sweep, RunScenarioIsDeterministic) {
  const auto a = run_scenario(quick(), false), b = run_scenario(quick(), false);
  EXPECT_EQ(csv_row(a), csv_row(b));
  EXPECT_GT(a.avg_fidelity, 0.999);
  EXPECT_EQ(a.runtime_s, 0.0);
  EXPECT_EQ(a.status, "ok");
}

TEST(Sweep, ResultsDoNotDependOnJobs) {
  const std::vector<SweepAxis> axes{parse_axis("xi=0,0.1"), parse_axis("epsilon=0,0.1")};
  const auto a = format_csv(run_sweep(quick(), axes, 1, false));
  const auto b = format_csv(run_sweep(quick(), axes, 3, false));
  EXPECT_EQ(a, b);
}

TEST(Sweep, FailedPointsAreRecorded) {
  auto c = quick();
  c.max_phase_per_step = 1e9;
  c.steps = 4000;
  const auto rows = run_sweep(c, {parse_axis("V=298,100000")}, 1, false);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].status, "ok");
  EXPECT_EQ(rows[1].status.rfind("propagation_error: ", 0), 0u) << rows[1].status;
  EXPECT_TRUE(std::isnan(rows[1].avg_fidelity));
}

TEST(Csv, HeaderAndRoundTrip) {
  ResultRow r = describe(quick());
  r.avg_fidelity = 0.987654321012;
  r.max_leakage = 8.01234567e-5;
  r.trace_deficit = 1.5e-3;
  const auto text = format_csv({r});
  const auto end = text.find("\r\n");
  ASSERT_NE(end, std::string::npos);
  const auto header = split_fields(text.substr(0, end));
  EXPECT_EQ(header, result_columns());
  const auto row = split_fields(text.substr(end + 2, text.size() - end - 4));
  ASSERT_EQ(row.size(), header.size());
  EXPECT_EQ(row[0], "super_robust");
  EXPECT_NEAR(std::stod(row[9]), r.avg_fidelity, 1e-9);
  EXPECT_NEAR(std::stod(row[10]), r.max_leakage, 1e-9 * r.max_leakage);
  EXPECT_NEAR(std::stod(row[4]), 298.0, 1e-9);
  EXPECT_EQ(row[6], "false");
}

TEST(Csv, Quoting) {
  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_line({"a", "b c"}), "a,b c\r\n");
  EXPECT_THROW(emit_csv({}, "/tmp/x.csv"), Error);
  EXPECT_THROW(write_text("/nonexistent_dir/x.csv", "x"), OutputError);
}
