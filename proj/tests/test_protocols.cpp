#include <gtest/gtest.h>

#include "rydgate/metrics.hpp"
#include "rydgate/protocols.hpp"

using namespace rydgate;

namespace {

ScenarioConfig closed(GateSpec g, Scheme s = Scheme::super_robust) {
  ScenarioConfig c;
  c.gate = g;
  c.scheme = s;
  c.rates.fill(0.0);
  return c;
}

double fidelity(const ScenarioConfig& c) {
  const auto proto = build_protocol(c);
  return average_gate_fidelity(run_protocol(c), proto.ideal);
}

}  // namespace

TEST(Protocols, IdealUnitaries) {
  const Operator cz = ideal_two_qubit_unitary(gate_cz());
  EXPECT_NEAR((cz - Operator(Eigen::Vector4cd(1, -1, 1, 1).asDiagonal())).norm(), 0.0, 1e-15);
  // CNOT up to the local phase convention: |0><0| (x) (-i sigma_y rotated) acts as a bit flip.
  const Operator cnot = ideal_two_qubit_unitary(gate_cnot());
  EXPECT_NEAR(std::abs(cnot(0, 1)), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(cnot(1, 0)), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(cnot(0, 0)), 0.0, 1e-15);
  const Operator ch = ideal_two_qubit_unitary(gate_chadamard());
  EXPECT_NEAR(std::abs(ch(0, 0)), std::sqrt(0.5), 1e-15);
  for (const auto& g : {gate_cz(), gate_cnot(), gate_chadamard(), GateSpec{"x", 0.3, 1.1}}) {
    const Operator u = ideal_two_qubit_unitary(g);
    EXPECT_NEAR((u.adjoint() * u - Operator::Identity(4, 4)).norm(), 0.0, 1e-14);
  }
  EXPECT_THROW(gate_from_name("SWAP"), Error);
}

TEST(Protocols, GateDuration) {
  const double W = mhz(8.0);
  const auto p = build_protocol(closed(gate_cz()));
  ASSERT_EQ(p.steps.size(), 3u);
  EXPECT_NEAR(p.steps[0].t1 - p.steps[0].t0, 3 * pi / W, 1e-12);
  EXPECT_NEAR(p.steps[1].t1 - p.steps[1].t0, 12 * pi / W, 1e-12);
  EXPECT_NEAR(p.steps[2].t0, p.steps[1].t1, 1e-15);
  EXPECT_NEAR(p.steps[2].t1, 18 * pi / W, 1e-12);
  EXPECT_TRUE(p.channels.empty());
  EXPECT_EQ(build_protocol(ScenarioConfig{}).channels.size(), 12u);
}

TEST(Protocols, ClosedSystemGatesAreAccurate) {
  for (const auto& g : {gate_cz(), gate_cnot(), gate_chadamard()}) EXPECT_GE(fidelity(closed(g)), 0.999) << g.name;
}

TEST(Protocols, BaselinesWithoutErrors) {
  EXPECT_GE(fidelity(closed(gate_cz(), Scheme::dark_state)), 0.999);
  EXPECT_GE(fidelity(closed(gate_cnot(), Scheme::dark_state)), 0.999);
  EXPECT_GE(fidelity(closed(gate_cz(), Scheme::blockade)), 0.999);
}

TEST(Protocols, RabiErrorsReduceFidelityGracefully) {
  auto c = closed(gate_cnot());
  c.xi = 0.1;
  c.epsilon = 0.1;
  const double f = fidelity(c);
  EXPECT_GT(f, 0.99);
  EXPECT_LT(f, fidelity(closed(gate_cnot())));
}

TEST(Protocols, DensityAndStateTomographyAgree) {
  auto c = closed(GateSpec{"custom", -pi / 3, 0.5});
  c.xi = 0.05;
  const auto proto = build_protocol(c);
  const auto opt = step_options(c);
  const auto a = unitary_tomography(proto, opt);
  const auto b = channel_tomography([&](const Operator& rho) { return evolve_density(proto, rho, opt).final_state(); },
                                    proto.space);
  for (std::size_t k = 0; k < 16; ++k) EXPECT_NEAR((a.images[k] - b.images[k]).norm(), 0.0, 1e-9);
}

TEST(Protocols, ParallelTomographyMatchesSerial) {
  ScenarioConfig c;
  c.gate = gate_cnot();
  c.steps = 400;
  const auto proto = build_protocol(c);
  const auto a = protocol_channel(proto, step_options(c), 1);
  const auto b = protocol_channel(proto, step_options(c), 3);
  for (std::size_t k = 0; k < 16; ++k) EXPECT_EQ(a.images[k], b.images[k]);
}

TEST(Protocols, GaussianVelocitiesDependOnSeed) {
  ScenarioConfig c = closed(gate_cnot());
  c.doppler.enabled = true;
  c.doppler.temperature_uK = 10.0;
  c.doppler.mode = VelocityMode::gaussian;
  c.seed = 7;
  const auto a = build_protocol(c).motion, b = build_protocol(c).motion;
  c.seed = 8;
  const auto d = build_protocol(c).motion;
  ASSERT_EQ(a.steps.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(a.steps[k].velocity, b.steps[k].velocity);
  EXPECT_NE(a.steps[0].velocity, d.steps[0].velocity);
}

TEST(Protocols, StepFailureNamesTheStep) {
  auto c = closed(gate_cz());
  c.model.V = mhz(1e5);
  c.steps = 100;
  c.max_phase_per_step = 1e9;
  try {
    run_protocol(c);
    FAIL() << "expected PropagationError";
  } catch (const PropagationError& e) {
    EXPECT_NE(e.reason().find("[index "), std::string::npos) << e.what();
  }
}

TEST(Protocols, BlockadeTargetsTheComparator) {
  const auto p = build_protocol(closed(gate_cnot(), Scheme::blockade));
  EXPECT_NEAR((p.ideal - blockade_comparator()).norm(), 0.0, 1e-15);
  const auto d = build_protocol(ScenarioConfig{.scheme = Scheme::blockade});
  EXPECT_EQ(d.channels.size(), 6u);
}

TEST(Protocols, DarkStateNeedsFiniteTau2) {
  EXPECT_THROW(build_protocol(closed(GateSpec{"x", pi, 0.0}, Scheme::dark_state)), Error);
}
