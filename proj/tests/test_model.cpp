#include <random>

#include <gtest/gtest.h>

#include "rydgate/model.hpp"
#include "rydgate/propagation.hpp"

using namespace rydgate;

namespace {

const double W = mhz(8.0);

Eigen::Matrix3cd block(const Operator& H, const std::array<StateVector, 3>& b) {
  Eigen::Matrix3cd m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = b[static_cast<std::size_t>(i)].dot(H * b[static_cast<std::size_t>(j)]);
  return m;
}

}  // namespace

TEST(Model, InteractionFromC3) {
  const auto m = AtomPairModel::from_c3(mhz(64.4e3), 6.0);
  EXPECT_NEAR(to_mhz(m.V), 64.4e3 / 216.0, 1e-9);
  EXPECT_NO_THROW(m.validate());
  auto bad = m;
  bad.V *= 1.01;
  EXPECT_THROW(bad.validate(), Error);
  EXPECT_NEAR(receding_interaction(mhz(64.4e3), 2.0)(3.0), mhz(64.4e3) / 216.0, 1e-9);
}

TEST(Model, Step2HamiltonianIsHermitianAndMatchesTheBlock) {
  for (const auto& [Theta, phi] : {std::pair{0.0, 0.0}, std::pair{-pi / 2, 0.0}, std::pair{-pi / 4, 0.7}}) {
    const auto s = target_schedule_table2(Theta, phi, 2 * W / 3, 0.2);
    AtomPairModel m;
    m.V = mhz(40.0);
    const auto space = model_space(m);
    const auto b = pair_block_basis(space, Theta, phi);
    for (int k = 1; k < 40; ++k) {
      const double t = 0.2 + s.tau2 * k / 40.0;
      const Operator H = hamiltonian_step2(s, m, t);
      EXPECT_LE(hermiticity_residual(H), 1e-12);
      const auto B = block(H, b);
      const double Wt = std::hypot(s.zero.amplitude(t), s.one.amplitude(t));
      EXPECT_NEAR(std::abs(B(1, 0)), 0.5 * Wt, 1e-9);
      EXPECT_NEAR(std::abs(B(1, 2) - cplx(m.V)), 0.0, 1e-12);
      for (auto [i, j] : {std::pair{0, 0}, std::pair{1, 1}, std::pair{2, 2}, std::pair{0, 2}})
        EXPECT_NEAR(std::abs(B(i, j)), 0.0, 1e-12);
    }
  }
}

TEST(Model, DarkPairStateIsAnnihilated) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const double V = mhz(1.0 + 400 * u(rng));
    const cplx w = mhz(20 * u(rng)) * std::exp(I_unit * two_pi * u(rng));
    const double Theta = -pi + two_pi * u(rng), phi = two_pi * u(rng);
    const auto db = dark_bright_decomposition(Theta, phi, w, V);
    Eigen::Matrix3cd H = Eigen::Matrix3cd::Zero();
    H(1, 0) = std::conj(w) / 2.0;
    H(0, 1) = w / 2.0;
    H(1, 2) = H(2, 1) = V;
    EXPECT_LE((H * db.dark2).norm(), 1e-9 * V);
    EXPECT_NEAR(db.dark2.norm(), 1.0, 1e-12);
    EXPECT_NEAR((H * db.bright_plus - db.N * db.bright_plus).norm(), 0.0, 1e-9 * V);
    EXPECT_NEAR((H * db.bright_minus + db.N * db.bright_minus).norm(), 0.0, 1e-9 * V);
    EXPECT_NEAR(std::abs(db.bright.dot(db.dark)), 0.0, 1e-12);
  }
}

TEST(Model, DarkStatePropertyHoldsWithRecedingAtoms) {
  const auto s = target_schedule_table2(0.0, 0.0, 2 * W / 3, 0.2);
  AtomPairModel m;
  m.V_of_t = receding_interaction(mhz(64.4e3), 30.0);
  const auto space = model_space(m);
  const auto b = pair_block_basis(space, 0.0, 0.0);
  for (int k = 1; k < 20; ++k) {
    const double t = 0.2 + s.tau2 * k / 20.0;
    const Operator H = hamiltonian_step2(s, m, t);
    EXPECT_LE(hermiticity_residual(H), 1e-12);
    const auto B = block(H, b);
    const double V = m.V_at(t);
    const auto db = dark_bright_decomposition(0.0, 0.0, 2.0 * std::conj(B(1, 0)), V);
    EXPECT_LE((B * db.dark2).norm(), 1e-9 * V);
  }
}

TEST(Model, LeakageChannelsAppendStates) {
  AtomPairModel m = with_leakage_channels(AtomPairModel{}, default_leakage_channels());
  const auto space = model_space(m);
  ASSERT_EQ(space.dim(), 18u);
  TimeDependentHamiltonian H(space.dim());
  add_interaction(H, space, m);
  const Operator h = H.dense(0.0);
  const auto L1 = static_cast<Eigen::Index>(space.extra_index("L1"));
  const auto Rr = static_cast<Eigen::Index>(space.index(std::vector<std::string>{"R'", "r"}));
  EXPECT_NEAR(h(L1, L1).real(), mhz(65.0), 1e-12);
  EXPECT_NEAR(std::abs(h(L1, Rr)), mhz(120.0), 1e-12);
  EXPECT_LE(hermiticity_residual(h), 1e-15);
  EXPECT_THROW(with_leakage_channels(AtomPairModel{}, {{"X", "R", "r", 1.0, 1.0}}), Error);
  EXPECT_THROW(with_leakage_channels(m, {{"L1", "R'", "r", 1.0, 1.0}}), Error);
}

TEST(Model, BlockadeFormIsALevelShift) {
  AtomPairModel m;
  m.interaction = InteractionForm::level_shift;
  const auto space = model_space(m);
  TimeDependentHamiltonian H(space.dim());
  add_interaction(H, space, m);
  const Operator h = H.dense(0.0);
  const auto Rr = static_cast<Eigen::Index>(space.index(std::vector<std::string>{"R'", "r"}));
  EXPECT_NEAR(h(Rr, Rr).real(), m.V, 1e-12);
  EXPECT_NEAR(h.norm(), m.V, 1e-12);
}

TEST(Model, DecayRates) {
  const auto r = default_decay_rates();
  EXPECT_NEAR(r[0], khz(0.425), 1e-15);
  EXPECT_NEAR(r[11], khz(1.0), 1e-15);
  const auto b = blockade_decay_rates();
  for (int k : {3, 4, 5, 6, 10, 11}) EXPECT_EQ(b[static_cast<std::size_t>(k - 1)], 0.0);
  for (int k : {1, 2, 7, 8, 9, 12}) EXPECT_EQ(b[static_cast<std::size_t>(k - 1)], r[static_cast<std::size_t>(k - 1)]);
}

TEST(Model, CollapseOperatorsAsWritten) {
  const auto space = model_space(AtomPairModel{});
  const auto ch = collapse_set(space, default_decay_rates());
  ASSERT_EQ(ch.size(), 12u);
  // A1 = |0><R'| on the control atom
  EXPECT_NEAR((ch[0].op - local_transition(space, 0, "0", "R'")).norm(), 0.0, 1e-15);
  // A9 = |R'><R'| - |0><0| - |1><1| on the control atom
  const Operator a9 = local_transition(space, 0, "R'", "R'") - local_transition(space, 0, "0", "0") -
                      local_transition(space, 0, "1", "1");
  EXPECT_NEAR((ch[8].op - a9).norm(), 0.0, 1e-15);
  EXPECT_EQ(ch[11].name, "A12");
  auto bad = default_decay_rates();
  bad[2] = -1.0;
  EXPECT_THROW(collapse_set(space, bad), Error);
}

TEST(Model, TwoPhotonEffectiveRabi) {
  const auto lad = default_ladder();
  EXPECT_NEAR(to_mhz(lad.effective_rabi()), 245.0 * 80.0 / (2 * 1225.0), 1e-12);
  EXPECT_NEAR(to_mhz(lad.effective_rabi()), 8.0, 1e-12);
  EXPECT_FALSE(lad.weak_detuning());
  const auto h = two_photon_hamiltonians(lad);
  EXPECT_NEAR(h.full(1, 1).real(), lad.delta, 1e-12);
  EXPECT_NEAR(h.effective(1, 0).real(), 0.5 * h.omega_eff, 1e-12);
}

TEST(Model, LadderDriveReducesToTheEffectiveCoupling) {
  // Second-order elimination of P: <e|H_eff|g> = -(W_b/2)(red)/delta must equal W/2.
  AtomPairModel m;
  m.ladder = default_ladder();
  const auto space = model_space(m);
  const auto sched = control_schedule_table1(W);
  TimeDependentHamiltonian H(space.dim());
  add_atom_drive(H, space, m, Atom::control, "R'", {{"1", sched}});
  const double t = 0.5 * sched.t_end();
  const Operator h = H.dense(t);
  const auto P = static_cast<Eigen::Index>(space.index(std::vector<std::string>{"P", "0"}));
  const auto g = static_cast<Eigen::Index>(space.index(std::vector<std::string>{"1", "0"}));
  const auto e = static_cast<Eigen::Index>(space.index(std::vector<std::string>{"R'", "0"}));
  EXPECT_EQ(h(e, g), cplx(0.0));
  const cplx eff = -h(e, P) * h(P, g) / m.ladder->delta;
  EXPECT_NEAR(std::abs(eff - 0.5 * sched.complex_amplitude(t)), 0.0, 1e-9);
  // Stark compensation cancels the second-order shifts of |1> and |R'>.
  EXPECT_NEAR(h(g, g).real() - std::norm(h(P, g)) / m.ladder->delta, 0.0, 1e-9);
  EXPECT_NEAR(h(e, e).real() - std::norm(h(e, P)) / m.ladder->delta, 0.0, 1e-9);
  EXPECT_LE(hermiticity_residual(h), 1e-12);
}

TEST(Model, BlueLegModulationNeedsACommonEnvelope) {
  AtomPairModel m;
  m.ladder = default_ladder();
  m.ladder->modulation = LadderModulation::blue;
  const auto space = model_space(m);
  const auto s = target_schedule_table2(-pi / 2, 0.0, 2 * W / 3);
  TimeDependentHamiltonian H(space.dim());
  add_atom_drive(H, space, m, Atom::target, "r", target_lines(s));
  const double t = s.tau2 / 8;
  const Operator h = H.dense(t);
  const auto P = static_cast<Eigen::Index>(space.index(std::vector<std::string>{"0", "P"}));
  const auto r = static_cast<Eigen::Index>(space.index(std::vector<std::string>{"0", "r"}));
  for (const auto& [line, sched] : {std::pair{"0", &s.zero}, std::pair{"1", &s.one}}) {
    const auto g = static_cast<Eigen::Index>(space.index(std::vector<std::string>{"0", line}));
    const cplx eff = -h(r, P) * h(P, g) / m.ladder->delta;
    EXPECT_NEAR(std::abs(eff - 0.5 * sched->complex_amplitude(t)), 0.0, 1e-9);
  }
  // Lines with different envelopes cannot share one blue leg.
  const auto odd = PulseSchedule(DriveChannel::target_0_r, {{0.0, s.tau2, ConstEnvelope{W}, 0.0}});
  TimeDependentHamiltonian H2(space.dim());
  EXPECT_THROW(add_atom_drive(H2, space, m, Atom::target, "r", {{"0", odd}, {"1", s.one}}), Error);
}

TEST(Model, DopplerPhase) {
  DopplerModel d;
  d.enabled = true;
  d.temperature_uK = 10.0;
  EXPECT_NEAR(thermal_speed(10.0), std::sqrt(1.380649e-23 * 1e-5 / 2.207e-25), 1e-12);
  EXPECT_NEAR(d.k_eff, two_pi * (1 / 0.509 - 1 / 0.852), 1e-12);
  const StepMotion step{1.0, 2.0, 0.8};
  EXPECT_NEAR(doppler_phase(d, step, 2.0), d.k_eff * 0.8, 1e-12);
  EXPECT_NEAR(doppler_phase(d, step, 1.5), d.k_eff * 0.4, 1e-12);
  d.echo = true;
  EXPECT_NEAR(doppler_phase(d, step, 2.0), 0.0, 1e-12);
  EXPECT_NEAR(doppler_phase(d, step, 1.5), d.k_eff * 0.4, 1e-12);
  EXPECT_NEAR(doppler_phase(d, step, 1.75), d.k_eff * 0.2, 1e-12);
}

TEST(Model, GaussianVelocitiesAreDrawnPerStep) {
  DopplerModel d;
  d.enabled = true;
  d.temperature_uK = 10.0;
  d.mode = VelocityMode::gaussian;
  std::mt19937_64 a(5), b(5), c(6);
  const std::vector<std::pair<double, double>> w{{0, 1}, {1, 2}, {2, 3}};
  const auto pa = sample_doppler_profile(d, w, a), pb = sample_doppler_profile(d, w, b), pc = sample_doppler_profile(d, w, c);
  ASSERT_EQ(pa.steps.size(), 3u);
  EXPECT_NE(pa.steps[0].velocity, pa.steps[1].velocity);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(pa.steps[k].velocity, pb.steps[k].velocity);
  EXPECT_NE(pa.steps[0].velocity, pc.steps[0].velocity);

  // Sample mean and spread over many draws.
  std::mt19937_64 rng(11);
  std::vector<std::pair<double, double>> many(20000, {0.0, 1.0});
  const auto p = sample_doppler_profile(d, many, rng);
  double mean = 0, sq = 0;
  for (const auto& s : p.steps) mean += s.velocity;
  mean /= static_cast<double>(many.size());
  for (const auto& s : p.steps) sq += (s.velocity - mean) * (s.velocity - mean);
  const double v = d.mean_speed();
  EXPECT_NEAR(mean, v, 5e-3 * v);
  EXPECT_NEAR(std::sqrt(sq / static_cast<double>(many.size())), 0.1 * v, 5e-3 * v);
}
