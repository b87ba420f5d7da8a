#include <gtest/gtest.h>

#include "rydgate/core.hpp"
#include "rydgate/model.hpp"

using namespace rydgate;

TEST(Core, TensorProductOfPaulis) {
  const Operator xz = tensor_product(pauli::x(), pauli::z());
  ASSERT_EQ(xz.rows(), 4);
  // sigma_x (x) sigma_z: |00> -> |10>, |01> -> -|11>
  EXPECT_EQ(xz(2, 0), cplx(1.0));
  EXPECT_EQ(xz(3, 1), cplx(-1.0));
  EXPECT_EQ(xz(0, 0), cplx(0.0));
  EXPECT_NEAR((xz * xz - Operator::Identity(4, 4)).norm(), 0.0, 1e-15);
}

TEST(Core, PaulisAreTraceOrthogonal) {
  const auto p = pauli::all();
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      EXPECT_NEAR(std::abs((p[i].adjoint() * p[j]).trace() - cplx(i == j ? 2.0 : 0.0)), 0.0, 1e-15);
}

TEST(Core, IndexRoundTrip) {
  const auto space = model_space(AtomPairModel{});
  ASSERT_EQ(space.dim(), 16u);
  for (std::size_t i = 0; i < space.dim(); ++i) EXPECT_EQ(space.index(space.levels_of(i)), i);
  EXPECT_EQ(space.index(std::vector<std::string>{"R'", "r"}), 2u * 4 + 2);
  EXPECT_EQ(space.label_of(space.index(std::vector<std::string>{"r'", "R"})), "r'R");
  EXPECT_EQ(space.computational_indices(), (std::vector<std::size_t>{0, 1, 4, 5}));
  EXPECT_THROW(space.index(std::vector<std::string>{"R", "0"}), Error);
}

TEST(Core, ExtraStatesFollowTheProductBlock) {
  HilbertSpace s({{"a", "b"}, {"x", "y"}}, {"L1", "L2"});
  EXPECT_EQ(s.dim(), 6u);
  EXPECT_EQ(s.extra_index("L2"), 5u);
  EXPECT_EQ(s.label_of(4), "L1");
  EXPECT_THROW(HilbertSpace(std::vector<std::vector<std::string>>{{"a", "a"}}), Error);
}

TEST(Core, LocalTransitionActsOnOneFactor) {
  const auto space = model_space(AtomPairModel{});
  const Operator T = local_transition(space, 0, "R'", "1");
  for (const char* t : {"0", "1", "r", "R"}) {
    const auto from = space.index(std::vector<std::string>{"1", t});
    const auto to = space.index(std::vector<std::string>{"R'", t});
    StateVector out = T * basis_state(space.dim(), from);
    EXPECT_NEAR(std::abs(out(static_cast<Eigen::Index>(to)) - cplx(1.0)), 0.0, 1e-15);
    EXPECT_NEAR(out.norm(), 1.0, 1e-15);
  }
  EXPECT_NEAR((T * T).norm(), 0.0, 1e-15);
}

TEST(Core, EmbedLocalMatchesKron) {
  HilbertSpace s(std::vector<std::vector<std::string>>{{"0", "1"}, {"0", "1"}});
  EXPECT_NEAR((embed_local(s, 1, pauli::x()) - tensor_product(pauli::identity(), pauli::x())).norm(), 0.0, 1e-15);
  EXPECT_NEAR((embed_local(s, 0, pauli::y()) - tensor_product(pauli::y(), pauli::identity())).norm(), 0.0, 1e-15);
}

TEST(Core, ProjectionInvertsEmbedding) {
  const auto space = model_space(AtomPairModel{});
  Operator block = Operator::Random(4, 4);
  const Operator full = embed_computational(block, space);
  EXPECT_NEAR((project_to_computational(full, space) - block).norm(), 0.0, 1e-15);
  EXPECT_NEAR(full.norm(), block.norm(), 1e-12);
}

TEST(Core, DensityViolations) {
  DensityMatrix ok = DensityMatrix::Zero(2, 2);
  ok(0, 0) = 0.75;
  ok(1, 1) = 0.25;
  EXPECT_TRUE(density_violation(ok).empty());

  DensityMatrix skew = ok;
  skew(0, 1) = 0.1;
  EXPECT_FALSE(density_violation(skew).empty());

  DensityMatrix trace = ok * 1.1;
  EXPECT_FALSE(density_violation(trace).empty());
  EXPECT_TRUE(density_violation(trace, 1.1).empty());

  DensityMatrix neg = DensityMatrix::Zero(2, 2);
  neg(0, 0) = 1.1;
  neg(1, 1) = -0.1;
  EXPECT_FALSE(density_violation(neg).empty());
}

TEST(Core, UnitConversions) {
  EXPECT_DOUBLE_EQ(mhz(1.0), two_pi);
  EXPECT_DOUBLE_EQ(khz(1000.0), two_pi);
  EXPECT_DOUBLE_EQ(to_mhz(mhz(298.0)), 298.0);
}
