#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "etform/dynamics.hpp"
#include "etform/random.hpp"

using namespace etform;

namespace {

VectorXd v2(double a, double b) {
  VectorXd v(2);
  v << a, b;
  return v;
}

MasModel baseline_model() {
  VectorXd pin(5);
  pin << 1, 1, 0, 0, 0;
  return {baseline_system(), baseline_nonlinearity(),
          Topology::FromEdges(5, {{1, 3}, {1, 5}, {2, 4}, {2, 5}, {3, 4}}, pin),
          FormationSpec::RegularPolygon(5, 2.0)};
}

MasState baseline_initial() {
  return {v2(0, 0), {v2(0.6, 3), v2(-0.2, 4), v2(-1.5, 5), v2(-1.5, 0.8), v2(-0.2, 1.5)}, 0.0};
}

MasState random_state(std::mt19937_64& rng, std::size_t n) {
  MasState s{v2(uniform(rng, -5, 5), uniform(rng, -5, 5)), {}, 0.0};
  for (std::size_t i = 0; i < n; ++i) s.followers.push_back(v2(uniform(rng, -5, 5), uniform(rng, -5, 5)));
  return s;
}

}  // namespace

TEST(FollowerDeriv, ZeroStateZeroInput) {
  EXPECT_EQ(follower_deriv(baseline_system(), baseline_nonlinearity(), v2(0, 0), v2(0, 0)), v2(0, 0));
}

TEST(FollowerDeriv, UnitStateNoInput) {
  const VectorXd d = follower_deriv(baseline_system(), baseline_nonlinearity(), v2(1, 0), v2(0, 0));
  EXPECT_NEAR(d(0), 1.0399333666587314, 1e-15);
  EXPECT_EQ(d(1), 0.0);
}

TEST(FollowerDeriv, InputOnly) {
  const VectorXd d = follower_deriv(baseline_system(), baseline_nonlinearity(), v2(0, 0), v2(1, 1));
  EXPECT_NEAR(d(0), 0.9, 1e-15);
  EXPECT_NEAR(d(1), 0.9, 1e-15);
}

TEST(FollowerDeriv, DimensionMismatchThrows) {
  EXPECT_THROW(follower_deriv(baseline_system(), baseline_nonlinearity(), VectorXd::Zero(3), v2(0, 0)),
               std::invalid_argument);
  EXPECT_THROW(follower_deriv(baseline_system(), baseline_nonlinearity(), v2(0, 0), VectorXd::Zero(1)),
               std::invalid_argument);
}

TEST(LeaderDeriv, AtOrigin) {
  EXPECT_EQ(leader_deriv(baseline_nonlinearity(), v2(0, 0)), v2(0.7, 0.35));
}

TEST(LeaderDeriv, FirstComponentConstant) {
  std::mt19937_64 rng(1);
  for (int k = 0; k < 100; ++k)
    EXPECT_EQ(leader_deriv(baseline_nonlinearity(), v2(uniform(rng, -50, 50), uniform(rng, -50, 50)))(0),
              0.7);
}

TEST(LeaderDeriv, MixedState) {
  const VectorXd d = leader_deriv(baseline_nonlinearity(), v2(1, 5));
  EXPECT_EQ(d(0), 0.7);
  EXPECT_NEAR(d(1), 0.20907249038321454, 1e-15);
}

TEST(FormationError, PerfectFormationIsZero) {
  const MasModel m = baseline_model();
  std::mt19937_64 rng(5);
  for (int k = 0; k < 50; ++k) {
    MasState s{v2(uniform(rng, -5, 5), uniform(rng, -5, 5)), {}, 0.0};
    for (std::size_t i = 0; i < 5; ++i) s.followers.push_back(s.leader + m.formation[i]);
    for (const auto& e : formation_errors(m.topology, m.formation, s))
      EXPECT_LT(e.norm(), 1e-13);
  }
}

TEST(FormationError, TwoAgentChain) {
  VectorXd pin(2);
  pin << 1, 0;
  const Topology t = Topology::FromEdges(2, {{1, 2}}, pin);
  const FormationSpec f{{v2(1, 0), v2(-1, 0)}};
  const MasState s{v2(0, 0), {v2(1, 0), v2(0, 0)}, 0.0};
  EXPECT_EQ(formation_error(t, f, s, 0), v2(-1, 0));
}

TEST(FormationError, BaselineInitialState) {
  const MasModel m = baseline_model();
  const auto e = formation_errors(m.topology, m.formation, baseline_initial());
  const double expected[5][2] = {{2.0278640450004199, -4.3819096023558677},
                                 {8.5721359549995775, 4.2711754536548519},
                                 {2.37213595499958, 8.5511410091698927},
                                 {-5.7721359549995785, -3.5957739348193849},
                                 {-5.8000000000000007, -0.92231646282474555}};
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_NEAR(e[i](0), expected[i][0], 1e-13) << "agent " << i + 1;
    EXPECT_NEAR(e[i](1), expected[i][1], 1e-13) << "agent " << i + 1;
  }
}

TEST(FormationError, AffineInStackedState) {
  const MasModel m = baseline_model();
  std::mt19937_64 rng(9);
  MasState zero{v2(0, 0), std::vector<VectorXd>(5, v2(0, 0)), 0.0};
  for (int k = 0; k < 100; ++k) {
    const MasState a = random_state(rng, 5), b = random_state(rng, 5);
    MasState sum{a.leader + b.leader, {}, 0.0};
    for (std::size_t i = 0; i < 5; ++i) sum.followers.push_back(a.followers[i] + b.followers[i]);
    for (std::size_t i = 0; i < 5; ++i) {
      const VectorXd e0 = formation_error(m.topology, m.formation, zero, i);
      const VectorXd lhs = formation_error(m.topology, m.formation, sum, i) - e0;
      const VectorXd rhs = (formation_error(m.topology, m.formation, a, i) - e0) +
                           (formation_error(m.topology, m.formation, b, i) - e0);
      EXPECT_LT((lhs - rhs).norm(), 1e-12);
    }
  }
}

TEST(ErrorDeriv, ZeroEverything) {
  MasModel m = baseline_model();
  m.nonlinearity = zero_nonlinearity(2);
  m.formation = FormationSpec::Zero(5, 2);
  const MasState s{v2(0, 0), std::vector<VectorXd>(5, v2(0, 0)), 0.0};
  const std::vector<VectorXd> u(5, v2(0, 0));
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(error_deriv(m, s, u, i), v2(0, 0));
}

TEST(ErrorDeriv, SinglePinnedAgentByHand) {
  // e = x - x0, so e' = A x + B u - f0(x0) = A e + B u + A x0 - f0(x0).
  MasModel m{baseline_system(), {zero_nonlinearity(2).follower, baseline_leader_drift, 0.0},
             Topology(MatrixXd::Zero(1, 1), VectorXd::Ones(1)), FormationSpec::Zero(1, 2)};
  const MasState s{v2(0.3, -1.2), {v2(2.0, 0.5)}, 0.0};
  const VectorXd u = v2(-0.4, 0.7);
  const VectorXd e = s.followers[0] - s.leader;
  const VectorXd expected = e + 0.9 * u + s.leader - baseline_leader_drift(s.leader);
  EXPECT_LT((error_deriv(m, s, {u}, 0) - expected).norm(), 1e-14);
}

TEST(ErrorDeriv, MatchesFiniteDifferenceOfError) {
  const MasModel m = baseline_model();
  std::mt19937_64 rng(17);
  const double h = 1e-6;
  for (int k = 0; k < 200; ++k) {
    const MasState s = random_state(rng, 5);
    std::vector<VectorXd> u;
    for (int i = 0; i < 5; ++i) u.push_back(v2(uniform(rng, -3, 3), uniform(rng, -3, 3)));
    MasState next = s;
    next.leader += h * leader_deriv(m.nonlinearity, s.leader);
    for (std::size_t i = 0; i < 5; ++i)
      next.followers[i] += h * follower_deriv(m.system, m.nonlinearity, s.followers[i], u[i]);
    for (std::size_t i = 0; i < 5; ++i) {
      const VectorXd fd = (formation_error(m.topology, m.formation, next, i) -
                           formation_error(m.topology, m.formation, s, i)) / h;
      EXPECT_LT((fd - error_deriv(m, s, u, i)).norm(), 1e-4) << "agent " << i + 1;
    }
  }
}

TEST(ErrorDeriv, RequiresOneControlPerFollower) {
  const MasModel m = baseline_model();
  EXPECT_THROW(error_deriv(m, baseline_initial(), {v2(0, 0)}, 0), std::invalid_argument);
}

TEST(Lipschitz, BaselineDriftWithinDeclaredConstant) {
  const Nonlinearity nl = baseline_nonlinearity();
  EXPECT_LE(lipschitz_audit(nl.follower, 2, 10000, 123), nl.lipschitz);
  // Near the origin the bound is tight.
  EXPECT_GT(lipschitz_audit(nl.follower, 2, 10000, 123, 1e-3), 0.0399);
}
