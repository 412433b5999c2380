#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "etform/dos.hpp"
#include "etform/random.hpp"

using namespace etform;

namespace {

DosSchedule baseline_schedule() { return DosSchedule::FromWindows({{0.1, 2}, {4, 6}, {8, 9}}); }

DosSchedule random_schedule(std::mt19937_64& rng) {
  std::vector<AttackInterval> ivs;
  double t = uniform(rng, 0.0, 1.0);
  const int n = static_cast<int>(rng() % 6);
  for (int k = 0; k < n; ++k) {
    const double len = uniform(rng, 0.01, 2.0);
    ivs.push_back({t, len});
    t += len + uniform(rng, 0.01, 2.0);
  }
  return DosSchedule(ivs);
}

}  // namespace

TEST(IsActive, BaselineSchedule) {
  const auto s = baseline_schedule();
  EXPECT_TRUE(is_active(s, 1.0));
  EXPECT_FALSE(is_active(s, 3.0));
}

TEST(IsActive, HalfOpenBoundaries) {
  const auto s = baseline_schedule();
  EXPECT_TRUE(is_active(s, 4.0));
  EXPECT_FALSE(is_active(s, 6.0));
  EXPECT_FALSE(is_active(s, 0.0));
}

TEST(TotalAttackTime, BaselineSchedule) {
  const auto s = baseline_schedule();
  EXPECT_NEAR(total_attack_time(s, 10.0), 4.9, 1e-12);
  EXPECT_EQ(total_attack_time(s, 0.0), 0.0);
  EXPECT_NEAR(total_attack_time(s, 5.0), 2.9, 1e-12);
}

TEST(AttackFrequency, BaselineSchedule) {
  const auto s = baseline_schedule();
  EXPECT_NEAR(attack_frequency(s, 10.0), 0.3, 1e-15);
  EXPECT_NEAR(attack_frequency(s, 3.0), 1.0 / 3.0, 1e-15);
  EXPECT_EQ(attack_frequency(DosSchedule(), 10.0), 0.0);
}

TEST(AttackFrequency, NeedsPositiveHorizon) {
  EXPECT_THROW(attack_frequency(baseline_schedule(), 0.0), std::domain_error);
  EXPECT_THROW(length_rate(baseline_schedule(), -1.0), std::domain_error);
}

TEST(LengthRate, Examples) {
  EXPECT_NEAR(length_rate(baseline_schedule(), 10.0), 0.49, 1e-15);
  EXPECT_EQ(length_rate(DosSchedule(), 10.0), 0.0);
  EXPECT_EQ(length_rate(DosSchedule::FromWindows({{0, 7}}), 7.0), 1.0);
}

TEST(Schedule, RejectsBadIntervals) {
  EXPECT_THROW(DosSchedule::FromWindows({{1, 1}}), std::invalid_argument);
  EXPECT_THROW(DosSchedule::FromWindows({{-1, 1}}), std::invalid_argument);
  EXPECT_THROW(DosSchedule::FromWindows({{0, 2}, {1, 3}}), std::invalid_argument);
  EXPECT_THROW(DosSchedule::FromWindows({{4, 5}, {0, 1}}), std::invalid_argument);
}

TEST(SafeBounds, BaselineConstants) {
  const SafeBounds b = safe_bounds(baseline_stability_constants());
  EXPECT_NEAR(b.max_frequency, 0.031939834587561715, 1e-15);
  EXPECT_NEAR(b.max_length_rate, 0.08, 1e-15);
}

TEST(SafeBounds, VanishingKStar) {
  StabilityConstants c = baseline_stability_constants();
  c.k_star = 1e-12;
  const SafeBounds b = safe_bounds(c);
  EXPECT_LT(b.max_frequency, 1e-11);
  EXPECT_NEAR(b.max_length_rate, c.c1 / (c.c1 + c.c2), 1e-11);
}

TEST(SafeBounds, NoGrowthHalfDecay) {
  StabilityConstants c = baseline_stability_constants();
  c.c2 = 0.0;
  c.k_star = c.c1 / 2.0;
  EXPECT_DOUBLE_EQ(safe_bounds(c).max_length_rate, 0.5);
}

TEST(SafeBounds, UndefinedWhenZetaC4AtMostOne) {
  StabilityConstants c = baseline_stability_constants();
  c.zeta = 1.0;
  c.c4 = 1.0;
  EXPECT_THROW(safe_bounds(c), std::domain_error);
}

TEST(SafeBounds, MonotoneInKStar) {
  StabilityConstants c = baseline_stability_constants();
  double prev_f = 0.0, prev_t = 1.0;
  for (double k = 0.01; k < 0.4; k += 0.01) {
    c.k_star = k;
    const SafeBounds b = safe_bounds(c);
    EXPECT_GT(b.max_frequency, prev_f);
    EXPECT_LT(b.max_length_rate, prev_t);
    prev_f = b.max_frequency;
    prev_t = b.max_length_rate;
  }
}

TEST(Admissible, BaselineScheduleViolatesBoth) {
  const auto r = admissible(baseline_schedule(), 10.0, baseline_stability_constants());
  EXPECT_FALSE(r.frequency_ok);
  EXPECT_FALSE(r.length_ok);
  EXPECT_FALSE(r.ok());
}

TEST(Admissible, EmptyScheduleIsFine) {
  EXPECT_TRUE(admissible(DosSchedule(), 10.0, baseline_stability_constants()).ok());
}

TEST(Admissible, ShortSingleAttack) {
  const auto r = admissible(DosSchedule::FromWindows({{0, 0.05}}), 10.0, baseline_stability_constants());
  EXPECT_NEAR(r.frequency, 0.1, 1e-15);
  EXPECT_FALSE(r.frequency_ok);
  EXPECT_NEAR(r.length_rate, 0.005, 1e-15);
  EXPECT_TRUE(r.length_ok);
}

TEST(StabilityConstants, DerivedFields) {
  const StabilityConstants c = baseline_stability_constants();
  const Eigen::MatrixXd p = 1.2 * Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd v(2);
  v << 1.0, 1.0;
  EXPECT_DOUBLE_EQ(StabilityConstants::c3_from(p, v), 4.8);
  EXPECT_NEAR(c.c5_for_length_rate(0.0), 0.32, 1e-15);
  EXPECT_NEAR(c.c5_for_length_rate(0.08), 0.0, 1e-15);
}

TEST(GridSchedule, SnapsBoundariesToNearestStep) {
  const GridSchedule g(baseline_schedule(), 1e-3);
  EXPECT_FALSE(g.active(99));
  EXPECT_TRUE(g.active(100));
  EXPECT_TRUE(g.active(1999));
  EXPECT_FALSE(g.active(2000));
  EXPECT_TRUE(g.active(8999));
  EXPECT_FALSE(g.active(9000));
}

TEST(ScheduleProperty, AttackTimeMonotoneBoundedAndPartitionExact) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const DosSchedule s = random_schedule(rng);
    double prev = 0.0;
    for (double t = 0.05; t < 15.0; t += 0.37) {
      const double omega = total_attack_time(s, t);
      EXPECT_GE(omega, prev);
      EXPECT_LE(omega, t + 1e-12);
      const double rate = length_rate(s, t);
      EXPECT_GE(rate, 0.0);
      EXPECT_LE(rate, 1.0 + 1e-12);
      prev = omega;
    }
    // Midpoint quadrature of the indicator recovers |Omega(t)|; the
    // complement is the attack-free measure.
    const double horizon = 12.0;
    const int n = 120000;
    const double h = horizon / n;
    double attacked = 0.0, free = 0.0;
    for (int k = 0; k < n; ++k) (is_active(s, (k + 0.5) * h) ? attacked : free) += h;
    EXPECT_NEAR(attacked + free, horizon, 1e-9);
    EXPECT_NEAR(attacked, total_attack_time(s, horizon), 2.0 * h * (s.intervals().size() + 1));
  }
}
