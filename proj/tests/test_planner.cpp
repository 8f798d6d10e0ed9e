#include "dtflat/planner.hpp"

#include <gtest/gtest.h>

#include <cstdint>
#include <vector>

#include "dtflat/errors.hpp"
#include "dtflat/expr.hpp"
#include "dtflat/system.hpp"
#include "fixtures.hpp"

namespace dtflat {
namespace {

using fixtures::integrator_flat_pair;
using fixtures::integrator_system;
using fixtures::product_flat_pair;
using fixtures::product_reference_trajectory;
using fixtures::product_system;

Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

TEST(Simulate, ProductRolloutMatchesTheReference) {
  DiscreteTimeSystem sys = product_system();
  Signal u = Signal::closed_form({parse("k"), parse("-k")});
  Trajectory rollout = simulate(sys, Eigen::VectorXd::Zero(3), 0, u, 10);
  Trajectory reference = product_reference_trajectory(sys);
  for (std::int64_t k = 0; k <= 10; ++k)
    for (int i = 1; i <= 3; ++i)
      EXPECT_EQ(rollout.x().component_at(i, k), reference.x().component_at(i, k))
          << "component " << i << " at k=" << k;
  EXPECT_EQ(rollout.u().k_last(), 9);
}

TEST(Simulate, ZeroInputFromEquilibriumStaysPut) {
  DiscreteTimeSystem sys = integrator_system();
  Signal u = Signal::closed_form({parse("0")});
  Trajectory rollout = simulate(sys, Eigen::VectorXd::Zero(1), -3, u, 5);
  for (std::int64_t k = -3; k <= 2; ++k) EXPECT_EQ(rollout.x().component_at(1, k), 0.0);
}

TEST(Simulate, StepCountDefaultsToTabulatedCoverage) {
  DiscreteTimeSystem sys = integrator_system();
  Signal u = Signal::tabulated(2, {vec({1}), vec({1}), vec({1}), vec({1})});
  Trajectory rollout = simulate(sys, vec({5}), 2, u);
  EXPECT_EQ(rollout.x().k_last(), 6);
  EXPECT_EQ(rollout.x().component_at(1, 6), 9.0);
}

TEST(Simulate, ClosedFormInputsNeedAnExplicitStepCount) {
  DiscreteTimeSystem sys = integrator_system();
  Signal u = Signal::closed_form({parse("1")});
  EXPECT_THROW((void)simulate(sys, vec({0}), 0, u), Error);
}

TEST(Realize, ReproducesTheReferenceTrajectory) {
  DiscreteTimeSystem sys = product_system();
  FlatPair pair = product_flat_pair(sys);
  std::vector<Eigen::VectorXd> samples;
  for (std::int64_t k = -2; k <= 12; ++k) {
    const double kk = static_cast<double>(k);
    samples.push_back(vec({(kk - 1) * (kk - 2) / 2, kk * (kk - 1) * (kk - 2) / 6}));
  }
  Signal y = Signal::tabulated(-2, std::move(samples));
  Trajectory realized = realize(sys, pair, y, {-2, 9});
  Trajectory reference = product_reference_trajectory(sys);
  for (std::int64_t k = -2; k <= 9; ++k) {
    for (int i = 1; i <= 3; ++i)
      EXPECT_EQ(realized.x().component_at(i, k), reference.x().component_at(i, k))
          << "x" << i << " at k=" << k;
    for (int j = 1; j <= 2; ++j)
      EXPECT_EQ(realized.u().component_at(j, k), reference.u().component_at(j, k))
          << "u" << j << " at k=" << k;
  }
}

TEST(Realize, ConstantFlatOutputIsSingular) {
  DiscreteTimeSystem sys = product_system();
  FlatPair pair = product_flat_pair(sys);
  std::vector<Eigen::VectorXd> samples(11, vec({1, 1}));
  Signal y = Signal::tabulated(0, std::move(samples));
  EXPECT_THROW((void)realize(sys, pair, y, {0, 5}), SingularParameterizationError);
}

TEST(Realize, IntegratorAtRestStaysAtRest) {
  DiscreteTimeSystem sys = integrator_system();
  FlatPair pair = integrator_flat_pair(sys);
  std::vector<Eigen::VectorXd> samples(6, vec({0}));
  Signal y = Signal::tabulated(0, std::move(samples));
  Trajectory realized = realize(sys, pair, y, {0, 4});
  for (std::int64_t k = 0; k <= 4; ++k) EXPECT_EQ(realized.x().component_at(1, k), 0.0);
  for (std::int64_t k = 0; k <= 3; ++k) EXPECT_EQ(realized.u().component_at(1, k), 0.0);
  EXPECT_EQ(realized.u().k_last(), 4);
}

TEST(Realize, InsufficientCoverageThrows) {
  DiscreteTimeSystem sys = product_system();
  FlatPair pair = product_flat_pair(sys);
  std::vector<Eigen::VectorXd> samples(4, vec({1, 2}));
  Signal y = Signal::tabulated(0, std::move(samples));
  EXPECT_THROW((void)realize(sys, pair, y, {0, 3}), Error);
}

TEST(Realize, CrosscheckRejectsInconsistentPairs) {
  DiscreteTimeSystem sys = integrator_system();
  // Wrong input law: u = y_[1] instead of y_[1] - y.
  FlatPair pair{FlatOutputCandidate(sys, {parse("x1")}),
                Parameterization(1, 1, {1}, {parse("y1")}, {parse("y1_[1]")})};
  std::vector<Eigen::VectorXd> samples;
  for (int k = 0; k <= 6; ++k) samples.push_back(vec({static_cast<double>(k * k)}));
  Signal y = Signal::tabulated(0, std::move(samples));
  EXPECT_THROW((void)realize(sys, pair, y, {0, 5}), Error);
}

TEST(Plan, IntegratorSingleStep) {
  DiscreteTimeSystem sys = integrator_system();
  PlanProblem problem{integrator_flat_pair(sys), vec({0}), 0, vec({1}), 1};
  Plan result = plan(sys, problem);
  EXPECT_LE(result.boundary_residual, 1e-9);
  EXPECT_NEAR(result.y.component_at(1, 0), 0.0, 1e-9);
  EXPECT_NEAR(result.y.component_at(1, 1), 1.0, 1e-9);
  EXPECT_NEAR(result.realized.u().component_at(1, 0), 1.0, 1e-9);
  EXPECT_EQ(result.realized.x().k_first(), 0);
  EXPECT_EQ(result.realized.x().k_last(), 1);
}

TEST(Plan, ProductReachesTheReferenceTarget) {
  DiscreteTimeSystem sys = product_system();
  PlanProblem problem{product_flat_pair(sys), vec({0, 0, 0}), 0, vec({3, -3, -5}), 5};
  Plan result = plan(sys, problem, 1);
  EXPECT_LE(result.boundary_residual, 1e-9);
  EXPECT_EQ(result.y.k_first(), 0);
  EXPECT_EQ(result.y.k_last(), 7);

  Trajectory rollout = simulate(sys, problem.x_initial, 0, result.realized.u());
  for (int i = 1; i <= 3; ++i)
    EXPECT_NEAR(rollout.x().component_at(i, 5), problem.x_final(i - 1), 1e-6) << "x" << i;
}

TEST(Plan, WindowShorterThanTheHorizonThrows) {
  DiscreteTimeSystem sys = product_system();
  PlanProblem problem{product_flat_pair(sys), vec({0, 0, 0}), 0, vec({1, 1, 1}), 2};
  EXPECT_THROW((void)plan(sys, problem), Error);
  problem.k_final = 0;
  EXPECT_THROW((void)plan(sys, problem), Error);
}

TEST(Plan, SeedDeterminism) {
  DiscreteTimeSystem sys = product_system();
  PlanProblem problem{product_flat_pair(sys), vec({0, 0, 0}), 0, vec({2, 1, -1}), 3};
  Plan first = plan(sys, problem, 7);
  Plan second = plan(sys, problem, 7);
  ASSERT_EQ(first.y.k_last(), second.y.k_last());
  for (std::int64_t k = first.y.k_first(); k <= first.y.k_last(); ++k)
    for (int j = 1; j <= 2; ++j)
      EXPECT_EQ(first.y.component_at(j, k), second.y.component_at(j, k));
}

// splitmix64, matching the samplers.
std::uint64_t target_next(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double target_uniform(std::uint64_t& state, double lo, double hi) {
  const double u01 = static_cast<double>(target_next(state) >> 11) * 0x1.0p-53;
  return lo + u01 * (hi - lo);
}

TEST(Plan, RandomFeasibleTargetsLandInMinimumWindows) {
  DiscreteTimeSystem sys = product_system();
  FlatPair pair = product_flat_pair(sys);
  std::uint64_t state = 0x7a96e75u;
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd x0(3);
    for (int i = 0; i < 3; ++i) x0(i) = target_uniform(state, -1.0, 1.0);
    // A target reached by some input sequence is feasible by construction.
    std::vector<Eigen::VectorXd> inputs;
    for (int t = 0; t < 3; ++t) {
      Eigen::VectorXd u(2);
      u << target_uniform(state, -1.0, 1.0), target_uniform(state, -1.0, 1.0);
      inputs.push_back(u);
    }
    Trajectory shooting = simulate(sys, x0, 0, Signal::tabulated(0, inputs));
    Eigen::VectorXd xf = shooting.x().at(3);

    PlanProblem problem{pair, x0, 0, xf, 3};
    Plan result = plan(sys, problem, 0x5eed + trial);
    Trajectory rollout = simulate(sys, x0, 0, result.realized.u());
    for (int i = 1; i <= 3; ++i)
      EXPECT_NEAR(rollout.x().component_at(i, 3), xf(i - 1), 1e-6)
          << "trial " << trial << " x" << i;
  }
}

}  // namespace
}  // namespace dtflat
