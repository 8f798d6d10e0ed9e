#include "dtflat/linearize.hpp"

#include <gtest/gtest.h>

#include <cstdint>
#include <string>
#include <vector>

#include "dtflat/errors.hpp"
#include "dtflat/expr.hpp"
#include "dtflat/flatness.hpp"
#include "dtflat/system.hpp"
#include "dtflat/verify.hpp"
#include "fixtures.hpp"

namespace dtflat {
namespace {

using fixtures::drift_free_nonreachable_system;
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

Trajectory integrator_trajectory(const DiscreteTimeSystem& sys) {
  Signal x = Signal::closed_form({parse("1/2*k*(k-1)")});
  Signal u = Signal::closed_form({parse("k")});
  return {sys, std::move(x), std::move(u)};
}

TEST(LieLinearize, SumsPartialDerivativesTimesVariations) {
  Expr h = parse("x3+u1*u2");
  VerificationReport r =
      numeric_equal(lie_linearize(h), parse("dx3+u2*du1+u1*du2"), SampleDomain{});
  EXPECT_TRUE(r.pass);
  EXPECT_LT(r.max_rel, 1e-12);
}

TEST(LieLinearize, ConstantGivesZero) {
  EXPECT_TRUE(lie_linearize(parse("7")).is_integer_constant(0));
  EXPECT_TRUE(lie_linearize(parse("k*(k-1)")).is_integer_constant(0));
}

TEST(LieLinearize, TrigChainRule) {
  VerificationReport r = numeric_equal(lie_linearize(parse("sin(x1-x3)")),
                                       parse("cos(x1-x3)*(dx1-dx3)"), SampleDomain{});
  EXPECT_TRUE(r.pass);
}

TEST(LieLinearize, RejectsFlatOutputAndVariationArguments) {
  EXPECT_THROW((void)lie_linearize(parse("y1_[1]")), Error);
  EXPECT_THROW((void)lie_linearize(parse("x1+dx1")), Error);
}

TEST(DeltaLinShift, HistoryVariationRelabels) {
  DiscreteTimeSystem sys = product_system();
  EXPECT_TRUE(structurally_equal(delta_lin_shift(sys, parse("dz1_[-2]")), parse("dz1_[-1]")));
  EXPECT_TRUE(structurally_equal(delta_lin_shift(sys, parse("du2_[3]")), parse("du2_[4]")));
}

TEST(DeltaLinShift, NewestHistoryTakesTheExtensionJacobian) {
  DiscreteTimeSystem sys = product_system();
  EXPECT_TRUE(structurally_equal(delta_lin_shift(sys, parse("dz1_[-1]")), parse("dx1")));
  EXPECT_TRUE(structurally_equal(delta_lin_shift(sys, parse("dz2_[-1]")), parse("dx2")));
}

TEST(DeltaLinShift, StateVariationTakesTheTransitionJacobian) {
  DiscreteTimeSystem sys = product_system();
  VerificationReport r1 =
      numeric_equal(delta_lin_shift(sys, parse("dx1")), parse("dx1+du1"), SampleDomain{});
  EXPECT_TRUE(r1.pass);
  VerificationReport r3 = numeric_equal(delta_lin_shift(sys, parse("x3+dx3")),
                                        parse("x3+u1*u2+dx3+u2*du1+u1*du2"), SampleDomain{});
  EXPECT_TRUE(r3.pass);
}

TEST(DeltaLinShift, TimeAdvancesWithTheChart) {
  DiscreteTimeSystem sys = product_system();
  VerificationReport r = numeric_equal(delta_lin_shift(sys, parse("k*dx1")),
                                       parse("(k+1)*(dx1+du1)"), SampleDomain{});
  EXPECT_TRUE(r.pass);
}

TEST(DeltaLinShift, ZeroTimesIsIdentity) {
  DiscreteTimeSystem sys = product_system();
  Expr h = parse("k*dx1+du2_[1]");
  EXPECT_TRUE(structurally_equal(delta_lin_shift(sys, h, 0), h));
}

TEST(DeltaLinShift, RejectsBackwardShiftsAndForeignGroups) {
  DiscreteTimeSystem sys = product_system();
  EXPECT_THROW((void)delta_lin_shift(sys, parse("dx1"), -1), Error);
  EXPECT_THROW((void)delta_lin_shift(sys, parse("dy1")), Error);
  EXPECT_THROW((void)delta_lin_shift(sys, parse("dx1*dx2")), Error);
}

TEST(Commutation, HoldsOnTheProductFlatOutput) {
  DiscreteTimeSystem sys = product_system();
  Expr phi2 = parse("x3-x2*(x1-z1_[-1])");
  VerificationReport r = check_commutation(sys, phi2, SampleDomain{});
  EXPECT_TRUE(r.pass);
  EXPECT_LT(r.max_rel, 1e-9);
  EXPECT_EQ(r.samples_evaluated, 100);
}

TEST(Commutation, ExactForPureInputRelabeling) {
  DiscreteTimeSystem sys = product_system();
  VerificationReport r = check_commutation(sys, parse("u1_[2]"), SampleDomain{});
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.max_abs, 0.0);
}

TEST(Commutation, HoldsOnTheTrigSystem) {
  DiscreteTimeSystem sys = drift_free_nonreachable_system();
  VerificationReport r =
      check_commutation(sys, parse("x2*sin(x1-x3)"), SampleDomain{}.with_samples(60), 3);
  EXPECT_TRUE(r.pass);
  EXPECT_LT(r.max_rel, 1e-9);
}

// splitmix64, the same generator the samplers use.
std::uint64_t fuzz_next(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

Expr fuzz_plain_expr(std::uint64_t& state, int depth) {
  if (depth == 0) {
    switch (fuzz_next(state) % 8) {
      case 0: return Expr::var(VarRef::state(1));
      case 1: return Expr::var(VarRef::state(2));
      case 2: return Expr::var(VarRef::state(3));
      case 3: return Expr::var(VarRef::input(1));
      case 4: return Expr::var(VarRef::input(2, 1));
      case 5: return Expr::var(VarRef::zeta(1, -1));
      case 6: return Expr::var(VarRef::zeta(2, -2));
      default: return Expr::time_symbol();
    }
  }
  switch (fuzz_next(state) % 5) {
    case 0: return fuzz_plain_expr(state, depth - 1) + fuzz_plain_expr(state, depth - 1);
    case 1: return fuzz_plain_expr(state, depth - 1) - fuzz_plain_expr(state, depth - 1);
    case 2: return fuzz_plain_expr(state, depth - 1) * fuzz_plain_expr(state, depth - 1);
    case 3: return Expr::sin(fuzz_plain_expr(state, depth - 1));
    default: return Expr::cos(fuzz_plain_expr(state, depth - 1));
  }
}

TEST(Commutation, HoldsOnRandomExpressions) {
  DiscreteTimeSystem product = product_system();
  DiscreteTimeSystem trig = drift_free_nonreachable_system();
  std::uint64_t state = 0xc0717a7e;
  for (int trial = 0; trial < 6; ++trial) {
    Expr h = fuzz_plain_expr(state, 3);
    const DiscreteTimeSystem& sys = trial < 4 ? product : trig;
    SampleDomain domain = SampleDomain{}.with_samples(30).with_seed(0x200 + trial);
    VerificationReport r = check_commutation(sys, h, domain, 2);
    EXPECT_TRUE(r.pass) << "trial " << trial << ": " << h << "\n" << r.summary();
  }
}

TEST(Commutation, RejectsNonpositiveDepth) {
  DiscreteTimeSystem sys = product_system();
  EXPECT_THROW((void)check_commutation(sys, parse("x1"), SampleDomain{}, 0), Error);
}

TEST(LTVSystemType, ClosedFormAccessorsAndCoverage) {
  LTVSystem ltv = LTVSystem::closed_form(1, 1, {{parse("1")}}, {{parse("k")}},
                                         {{parse("0"), parse("1")}}, "unit");
  EXPECT_TRUE(ltv.is_closed_form());
  EXPECT_EQ(ltv.source(), "unit");
  EXPECT_TRUE(structurally_equal(ltv.B(1, 1), parse("k")));
  EXPECT_EQ(ltv.B_at(7)(0, 0), 7.0);
  EXPECT_TRUE(ltv.covers(std::int64_t{1} << 40));
}

TEST(LTVSystemType, TabulatedCoverageAndAccessorGuards) {
  std::vector<Eigen::MatrixXd> A = {Eigen::MatrixXd::Constant(1, 1, 1.0),
                                    Eigen::MatrixXd::Constant(1, 1, 2.0),
                                    Eigen::MatrixXd::Constant(1, 1, 3.0)};
  std::vector<Eigen::MatrixXd> B(3, Eigen::MatrixXd::Constant(1, 1, 1.0));
  std::vector<Eigen::MatrixXd> dz(3, Eigen::MatrixXd::Zero(1, 2));
  LTVSystem ltv = LTVSystem::tabulated(1, 1, 2, std::move(A), std::move(B), std::move(dz));
  EXPECT_FALSE(ltv.is_closed_form());
  EXPECT_EQ(ltv.k_first(), 2);
  EXPECT_EQ(ltv.k_last(), 4);
  EXPECT_FALSE(ltv.covers(5));
  EXPECT_EQ(ltv.A_at(3)(0, 0), 2.0);
  EXPECT_THROW((void)ltv.A(1, 1), Error);
  EXPECT_THROW((void)ltv.A_at(5), Error);
}

TEST(LTVSystemType, RejectsChartVariablesAndBadShapes) {
  EXPECT_THROW((void)LTVSystem::closed_form(1, 1, {{parse("x1")}}, {{parse("1")}},
                                            {{parse("0"), parse("1")}}),
               Error);
  EXPECT_THROW(
      (void)LTVSystem::closed_form(1, 1, {{parse("1")}}, {{parse("1")}}, {{parse("0")}}),
      Error);
  EXPECT_THROW((void)LTVSystem::tabulated(1, 1, 0, {}, {}, {}), Error);
}

TEST(LinearizeAlong, ProductReferenceGivesIdentityAndPolynomialGains) {
  DiscreteTimeSystem sys = product_system();
  LTVSystem ltv = linearize_along(sys, product_reference_trajectory(sys));
  ASSERT_TRUE(ltv.is_closed_form());
  for (int i = 1; i <= 3; ++i)
    for (int s = 1; s <= 3; ++s)
      EXPECT_TRUE(structurally_equal(ltv.A(i, s), Expr::integer(i == s ? 1 : 0)))
          << "A(" << i << "," << s << ") = " << ltv.A(i, s);
  EXPECT_TRUE(structurally_equal(ltv.B(1, 1), Expr::integer(1)));
  EXPECT_TRUE(structurally_equal(ltv.B(1, 2), Expr::integer(0)));
  EXPECT_TRUE(structurally_equal(ltv.B(2, 2), Expr::integer(1)));
  EXPECT_TRUE(structurally_equal(ltv.B(3, 1), parse("-k")));
  EXPECT_TRUE(structurally_equal(ltv.B(3, 2), parse("k")));
  EXPECT_TRUE(structurally_equal(ltv.dzeta_coeff(1, 1), Expr::integer(1)));
  EXPECT_TRUE(structurally_equal(ltv.dzeta_coeff(2, 2), Expr::integer(1)));
  EXPECT_TRUE(structurally_equal(ltv.dzeta_coeff(1, 4), Expr::integer(0)));

  EXPECT_TRUE(ltv.A_at(7).isIdentity(0.0));
  Eigen::MatrixXd B7(3, 2);
  B7 << 1, 0, 0, 1, -7, 7;
  EXPECT_EQ((ltv.B_at(7) - B7).norm(), 0.0);
}

TEST(LinearizeAlong, TrigJacobiansMatchHandDerivatives) {
  DiscreteTimeSystem sys = drift_free_nonreachable_system();
  Signal x = Signal::closed_form({parse("k"), parse("2"), parse("1")});
  Signal u = Signal::closed_form({parse("2"), parse("3")});
  LTVSystem ltv = linearize_along(sys, Trajectory(sys, std::move(x), std::move(u)));
  const double c = std::cos(4.0 - 1.0);
  const double s = std::sin(4.0 - 1.0);
  Eigen::MatrixXd A4 = ltv.A_at(4);
  EXPECT_DOUBLE_EQ(A4(0, 0), -c);
  EXPECT_DOUBLE_EQ(A4(0, 2), c);
  EXPECT_DOUBLE_EQ(A4(1, 0), -c * 2.0);
  EXPECT_DOUBLE_EQ(A4(1, 2), c * 2.0);
  EXPECT_EQ(A4(2, 0), 0.0);
  EXPECT_EQ(A4(2, 2), 0.0);
  Eigen::MatrixXd B4 = ltv.B_at(4);
  EXPECT_EQ(B4(0, 0), 0.0);
  EXPECT_EQ(B4(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(B4(1, 0), 1.0 - s);
  EXPECT_EQ(B4(2, 1), 1.0);
}

TEST(LinearizeAlong, TabulatedRolloutCoversTheOverlap) {
  DiscreteTimeSystem sys = product_system();
  std::vector<Eigen::VectorXd> xs = {vec({0, 0, 0})};
  std::vector<Eigen::VectorXd> us;
  for (int k = 0; k < 5; ++k) {
    us.push_back(vec({double(k), double(-k)}));
    const Eigen::VectorXd& x = xs.back();
    xs.push_back(vec({x(0) + us.back()(0), x(1) + us.back()(1),
                      x(2) + us.back()(0) * us.back()(1)}));
  }
  Trajectory traj(sys, Signal::tabulated(0, xs), Signal::tabulated(0, us));
  LTVSystem ltv = linearize_along(sys, traj);
  ASSERT_FALSE(ltv.is_closed_form());
  EXPECT_EQ(ltv.k_first(), 0);
  EXPECT_EQ(ltv.k_last(), 4);
  EXPECT_TRUE(ltv.A_at(3).isIdentity(0.0));
  EXPECT_EQ(ltv.B_at(3)(2, 0), -3.0);
  EXPECT_EQ(ltv.B_at(3)(2, 1), 3.0);
}

TEST(Regularity, ProductLinearizationIsRegularEverywhere) {
  DiscreteTimeSystem sys = product_system();
  LTVSystem ltv = linearize_along(sys, product_reference_trajectory(sys));
  VerificationReport r = check_ltv_regularity(ltv);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.samples_evaluated, 21);
  ASSERT_EQ(r.notes.size(), 2u);
  EXPECT_EQ(r.notes[0], "k window [-10, 10]");
  EXPECT_EQ(r.notes[1], "min rank [A B; dzeta] = 5 (want 5)");
}

TEST(Regularity, SingularStepIsFlagged) {
  LTVSystem ltv = LTVSystem::closed_form(1, 1, {{parse("k")}}, {{parse("k")}},
                                         {{parse("1"), parse("0")}});
  VerificationReport r = check_ltv_regularity(ltv);
  EXPECT_FALSE(r.pass);
  EXPECT_EQ(r.worst_sample, "k=0 rank=1");
  EXPECT_EQ(r.notes[1], "min rank [A B; dzeta] = 1 (want 2)");
}

TEST(Regularity, WindowOutsideCoverageThrows) {
  std::vector<Eigen::MatrixXd> A(3, Eigen::MatrixXd::Identity(1, 1));
  std::vector<Eigen::MatrixXd> B(3, Eigen::MatrixXd::Identity(1, 1));
  std::vector<Eigen::MatrixXd> dz(3, Eigen::MatrixXd::Zero(1, 2));
  LTVSystem ltv = LTVSystem::tabulated(1, 1, 0, std::move(A), std::move(B), std::move(dz));
  EXPECT_THROW((void)check_ltv_regularity(ltv, {5, 8}), Error);
}

TEST(LinearFlatOutputType, ValidatesGroupsLinearityAndHomogeneity) {
  EXPECT_NO_THROW(LinearFlatOutput({parse("k*dx1+dz1_[-1]")}));
  EXPECT_THROW(LinearFlatOutput({parse("x1+dx1")}), Error);
  EXPECT_THROW(LinearFlatOutput({parse("dy1")}), Error);
  EXPECT_THROW(LinearFlatOutput({parse("dx1*dx2")}), Error);
  EXPECT_THROW(LinearFlatOutput({parse("k+dx1")}), Error);
}

TEST(LinearFlatOutputType, WindowsAndCoefficients) {
  LinearFlatOutput lfo({parse("dz1_[-2]+k*du1_[1]"), parse("dx2")});
  EXPECT_EQ(lfo.m(), 2);
  EXPECT_EQ(lfo.q1(), 2);
  EXPECT_EQ(lfo.q2(), 1);
  EXPECT_TRUE(structurally_equal(lfo.coefficient(1, {VarGroup::DeltaInput, 1, 1}), parse("k")));
  EXPECT_TRUE(lfo.coefficient(2, {VarGroup::DeltaInput, 1, 1}).is_integer_constant(0));
}

TEST(LinearParameterizationType, ValidatesGroupsAndShiftBounds) {
  EXPECT_NO_THROW(LinearParameterization(1, 1, {2}, {parse("k*dy1_[1]")}, {parse("dy1_[2]")}));
  EXPECT_THROW(LinearParameterization(1, 1, {2}, {parse("dy1_[2]")}, {parse("dy1")}), Error);
  EXPECT_THROW(LinearParameterization(1, 1, {2}, {parse("dx1")}, {parse("dy1")}), Error);
  EXPECT_THROW(LinearParameterization(1, 1, {2}, {parse("k+dy1")}, {parse("dy1")}), Error);
  EXPECT_THROW(LinearParameterization(1, 1, {2, 2}, {parse("dy1")}, {parse("dy1")}), Error);
  try {
    LinearParameterization(1, 1, {2}, {parse("dy1_[-1]")}, {parse("dy1")});
    FAIL() << "negative shift accepted";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("normalize the flat output"), std::string::npos);
  }
}

TEST(LinearizeFlatPair, ProductMatchesTheHandLinearization) {
  DiscreteTimeSystem sys = product_system();
  LinearFlatPair lfp =
      linearize_flat_pair(sys, product_flat_pair(sys), product_reference_trajectory(sys));
  EXPECT_EQ(lfp.param.R(), (std::vector<int>{3, 2}));

  const std::vector<std::pair<Expr, Expr>> expected = {
      {lfp.param.x_component(1), parse("dy1_[1]")},
      {lfp.param.x_component(2), parse("1/2*k*(k-1)*(dy1-2*dy1_[1]+dy1_[2])+dy2-dy2_[1]")},
      {lfp.param.x_component(3),
       parse("1/2*k*(k-1)*(k*dy1-(2*k-1)*dy1_[1]+(k-1)*dy1_[2])+k*dy2+(1-k)*dy2_[1]")},
      {lfp.param.u_component(1), parse("-dy1_[1]+dy1_[2]")},
      {lfp.param.u_component(2),
       parse("1/2*k*((1-k)*dy1+(3*k-1)*dy1_[1]-(3*k+1)*dy1_[2])+1/2*k*(k+1)*dy1_[3]"
             "-dy2+2*dy2_[1]-dy2_[2]")}};
  VerificationReport r = numeric_equal_all(expected, SampleDomain{}, 1e-9, "hand-check");
  EXPECT_TRUE(r.pass) << r.summary();
  EXPECT_LT(r.max_rel, 1e-9);
}

TEST(LinearizeFlatPair, ProductLinearFlatOutputMatches) {
  DiscreteTimeSystem sys = product_system();
  LinearFlatPair lfp =
      linearize_flat_pair(sys, product_flat_pair(sys), product_reference_trajectory(sys));
  EXPECT_TRUE(structurally_equal(lfp.output.component(1), parse("dz1_[-1]")));
  VerificationReport r =
      numeric_equal(lfp.output.component(2),
                    parse("dx3-(k-1)*dx2+1/2*k*(k-1)*(dx1-dz1_[-1])"), SampleDomain{});
  EXPECT_TRUE(r.pass) << r.summary();
  EXPECT_EQ(lfp.output.q1(), 1);
}

TEST(LinearizeFlatPair, IntegratorIsConstantCoefficient) {
  DiscreteTimeSystem sys = integrator_system();
  LinearFlatPair lfp = linearize_flat_pair(sys, fixtures::integrator_flat_pair(sys),
                                           integrator_trajectory(sys));
  EXPECT_TRUE(structurally_equal(lfp.output.component(1), parse("dx1")));
  EXPECT_TRUE(structurally_equal(lfp.param.x_component(1), parse("dy1")));
  VerificationReport r =
      numeric_equal(lfp.param.u_component(1), parse("dy1_[1]-dy1"), SampleDomain{});
  EXPECT_TRUE(r.pass);
}

TEST(LinearizeFlatPair, EquilibriumTrajectoryIsSingular) {
  DiscreteTimeSystem sys = product_system();
  Signal x = Signal::closed_form({parse("0"), parse("0"), parse("0")});
  Signal u = Signal::closed_form({parse("0"), parse("0")});
  Trajectory eq(sys, std::move(x), std::move(u));
  EXPECT_THROW((void)linearize_flat_pair(sys, product_flat_pair(sys), eq),
               SingularTrajectoryError);
}

TEST(LinearizeFlatPair, TabulatedTrajectoryRejected) {
  DiscreteTimeSystem sys = product_system();
  Trajectory traj(sys, Signal::tabulated(0, {vec({0, 0, 0}), vec({0, 0, 0})}),
                  Signal::tabulated(0, {vec({0, 0}), vec({0, 0})}));
  EXPECT_THROW((void)linearize_flat_pair(sys, product_flat_pair(sys), traj), Error);
}

TEST(VerifyLinearPair, ProductPairPasses) {
  DiscreteTimeSystem sys = product_system();
  Trajectory traj = product_reference_trajectory(sys);
  LTVSystem ltv = linearize_along(sys, traj);
  LinearFlatPair lfp = linearize_flat_pair(sys, product_flat_pair(sys), traj);
  VerificationReport r = verify_linear_pair(ltv, lfp.output, lfp.param, SampleDomain{});
  EXPECT_TRUE(r.pass) << r.summary();
  EXPECT_LT(r.max_rel, 1e-9);
  EXPECT_EQ(r.check, "linear-pair-flatness");
  EXPECT_EQ(r.samples_evaluated, 200);
  ASSERT_EQ(r.notes.size(), 2u);
  EXPECT_EQ(r.notes[0].substr(0, 4), "(a) ");
  EXPECT_EQ(r.notes[1].substr(0, 4), "(b) ");
}

TEST(VerifyLinearPair, IntegratorPairPasses) {
  DiscreteTimeSystem sys = integrator_system();
  Trajectory traj = integrator_trajectory(sys);
  LTVSystem ltv = linearize_along(sys, traj);
  LinearFlatPair lfp = linearize_flat_pair(sys, fixtures::integrator_flat_pair(sys), traj);
  VerificationReport r = verify_linear_pair(ltv, lfp.output, lfp.param, SampleDomain{});
  EXPECT_TRUE(r.pass) << r.summary();
  EXPECT_LT(r.max_rel, 1e-12);
}

TEST(VerifyLinearPair, PerturbedCoefficientFails) {
  DiscreteTimeSystem sys = product_system();
  Trajectory traj = product_reference_trajectory(sys);
  LTVSystem ltv = linearize_along(sys, traj);
  LinearFlatPair lfp = linearize_flat_pair(sys, product_flat_pair(sys), traj);
  LinearParameterization bent(3, 2, lfp.param.R(),
                              {lfp.param.x_component(1) + parse("1/1000*dy1"),
                               lfp.param.x_component(2), lfp.param.x_component(3)},
                              {lfp.param.u_component(1), lfp.param.u_component(2)});
  VerificationReport r = verify_linear_pair(ltv, lfp.output, bent, SampleDomain{});
  EXPECT_FALSE(r.pass);
  EXPECT_GT(r.max_abs, 1e-4);
  EXPECT_LT(r.max_abs, 1e-1);
}

TEST(VerifyLinearPair, RejectsTabulatedAndMismatchedInputs) {
  std::vector<Eigen::MatrixXd> A(2, Eigen::MatrixXd::Identity(1, 1));
  std::vector<Eigen::MatrixXd> B(2, Eigen::MatrixXd::Identity(1, 1));
  std::vector<Eigen::MatrixXd> dz(2, Eigen::MatrixXd::Zero(1, 2));
  LTVSystem tab = LTVSystem::tabulated(1, 1, 0, std::move(A), std::move(B), std::move(dz));
  LinearFlatOutput lfo({parse("dx1")});
  LinearParameterization lp(1, 1, {1}, {parse("dy1")}, {parse("dy1_[1]-dy1")});
  EXPECT_THROW((void)verify_linear_pair(tab, lfo, lp, SampleDomain{}), Error);

  LTVSystem wide = LTVSystem::closed_form(
      1, 2, {{parse("1")}}, {{parse("1"), parse("0")}},
      {{parse("0"), parse("1"), parse("0")}, {parse("0"), parse("0"), parse("1")}});
  EXPECT_THROW((void)verify_linear_pair(wide, lfo, lp, SampleDomain{}), Error);
}

}  // namespace
}  // namespace dtflat
