#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "dtflat/expr.hpp"
#include "dtflat/flatness.hpp"
#include "dtflat/linearize.hpp"
#include "dtflat/ltv.hpp"
#include "dtflat/planner.hpp"
#include "dtflat/system.hpp"
#include "dtflat/verify.hpp"

namespace {

using namespace dtflat;

// Longest expression shipped with the example models: the second input
// component of the product parameterization.
const char* kDenseFormula =
    "(y1*(y1_[1] - y1_[2]) + y1_[1]*(-y2 - y1_[2] + 2*y2_[2]) + y1_[2]*(2*y2 - y1_[2] - y2_[2]))"
    "/(y1*(y1_[1] - 2*y1_[2] + y1_[3]) + y1_[1]*(-2*y1_[1] + 5*y1_[2] - 2*y1_[3])"
    " + y1_[2]*(-2*y1_[2] + y1_[3]))";

DiscreteTimeSystem product_system() {
  InverseMap psi;
  psi.x = {parse("z1_[-1]"), parse("z2_[-1]"),
           parse("x3 - (x1 - z1_[-1])*(x2 - z2_[-1])")};
  psi.u = {parse("x1 - z1_[-1]"), parse("x2 - z2_[-1]")};
  return DiscreteTimeSystem(3, 2,
                            {parse("x1 + u1"), parse("x2 + u2"), parse("x3 + u1*u2")},
                            {parse("x1"), parse("x2")}, psi);
}

FlatPair product_pair(const DiscreteTimeSystem& sys) {
  FlatOutputCandidate candidate(sys, {parse("z1_[-1]"), parse("x3 - x2*(x1 - z1_[-1])")});
  Parameterization param(
      3, 2, {3, 2},
      {parse("y1_[1]"), parse("(y2 - y2_[1])/(y1 - 2*y1_[1] + y1_[2])"),
       parse("(y1*y2_[1] - y1_[1]*(y2 + y2_[1]) + y1_[2]*y2)/(y1 - 2*y1_[1] + y1_[2])")},
      {parse("y1_[2] - y1_[1]"),
       parse("(y1*(y2_[1] - y2_[2]) + y1_[1]*(-y2 - y2_[1] + 2*y2_[2])"
             " + y1_[2]*(2*y2 - y2_[1] - y2_[2]) + y1_[3]*(-y2 + y2_[1]))"
             "/(y1*(y1_[1] - 2*y1_[2] + y1_[3]) + y1_[1]*(-2*y1_[1] + 5*y1_[2] - 2*y1_[3])"
             " + y1_[2]*(-2*y1_[2] + y1_[3]))")});
  return FlatPair(std::move(candidate), std::move(param));
}

Trajectory product_reference(const DiscreteTimeSystem& sys) {
  return Trajectory(sys,
                    Signal::closed_form({parse("1/2*k*(k - 1)"), parse("-1/2*k*(k - 1)"),
                                         parse("-1/6*k*(k - 1)*(2*k - 1)")}),
                    Signal::closed_form({parse("k"), parse("-k")}));
}

DiscreteTimeSystem trig_system() {
  return DiscreteTimeSystem(3, 2,
                            {parse("-sin(x1 - x3) + u2"), parse("(1 - sin(x1 - x3))*u1"),
                             parse("u2")},
                            {parse("x1"), parse("x2")});
}

Binding dense_binding() {
  Binding b;
  b.k = 3;
  const Expr e = parse(kDenseFormula);
  double v = 0.3;
  for (const VarRef& var : e.variables()) {
    b.values[var] = v;
    v += 0.7;
  }
  return b;
}

void BM_Parse(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(parse(kDenseFormula));
}
BENCHMARK(BM_Parse);

void BM_Evaluate(benchmark::State& state) {
  const Expr e = parse(kDenseFormula);
  const Binding b = dense_binding();
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(e, b));
}
BENCHMARK(BM_Evaluate);

void BM_Differentiate(benchmark::State& state) {
  const Expr e = parse(kDenseFormula);
  const VarRef v = VarRef::flat_out(1, 1);
  for (auto _ : state) benchmark::DoNotOptimize(differentiate(e, v));
}
BENCHMARK(BM_Differentiate);

void BM_ForwardShift(benchmark::State& state) {
  const DiscreteTimeSystem sys = product_system();
  const Expr phi2 = parse("x3 - x2*(x1 - z1_[-1])");
  const int times = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(forward_shift(sys, phi2, times));
}
BENCHMARK(BM_ForwardShift)->Arg(1)->Arg(4);

void BM_LieLinearize(benchmark::State& state) {
  const Expr phi2 = parse("x3 - x2*(x1 - z1_[-1])");
  for (auto _ : state) benchmark::DoNotOptimize(lie_linearize(phi2));
}
BENCHMARK(BM_LieLinearize);

void BM_DeltaLinShift(benchmark::State& state) {
  const DiscreteTimeSystem sys = product_system();
  const Expr linearized = lie_linearize(parse("x3 - x2*(x1 - z1_[-1])"));
  const int times = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(delta_lin_shift(sys, linearized, times));
}
BENCHMARK(BM_DeltaLinShift)->Arg(1)->Arg(4);

void BM_LinearizeAlong(benchmark::State& state) {
  const DiscreteTimeSystem sys = product_system();
  const Trajectory traj = product_reference(sys);
  for (auto _ : state) benchmark::DoNotOptimize(linearize_along(sys, traj));
}
BENCHMARK(BM_LinearizeAlong);

void BM_LinearizeFlatPair(benchmark::State& state) {
  const DiscreteTimeSystem sys = product_system();
  const FlatPair pair = product_pair(sys);
  const Trajectory traj = product_reference(sys);
  for (auto _ : state) benchmark::DoNotOptimize(linearize_flat_pair(sys, pair, traj));
}
BENCHMARK(BM_LinearizeFlatPair);

void BM_Simulate(benchmark::State& state) {
  const DiscreteTimeSystem sys = product_system();
  const Signal u = Signal::closed_form({parse("k"), parse("-k")});
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(3);
  const std::int64_t steps = state.range(0);
  for (auto _ : state) benchmark::DoNotOptimize(simulate(sys, x0, 0, u, steps));
}
BENCHMARK(BM_Simulate)->Arg(10)->Arg(100);

void BM_Reachability(benchmark::State& state) {
  const DiscreteTimeSystem sys = trig_system();
  std::vector<Eigen::VectorXd> inputs(8, Eigen::VectorXd::Constant(2, 0.5));
  const Trajectory traj =
      simulate(sys, Eigen::VectorXd::Zero(3), 0, Signal::tabulated(0, inputs));
  const LTVSystem ltv = linearize_along(sys, traj);
  for (auto _ : state) benchmark::DoNotOptimize(reachability(ltv, 0, 6));
}
BENCHMARK(BM_Reachability);

void BM_NecessaryCondition(benchmark::State& state) {
  const DiscreteTimeSystem sys = trig_system();
  std::vector<Eigen::VectorXd> inputs(8, Eigen::VectorXd::Constant(2, 0.5));
  const Trajectory traj =
      simulate(sys, Eigen::VectorXd::Zero(3), 0, Signal::tabulated(0, inputs));
  for (auto _ : state)
    benchmark::DoNotOptimize(flatness_necessary_condition(sys, traj, 0, 8, 6));
}
BENCHMARK(BM_NecessaryCondition);

void BM_VerifyFlatPair(benchmark::State& state) {
  const DiscreteTimeSystem sys = product_system();
  const FlatPair pair = product_pair(sys);
  SampleDomain domain;
  domain.samples = static_cast<int>(state.range(0));
  domain.exclusions.push_back({parse("y1 - 2*y1_[1] + y1_[2]"), 0.1});
  domain.exclusions.push_back(
      {parse("y1*(y1_[1] - 2*y1_[2] + y1_[3]) + y1_[1]*(-2*y1_[1] + 5*y1_[2] - 2*y1_[3])"
             " + y1_[2]*(-2*y1_[2] + y1_[3])"),
       0.1});
  for (auto _ : state) benchmark::DoNotOptimize(verify_flat_pair(sys, pair, domain));
}
BENCHMARK(BM_VerifyFlatPair)->Arg(100);

void BM_Realize(benchmark::State& state) {
  const DiscreteTimeSystem sys = product_system();
  const FlatPair pair = product_pair(sys);
  std::vector<Eigen::VectorXd> samples;
  for (std::int64_t k = -2; k <= 12; ++k) {
    Eigen::VectorXd v(2);
    v(0) = static_cast<double>((k - 1) * (k - 2)) / 2.0;
    v(1) = static_cast<double>(k * (k - 1) * (k - 2)) / 6.0;
    samples.push_back(v);
  }
  const Signal y = Signal::tabulated(-2, samples);
  for (auto _ : state) benchmark::DoNotOptimize(realize(sys, pair, y, KWindow{-2, 9}));
}
BENCHMARK(BM_Realize);

void BM_Plan(benchmark::State& state) {
  const DiscreteTimeSystem sys = product_system();
  PlanProblem problem{product_pair(sys), Eigen::VectorXd::Zero(3), 0,
                      (Eigen::VectorXd(3) << 3, -3, -5).finished(), 5};
  for (auto _ : state) benchmark::DoNotOptimize(plan(sys, problem, 0x5eed0001u));
}
BENCHMARK(BM_Plan);

void BM_PolynomialInK(benchmark::State& state) {
  // Second difference of the reference flat output, a constant in disguise.
  const Expr e = parse(
      "1/6*(k + 1)*k*(k - 1) - 2*(1/6*k*(k - 1)*(k - 2)) + 1/6*(k - 1)*(k - 2)*(k - 3)");
  for (auto _ : state) benchmark::DoNotOptimize(polynomial_in_k(e));
}
BENCHMARK(BM_PolynomialInK);

}  // namespace

BENCHMARK_MAIN();
