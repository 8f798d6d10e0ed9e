#include "dtflat/planner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "dtflat/errors.hpp"

namespace dtflat {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double uniform(std::uint64_t& state, double lo, double hi) {
  const double u01 = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
  return lo + u01 * (hi - lo);
}

}  // namespace

Trajectory simulate(const DiscreteTimeSystem& sys, const Eigen::VectorXd& x0, std::int64_t k0,
                    const Signal& u, std::int64_t steps) {
  if (x0.size() != sys.n()) throw Error("initial state dimension mismatch");
  if (u.dim() != sys.m()) throw Error("input signal dimension mismatch");
  if (steps < 0) {
    if (u.is_closed_form())
      throw Error("closed-form inputs need an explicit step count to simulate");
    if (u.k_first() > k0 || u.k_last() < k0)
      throw Error("input samples do not cover the start step");
    steps = u.k_last() - k0 + 1;
  }
  if (steps == 0) throw Error("simulate needs at least one step");

  std::vector<Eigen::VectorXd> xs = {x0};
  std::vector<Eigen::VectorXd> us;
  for (std::int64_t t = 0; t < steps; ++t) {
    const std::int64_t k = k0 + t;
    Eigen::VectorXd uk(sys.m());
    for (int j = 1; j <= sys.m(); ++j) uk(j - 1) = u.component_at(j, k);
    Binding b{k, {}};
    for (int i = 1; i <= sys.n(); ++i) b.values[VarRef::state(i)] = xs.back()(i - 1);
    for (int j = 1; j <= sys.m(); ++j) b.values[VarRef::input(j)] = uk(j - 1);
    Eigen::VectorXd next(sys.n());
    for (int i = 1; i <= sys.n(); ++i) next(i - 1) = evaluate(sys.f(i), b);
    us.push_back(std::move(uk));
    xs.push_back(std::move(next));
  }
  return {sys, Signal::tabulated(k0, std::move(xs)), Signal::tabulated(k0, std::move(us))};
}

Trajectory realize(const DiscreteTimeSystem& sys, const FlatPair& pair, const Signal& y,
                   KWindow k_range) {
  const int n = sys.n();
  const int m = sys.m();
  const std::vector<int>& R = pair.param.R();
  if (pair.param.n() != n || pair.param.m() != m)
    throw Error("flat pair dimensions do not match the system");
  if (y.dim() != m) throw Error("flat output signal dimension mismatch");
  const int r = *std::max_element(R.begin(), R.end());
  const std::int64_t a = k_range.first;
  const std::int64_t b = k_range.last;
  if (b < a) throw Error("empty realization range");
  if (y.k_first() > a || y.k_last() < b + r - 1)
    throw Error("flat output samples do not cover the realization range (need steps " +
                std::to_string(a) + " through " + std::to_string(b + r - 1) + ")");
  // x is realized on all of [a, b]; u stops one step short unless the
  // samples also cover b + r.
  const std::int64_t u_last = std::min<std::int64_t>(b, y.k_last() - r);

  std::vector<Eigen::VectorXd> xs, us;
  for (std::int64_t k = a; k <= b; ++k) {
    Binding bind{k, {}};
    const bool want_u = k <= u_last;
    for (int l = 1; l <= m; ++l) {
      const int top = want_u ? R[l - 1] : R[l - 1] - 1;
      for (int alpha = 0; alpha <= top; ++alpha)
        bind.values[VarRef::flat_out(l, alpha)] = y.component_at(l, k + alpha);
    }
    try {
      Eigen::VectorXd xk(n);
      for (int i = 1; i <= n; ++i) xk(i - 1) = evaluate(pair.param.x_component(i), bind);
      xs.push_back(std::move(xk));
      if (want_u) {
        Eigen::VectorXd uk(m);
        for (int j = 1; j <= m; ++j) uk(j - 1) = evaluate(pair.param.u_component(j), bind);
        us.push_back(std::move(uk));
      }
    } catch (const DivisionNearZeroError&) {
      throw SingularParameterizationError("parameterization singular at k=" +
                                          std::to_string(k));
    }
  }

  Trajectory traj(sys, Signal::tabulated(a, std::move(xs)), Signal::tabulated(a, std::move(us)));
  VerificationReport dynamics = check_trajectory(sys, traj);
  if (!dynamics.pass)
    throw Error("realized trajectory violates the dynamics, the flat pair is inconsistent: " +
                dynamics.summary());
  return traj;
}

Plan plan(const DiscreteTimeSystem& sys, const PlanProblem& problem, std::uint64_t seed) {
  const FlatPair& pair = problem.pair;
  const int n = sys.n();
  const int m = sys.m();
  if (pair.param.n() != n || pair.param.m() != m)
    throw Error("flat pair dimensions do not match the system");
  if (problem.x_initial.size() != n || problem.x_final.size() != n)
    throw Error("boundary state dimension mismatch");
  const std::vector<int>& R = pair.param.R();
  const int r = *std::max_element(R.begin(), R.end());
  const std::int64_t ki = problem.k_initial;
  const std::int64_t kf = problem.k_final;
  if (kf < ki + r)
    throw Error("planning window too short: need k_final >= k_initial + " + std::to_string(r));

  const int steps = static_cast<int>(kf - ki) + r;  // y samples
  const int unknowns = steps * m;

  // Equation rows: 0..n-1 anchor x(ki), n..2n-1 anchor x(kf). Columns flatten
  // the samples step-major: y_l(ki + t) sits at t*m + l - 1.
  struct BoundaryTerm {
    VarRef var;
    Expr partial;
  };
  std::vector<std::vector<BoundaryTerm>> terms(n);
  for (int i = 1; i <= n; ++i)
    for (const VarRef& v : pair.param.x_component(i).variables())
      if (v.group == VarGroup::FlatOut)
        terms[i - 1].push_back({v, differentiate(pair.param.x_component(i), v)});

  auto bind_at = [&](const Eigen::VectorXd& Y, std::int64_t kb) {
    Binding bind{kb, {}};
    const int t0 = static_cast<int>(kb - ki);
    for (int l = 1; l <= m; ++l)
      for (int alpha = 0; alpha <= R[l - 1] - 1; ++alpha)
        bind.values[VarRef::flat_out(l, alpha)] = Y((t0 + alpha) * m + l - 1);
    return bind;
  };

  auto residual = [&](const Eigen::VectorXd& Y, Eigen::VectorXd& res) {
    try {
      for (int side = 0; side < 2; ++side) {
        Binding bind = bind_at(Y, side == 0 ? ki : kf);
        const Eigen::VectorXd& target = side == 0 ? problem.x_initial : problem.x_final;
        for (int i = 1; i <= n; ++i)
          res(side * n + i - 1) = evaluate(pair.param.x_component(i), bind) - target(i - 1);
      }
    } catch (const DivisionNearZeroError&) {
      return false;
    }
    return true;
  };

  auto jacobian = [&](const Eigen::VectorXd& Y, Eigen::MatrixXd& J) {
    J.setZero();
    try {
      for (int side = 0; side < 2; ++side) {
        const std::int64_t kb = side == 0 ? ki : kf;
        Binding bind = bind_at(Y, kb);
        const int t0 = static_cast<int>(kb - ki);
        for (int i = 1; i <= n; ++i)
          for (const BoundaryTerm& term : terms[i - 1])
            J(side * n + i - 1, (t0 + term.var.shift) * m + term.var.component - 1) =
                evaluate(term.partial, bind);
      }
    } catch (const DivisionNearZeroError&) {
      return false;
    }
    return true;
  };

  const int max_attempts = 50;
  std::uint64_t stream = seed;
  int singular_attempts = 0;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    // Linear interpolation between random anchors, plus per-step jitter so
    // the guess stays off loci where second differences of y vanish.
    Eigen::VectorXd anchor_a(m), anchor_b(m);
    for (int j = 0; j < m; ++j) anchor_a(j) = uniform(stream, -1.0, 1.0);
    for (int j = 0; j < m; ++j) anchor_b(j) = uniform(stream, -1.0, 1.0);
    Eigen::VectorXd Y(unknowns);
    for (int t = 0; t < steps; ++t) {
      const double w = steps == 1 ? 0.0 : static_cast<double>(t) / (steps - 1);
      for (int j = 0; j < m; ++j)
        Y(t * m + j) = (1.0 - w) * anchor_a(j) + w * anchor_b(j) + uniform(stream, -0.5, 0.5);
    }

    Eigen::VectorXd res(2 * n);
    if (!residual(Y, res)) {
      ++singular_attempts;
      continue;
    }
    bool stalled = false;
    for (int iter = 0; iter < 100 && res.lpNorm<Eigen::Infinity>() > 1e-9; ++iter) {
      Eigen::MatrixXd J(2 * n, unknowns);
      if (!jacobian(Y, J)) {
        ++singular_attempts;
        stalled = true;
        break;
      }
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(J);
      const Eigen::VectorXd step = cod.solve(-res);
      const double current = res.norm();
      double damping = 1.0;
      bool advanced = false;
      for (int halving = 0; halving <= 50; ++halving) {
        Eigen::VectorXd trial = Y + damping * step;
        Eigen::VectorXd trial_res(2 * n);
        if (residual(trial, trial_res) && trial_res.norm() < current) {
          Y = std::move(trial);
          res = std::move(trial_res);
          advanced = true;
          break;
        }
        damping *= 0.5;
      }
      if (!advanced) {
        stalled = true;
        break;
      }
    }
    if (stalled || res.lpNorm<Eigen::Infinity>() > 1e-9) continue;

    std::vector<Eigen::VectorXd> samples;
    for (int t = 0; t < steps; ++t) samples.push_back(Y.segment(t * m, m));
    Signal y = Signal::tabulated(ki, std::move(samples));
    try {
      Trajectory realized = realize(sys, pair, y, {ki, kf});
      return {ki,      kf,      std::move(y), std::move(realized),
              res.lpNorm<Eigen::Infinity>(), attempt,      seed};
    } catch (const SingularParameterizationError&) {
      ++singular_attempts;
      continue;
    }
  }
  if (singular_attempts == max_attempts)
    throw SingularParameterizationError(
        "every planning attempt hit a parameterization singularity");
  throw NoConvergenceError("no plan found after " + std::to_string(max_attempts) +
                           " seeded attempts");
}

}  // namespace dtflat
