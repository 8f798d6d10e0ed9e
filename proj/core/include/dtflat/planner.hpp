#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "dtflat/flatness.hpp"
#include "dtflat/system.hpp"

namespace dtflat {

// Point-to-point steering task: reach x_final at step k_final from x_initial
// at step k_initial. Feasible windows satisfy k_final >= k_initial + max(R),
// the number of steps after which any state is reachable through the flat
// output.
struct PlanProblem {
  FlatPair pair;
  Eigen::VectorXd x_initial;
  std::int64_t k_initial = 0;
  Eigen::VectorXd x_final;
  std::int64_t k_final = 0;
};

struct Plan {
  std::int64_t k_initial = 0;
  std::int64_t k_final = 0;
  // Flat output samples on [k_initial, k_final + max(R) - 1], enough to
  // realize x on [k_initial, k_final] and u on [k_initial, k_final - 1].
  Signal y;
  Trajectory realized;
  double boundary_residual = 0.0;  // final Newton residual, sup norm
  int restarts_used = 0;
  std::uint64_t seed = 0;
};

// Forward rollout x(k+1) = f(k, x(k), u(k)) for `steps` steps. A negative
// step count means "as far as a tabulated input reaches"; closed-form
// inputs need an explicit count.
[[nodiscard]] Trajectory simulate(const DiscreteTimeSystem& sys, const Eigen::VectorXd& x0,
                                  std::int64_t k0, const Signal& u, std::int64_t steps = -1);

// Evaluates the parameterization on flat output samples: x over the whole
// k_range, u up to one step earlier when the samples run out. Throws
// SingularParameterizationError at the first singular step and Error when
// the samples cannot cover the range. The result is cross-checked against
// the dynamics before it is returned.
[[nodiscard]] Trajectory realize(const DiscreteTimeSystem& sys, const FlatPair& pair,
                                 const Signal& y, KWindow k_range);

// Solves the 2n boundary equations x(k_i) = F_x(k_i, y-jet), x(k_f) =
// F_x(k_f, y-jet) for the free flat output samples by damped minimum-norm
// Newton steps, restarting from fresh seeded guesses on singularities or
// stalls. Deterministic in (problem, seed).
[[nodiscard]] Plan plan(const DiscreteTimeSystem& sys, const PlanProblem& problem,
                        std::uint64_t seed = 0x9137a2b5u);

}  // namespace dtflat
