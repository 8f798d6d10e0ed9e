#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dtflat/expr.hpp"
#include "dtflat/flatness.hpp"
#include "dtflat/system.hpp"
#include "dtflat/verify.hpp"

namespace dtflat {

// Closed-form rollout request stored alongside a model: start state, start
// step, input expressions in k, and the number of forward steps.
struct SimulationSetup {
  Eigen::VectorXd x0;
  std::int64_t k0 = 0;
  std::vector<Expr> u;
  int steps = 0;
};

// A model description loaded from disk. The dynamics are mandatory; the
// reference trajectory, the flat pair, the exclusion predicates, and the
// simulation setup are optional blocks that commands pick up when present.
struct SystemFile {
  DiscreteTimeSystem system;
  std::optional<Trajectory> trajectory;
  std::optional<FlatPair> flat_pair;
  std::vector<Exclusion> exclusions;
  std::optional<SimulationSetup> simulation;

  // Default sampling domain with the file's exclusion predicates attached.
  [[nodiscard]] SampleDomain domain() const;
};

// Parses the line-based `key = value` model format:
//
//   n = 3                     state and input dimensions (required)
//   m = 2
//   f.1 = x1 + u1             transition components, 1..n (required)
//   g.1 = x1                  extension components, 1..m (required)
//   psi.x.1 = z1_[-1]         inverse map, all of x.1..n and u.1..m or none
//   psi.u.1 = x1 - z1_[-1]
//   equilibrium.x = 0 0 0     both lists or neither
//   equilibrium.u = 0 0
//   trajectory.x.1 = 1/2*k*(k-1)   closed-form reference, all components or none
//   trajectory.u.1 = k
//   flat.y.1 = z1_[-1]        flat output; requires the param block
//   param.R = 3 2             per-component shift bounds, m entries
//   param.x.1 = y1_[1]        state and input parameterization, 1..n and 1..m
//   param.u.1 = y1_[2]-y1_[1]
//   exclude = y1-2*y1_[1]+y1_[2]   sampling guard, repeatable
//   simulate.x0 = 0 0 0       rollout request: x0, u.1..m, steps, optional k0
//   simulate.u.1 = 1
//   simulate.steps = 12
//
// `#` starts a comment, blank lines are skipped, keys cannot repeat (except
// `exclude`). Throws FileFormatError with `origin:line:` context for format
// violations and for values the model constructors reject.
[[nodiscard]] SystemFile parse_system_text(const std::string& text,
                                           const std::string& origin = "<text>");

// Reads and parses a model file; the path becomes the error origin.
[[nodiscard]] SystemFile load_system_file(const std::string& path);

}  // namespace dtflat
