#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dtflat/linearize.hpp"
#include "dtflat/ltv.hpp"
#include "dtflat/planner.hpp"
#include "dtflat/system.hpp"
#include "dtflat/verify.hpp"

namespace dtflat::cli {

inline constexpr std::uint64_t kDefaultSeed = 0x5eed0001u;

// Exit status contract shared by every command.
inline constexpr int kExitOk = 0;           // success, or a verdict either way
inline constexpr int kExitFailedCheck = 1;  // failed verification or no convergence
inline constexpr int kExitInputError = 2;   // unreadable file, bad arguments

// Outcome of one command run. `text` is the full report with LF endings,
// ready to print; the structured fields back the regression tests.
struct RunReport {
  std::string command;
  std::uint64_t seed = kDefaultSeed;
  int exit_code = kExitOk;
  std::vector<VerificationReport> checks;
  std::vector<std::string> csv_paths;
  std::string text;

  std::optional<LTVSystem> ltv;                       // linearize
  std::optional<LinearFlatPair> linear_pair;          // linearize, when a flat pair is present
  std::optional<NecessaryConditionResult> verdict;    // necessary-condition
  std::optional<Plan> plan;                           // plan
};

struct VerifyOptions {
  std::uint64_t seed = kDefaultSeed;
  bool deterministic = false;
};

struct LinearizeOptions {
  std::uint64_t seed = kDefaultSeed;
  bool deterministic = false;
  KWindow window{-10, 10};
  std::string csv;        // destination for the sampled matrices; empty skips the export
  bool simulate = false;  // use the rollout request even when a closed form is present
};

struct NecessaryConditionOptions {
  std::uint64_t seed = kDefaultSeed;
  bool deterministic = false;
  int horizon = 0;  // longest window tested; 0 means twice the state dimension
  bool simulate = false;
  std::optional<KWindow> window;  // scan range; defaults to coverage or [-10, 10]
};

struct PlanOptions {
  std::uint64_t seed = kDefaultSeed;
  bool deterministic = false;
  std::vector<double> from;
  std::vector<double> to;
  std::int64_t k_initial = 0;
  std::int64_t k_final = 0;
  std::string csv = "plan.csv";
};

// Runs every check the file supports: submersivity, the inverse map, the
// equilibrium, the reference trajectory, and the flat pair with its rank
// conditions. Exit 0 iff all pass.
[[nodiscard]] RunReport run_verify(const std::string& path, const VerifyOptions& opt = {});

// Linearizes the dynamics along the file's trajectory (or its rollout
// request), prints the chart Jacobians and, for closed forms, the composed
// A(k), B(k); with a flat pair present also linearizes it and verifies the
// linear pair plus the shift commutation. Optionally samples A, B to CSV.
[[nodiscard]] RunReport run_linearize(const std::string& path, const LinearizeOptions& opt = {});

// Reachability-based flatness test along the trajectory; the verdict
// (NotFlat or Inconclusive) always exits 0.
[[nodiscard]] RunReport run_necessary_condition(const std::string& path,
                                                const NecessaryConditionOptions& opt = {});

// Plans a transition between two states through the flat output and writes
// the sampled plan to CSV.
[[nodiscard]] RunReport run_plan(const std::string& path, const PlanOptions& opt = {});

}  // namespace dtflat::cli
