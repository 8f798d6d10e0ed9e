#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "dtflat/linearize.hpp"
#include "dtflat/system.hpp"
#include "dtflat/verify.hpp"

namespace dtflat {

// Span of the states reachable from dx(k0) = 0 at step kf under
// dx+ = A(k) dx + B(k) du, as the column space of the stacked
// transition-weighted input blocks.
struct ReachabilityAnalysis {
  std::int64_t k0 = 0;
  std::int64_t kf = 0;
  // n x m*(kf-k0); blocks ordered [B(kf-1) | A(kf-1)B(kf-2) | ...], so the
  // freshest input enters first.
  Eigen::MatrixXd matrix;
  int rank = 0;
  Eigen::VectorXd singular_values;
  enum class Verdict { Reachable, NotReachableOnWindow };
  Verdict verdict = Verdict::NotReachableOnWindow;
};

// Requires kf > k0 and A, B evaluable at every step in [k0, kf).
[[nodiscard]] ReachabilityAnalysis reachability(const LTVSystem& ltv, std::int64_t k0,
                                                std::int64_t kf);

// Max |entry of A(k)B(k)| over the window (clipped to coverage). A pass
// certifies the annihilation pattern that caps the reachability rank at m
// regardless of the window.
[[nodiscard]] VerificationReport check_AB_annihilation(const LTVSystem& ltv,
                                                       KWindow k_range = {-10, 10},
                                                       double tol = 1e-12);

// Reachability of the linearization is necessary for flatness, so the
// verdict is either NotFlat or Inconclusive, never Flat.
enum class FlatnessVerdict : std::uint8_t { NotFlat, Inconclusive };

struct NecessaryConditionResult {
  FlatnessVerdict verdict = FlatnessVerdict::Inconclusive;
  std::int64_t k0 = 0;
  std::int64_t kf = 0;
  int horizon = 0;        // longest window length tested
  int windows_tested = 0;
  int required_rank = 0;  // the state dimension n
  int max_rank = 0;       // best rank over all tested windows
  std::int64_t best_k0 = 0;  // window attaining max_rank
  std::int64_t best_kf = 0;
  std::string statement;
};

// Linearizes along the trajectory and scans every window [a, b] inside
// [k0, kf] with 1 <= b - a <= horizon (default 2n). NotFlat requires every
// tested window to be unreachable; a single reachable window already makes
// the condition inconclusive. The trajectory must satisfy the dynamics.
[[nodiscard]] NecessaryConditionResult flatness_necessary_condition(
    const DiscreteTimeSystem& sys, const Trajectory& traj, std::int64_t k0, std::int64_t kf,
    int horizon = 0);

}  // namespace dtflat
