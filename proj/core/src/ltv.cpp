#include "dtflat/ltv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dtflat/errors.hpp"
#include "dtflat/linalg.hpp"

namespace dtflat {

ReachabilityAnalysis reachability(const LTVSystem& ltv, std::int64_t k0, std::int64_t kf) {
  if (kf <= k0) throw Error("reachability needs kf > k0");
  const int n = ltv.n();
  const int m = ltv.m();
  const std::int64_t steps = kf - k0;

  ReachabilityAnalysis out;
  out.k0 = k0;
  out.kf = kf;
  out.matrix.resize(n, static_cast<Eigen::Index>(m * steps));
  // transition accumulates A(kf-1)...A(kf-i) while walking backwards.
  Eigen::MatrixXd transition = Eigen::MatrixXd::Identity(n, n);
  for (std::int64_t i = 0; i < steps; ++i) {
    const std::int64_t k = kf - 1 - i;
    out.matrix.middleCols(static_cast<Eigen::Index>(i * m), m) = transition * ltv.B_at(k);
    if (i + 1 < steps) transition = transition * ltv.A_at(k);
  }
  out.rank = numeric_rank(out.matrix, 1e-9, &out.singular_values);
  out.verdict = out.rank == n ? ReachabilityAnalysis::Verdict::Reachable
                              : ReachabilityAnalysis::Verdict::NotReachableOnWindow;
  return out;
}

VerificationReport check_AB_annihilation(const LTVSystem& ltv, KWindow k_range, double tol) {
  VerificationReport report;
  report.check = "AB-annihilation";
  report.tolerance = tol;
  const std::int64_t k_first = std::max<std::int64_t>(k_range.first, ltv.k_first());
  const std::int64_t k_last = std::min<std::int64_t>(k_range.last, ltv.k_last());
  if (k_first > k_last)
    throw Error("annihilation window does not intersect the LTV system's coverage");

  for (std::int64_t k = k_first; k <= k_last; ++k) {
    Eigen::MatrixXd product;
    try {
      product = ltv.A_at(k) * ltv.B_at(k);
    } catch (const DivisionNearZeroError&) {
      ++report.samples_skipped;
      continue;
    }
    ++report.samples_evaluated;
    for (Eigen::Index i = 0; i < product.rows(); ++i) {
      for (Eigen::Index j = 0; j < product.cols(); ++j) {
        const double mag = std::abs(product(i, j));
        if (mag > report.max_abs || report.worst_sample.empty()) {
          report.max_abs = mag;
          report.worst_sample = "k=" + std::to_string(k) + " entry (" + std::to_string(i + 1) +
                                "," + std::to_string(j + 1) + ")";
        }
      }
    }
  }
  if (report.samples_evaluated == 0)
    throw AllSamplesSingularError("every step of the annihilation window was singular");
  report.max_rel = relative_deviation(report.max_abs, 0.0);
  report.pass = report.max_abs <= tol;
  report.notes.push_back("k window [" + std::to_string(k_first) + ", " +
                         std::to_string(k_last) + "]");
  report.notes.push_back("max |A(k)B(k)| = " + format_double(report.max_abs));
  return report;
}

NecessaryConditionResult flatness_necessary_condition(const DiscreteTimeSystem& sys,
                                                      const Trajectory& traj, std::int64_t k0,
                                                      std::int64_t kf, int horizon) {
  if (kf <= k0) throw Error("flatness_necessary_condition needs kf > k0");
  if (horizon <= 0) horizon = 2 * sys.n();

  VerificationReport dynamics = check_trajectory(sys, traj, KWindow{k0, kf});
  if (!dynamics.pass)
    throw Error("the supplied trajectory violates the dynamics: " + dynamics.summary());

  const LTVSystem ltv = linearize_along(sys, traj);
  const std::int64_t scan_first = std::max<std::int64_t>(k0, ltv.k_first());
  // Window [a, b] consumes A, B on [a, b), so b - 1 must stay covered.
  std::int64_t scan_last = kf;
  if (ltv.k_last() != std::numeric_limits<std::int64_t>::max())
    scan_last = std::min<std::int64_t>(kf, ltv.k_last() + 1);

  NecessaryConditionResult result;
  result.k0 = k0;
  result.kf = kf;
  result.horizon = horizon;
  result.required_rank = sys.n();
  for (std::int64_t a = scan_first; a < scan_last; ++a) {
    const std::int64_t b_max = std::min<std::int64_t>(a + horizon, scan_last);
    for (std::int64_t b = a + 1; b <= b_max; ++b) {
      ReachabilityAnalysis ra = reachability(ltv, a, b);
      ++result.windows_tested;
      if (ra.rank > result.max_rank || result.windows_tested == 1) {
        result.max_rank = ra.rank;
        result.best_k0 = a;
        result.best_kf = b;
      }
    }
  }
  if (result.windows_tested == 0)
    throw Error("no reachability window fits inside the trajectory's coverage");

  if (result.max_rank < result.required_rank) {
    result.verdict = FlatnessVerdict::NotFlat;
    result.statement = "rank " + std::to_string(result.max_rank) + " < " +
                       std::to_string(result.required_rank) + " on all " +
                       std::to_string(result.windows_tested) +
                       " windows up to length " + std::to_string(horizon) +
                       ": not flat in any neighborhood of the tested trajectory";
  } else {
    result.verdict = FlatnessVerdict::Inconclusive;
    result.statement = "the linearization is reachable on window [" +
                       std::to_string(result.best_k0) + ", " + std::to_string(result.best_kf) +
                       "]; reachability is necessary but not sufficient, so no flatness "
                       "verdict follows";
  }
  return result;
}

}  // namespace dtflat
