#pragma once

#include <vector>

#include "dtflat/expr.hpp"
#include "dtflat/system.hpp"
#include "dtflat/verify.hpp"

namespace dtflat {

// Flat-output candidate: m expressions over the extended chart of a
// system. The window bounds q1 (deepest backward zeta shift) and q2
// (highest forward input shift, at least 0) are read off the components.
// Candidates are claims; verify_flat_pair renders the verdict.
class FlatOutputCandidate {
 public:
  FlatOutputCandidate(const DiscreteTimeSystem& sys, std::vector<Expr> phi);

  [[nodiscard]] int m() const { return static_cast<int>(phi_.size()); }
  [[nodiscard]] const Expr& phi(int j) const { return phi_.at(j - 1); }  // 1-based
  [[nodiscard]] const std::vector<Expr>& components() const { return phi_; }
  [[nodiscard]] int q1() const { return q1_; }
  [[nodiscard]] int q2() const { return q2_; }

 private:
  std::vector<Expr> phi_;
  int q1_ = 0;
  int q2_ = 0;
};

// Parameterization of states and inputs by forward shifts of the flat
// output: x = F_x(k, y, ..., y_[R-1]), u = F_u(k, y, ..., y_[R]) with a
// per-component shift bound R = (r^1, ..., r^m). Construction enforces the
// reference windows; negative y-shifts are rejected with a pointer to the
// forward-shift normalization.
class Parameterization {
 public:
  Parameterization(int n, int m, std::vector<int> R, std::vector<Expr> F_x,
                   std::vector<Expr> F_u);

  [[nodiscard]] int n() const { return static_cast<int>(F_x_.size()); }
  [[nodiscard]] int m() const { return static_cast<int>(F_u_.size()); }
  [[nodiscard]] const std::vector<int>& R() const { return R_; }
  [[nodiscard]] int r() const;  // max over R

  // 1-based component accessors.
  [[nodiscard]] const Expr& x_component(int i) const { return F_x_.at(i - 1); }
  [[nodiscard]] const Expr& u_component(int j) const { return F_u_.at(j - 1); }

 private:
  std::vector<int> R_;
  std::vector<Expr> F_x_;
  std::vector<Expr> F_u_;
};

// A candidate together with its parameterization. Construction checks only
// that the flat-output dimensions agree; the numeric identities are
// established by the verify operations below.
struct FlatPair {
  FlatPair(FlatOutputCandidate candidate, Parameterization param);

  FlatOutputCandidate candidate;
  Parameterization param;
};

// Pure relabeling shift on flat-output coordinates: k -> k+times,
// y_[a] -> y_[a+times] (and likewise for Delta-y symbols). Rejects
// expressions referencing any other coordinate group.
[[nodiscard]] Expr flat_shift(const Expr& e, int times = 1);

// Substitution sending each flat-output reference y^j_[a] of `target` to
// the a-fold forward shift of phi^j. Negative a falls back to backward
// shifts and so requires the system inverse.
[[nodiscard]] Substitution flat_output_jet(const DiscreteTimeSystem& sys,
                                           const FlatOutputCandidate& candidate,
                                           const Expr& target);

// Checks the shift-consistency identity of a parameterization alone:
// relabeling y-shifts in F_x one step up must equal f composed with
// (F_x, F_u), over random y-jet samples.
[[nodiscard]] VerificationReport verify_parameterization_identity(const DiscreteTimeSystem& sys,
                                                                  const Parameterization& param,
                                                                  const SampleDomain& domain,
                                                                  double tol = 1e-9);

// Checks the defining identities x = F_x(k, phi-jet), u = F_u(k, phi-jet)
// on the extended chart. Domain exclusions written in y coordinates are
// rewritten through the jet substitution before sampling.
[[nodiscard]] VerificationReport verify_flat_pair(const DiscreteTimeSystem& sys,
                                                  const FlatPair& pair,
                                                  const SampleDomain& domain, double tol = 1e-8);

// Numeric rank of the Jacobian of (F_x, F_u) with respect to the full y-jet
// (expected n+m) and of F_x with respect to the jet up to R-1 (expected n).
// Samples whose Jacobian entries exceed an internal magnitude guard count
// as skipped: so close to a parameterization singularity the rank decision
// would be dominated by roundoff. Notes carry singular values per sample.
[[nodiscard]] VerificationReport check_rank_conditions(const Parameterization& param,
                                                       const SampleDomain& domain);

// Flat-output signal y(k) = phi(k, zeta(k-q1..k-1), x(k), u(k..k+q2)) along
// a trajectory; closed-form in, closed-form out. Tabulated trajectories
// yield the largest window the coverage supports.
[[nodiscard]] Signal flat_output_trajectory(const FlatPair& pair, const Trajectory& traj);

}  // namespace dtflat
