#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "dtflat/expr.hpp"
#include "dtflat/verify.hpp"

namespace dtflat {

struct KWindow {
  std::int64_t first = -10;
  std::int64_t last = 10;
};

// Inverse of the extended map (f, g): recovers (x, u) from (x+, zeta).
// Components are written in the coordinates the backward-shift rule
// substitutes them in: plain state symbols stand for the x+ slot, zeta
// history symbols z<j>_[-1] for the zeta slot, and k is the step the shift
// itself rewrites to k-1.
struct InverseMap {
  std::vector<Expr> x;
  std::vector<Expr> u;
};

// Explicit time-variant dynamics x+ = f(k, x, u) together with a system
// extension zeta = g(k, x, u) chosen so that the stacked Jacobian of (f, g)
// with respect to (x, u) is regular. Construction validates dimensions and
// coordinate usage only; the numeric regularity checks are separate
// operations so programmatically derived systems stay cheap to build.
class DiscreteTimeSystem {
 public:
  DiscreteTimeSystem(int n, int m, std::vector<Expr> f, std::vector<Expr> g,
                     std::optional<InverseMap> psi = std::nullopt);

  [[nodiscard]] int n() const { return n_; }
  [[nodiscard]] int m() const { return m_; }

  // 1-based component accessors.
  [[nodiscard]] const Expr& f(int i) const { return f_.at(i - 1); }
  [[nodiscard]] const Expr& g(int j) const { return g_.at(j - 1); }

  [[nodiscard]] bool has_inverse() const { return psi_.has_value(); }
  // Throws MissingInverseError when no inverse map was provided.
  [[nodiscard]] const InverseMap& psi() const;

  // Cached symbolic Jacobian entries of f and g.
  [[nodiscard]] const Expr& df_dx(int i, int s) const { return df_dx_.at(i - 1).at(s - 1); }
  [[nodiscard]] const Expr& df_du(int i, int j) const { return df_du_.at(i - 1).at(j - 1); }
  [[nodiscard]] const Expr& dg_dx(int j, int s) const { return dg_dx_.at(j - 1).at(s - 1); }
  [[nodiscard]] const Expr& dg_du(int j, int l) const { return dg_du_.at(j - 1).at(l - 1); }

  std::optional<std::pair<Eigen::VectorXd, Eigen::VectorXd>> equilibrium;

 private:
  int n_;
  int m_;
  std::vector<Expr> f_;
  std::vector<Expr> g_;
  std::optional<InverseMap> psi_;
  std::vector<std::vector<Expr>> df_dx_, df_du_, dg_dx_, dg_du_;
};

// Expression over the extended chart (k, z_[-l_z..-1], x, u_[0..l_u]) of a
// concrete system; construction rejects foreign coordinates and
// out-of-range components. The window bounds l_z, l_u are read off the
// expression itself and grow as shifts push symbols outward.
class ExtendedFunction {
 public:
  ExtendedFunction(const DiscreteTimeSystem& sys, Expr e);

  [[nodiscard]] const Expr& expr() const { return expr_; }
  [[nodiscard]] int zeta_lag() const;    // deepest |shift| of zeta history, 0 if none
  [[nodiscard]] int input_lead() const;  // highest input shift, -1 if no inputs

 private:
  Expr expr_;
};

// Largest backward zeta shift magnitude / largest forward input shift
// appearing in an expression (0 and -1 when the group is absent).
[[nodiscard]] int zeta_lag(const Expr& e);
[[nodiscard]] int input_lead(const Expr& e);

// Forward shift: k -> k+1, z_[-1] -> g, z_[-b] -> z_[-b+1] for b >= 2,
// x -> f, u_[a] -> u_[a+1], applied simultaneously. `times` >= 0.
[[nodiscard]] Expr forward_shift(const DiscreteTimeSystem& sys, const Expr& e, int times = 1);

// Backward shift: k -> k-1, z_[-b] -> z_[-b-1], x -> psi_x(k-1, x, z_[-1]),
// u -> psi_u(k-1, x, z_[-1]), u_[a] -> u_[a-1] for a >= 1. Requires the
// inverse map; throws MissingInverseError otherwise. `times` >= 0.
[[nodiscard]] Expr backward_shift(const DiscreteTimeSystem& sys, const Expr& e, int times = 1);

// Signed dispatch: shift(sys, e, -2) == backward_shift(sys, e, 2).
[[nodiscard]] Expr shift(const DiscreteTimeSystem& sys, const Expr& e, int amount);

// Vector-valued time signal, either closed-form expressions in k or
// integer-indexed samples on a contiguous window. Closed-form evaluation at
// integer k prefers the exact rational path and falls back to doubles, so
// integer-polynomial data tabulates exactly.
class Signal {
 public:
  static Signal closed_form(std::vector<Expr> components);
  static Signal tabulated(std::int64_t k0, std::vector<Eigen::VectorXd> samples);

  [[nodiscard]] bool is_closed_form() const { return !components_.empty(); }
  [[nodiscard]] int dim() const;
  [[nodiscard]] Eigen::VectorXd at(std::int64_t k) const;
  [[nodiscard]] double component_at(int i, std::int64_t k) const;  // 1-based

  // Closed-form accessor; throws Error for tabulated signals.
  [[nodiscard]] const Expr& component(int i) const;

  // Coverage window; unbounded for closed forms.
  [[nodiscard]] std::int64_t k_first() const;
  [[nodiscard]] std::int64_t k_last() const;

  [[nodiscard]] bool covers(std::int64_t k) const { return k >= k_first() && k <= k_last(); }

 private:
  friend class Trajectory;  // default-constructs zeta_ before deriving it
  Signal() = default;
  std::vector<Expr> components_;
  std::int64_t k0_ = 0;
  std::vector<Eigen::VectorXd> samples_;
};

// Reference motion of a system: state and input signals of matching storage
// mode, with the extension trajectory zeta(k) = g(k, x(k), u(k)) derived at
// construction. A tabulated input may end one step before the state does
// (a realized plan fixes u only up to k_f - 1).
class Trajectory {
 public:
  Trajectory(const DiscreteTimeSystem& sys, Signal x, Signal u);

  [[nodiscard]] const Signal& x() const { return x_; }
  [[nodiscard]] const Signal& u() const { return u_; }
  [[nodiscard]] const Signal& zeta() const { return zeta_; }
  [[nodiscard]] bool is_closed_form() const { return x_.is_closed_form(); }
  [[nodiscard]] int n() const { return x_.dim(); }
  [[nodiscard]] int m() const { return u_.dim(); }

 private:
  Signal x_;
  Signal u_;
  Signal zeta_;
};

// Substitution sending every extended coordinate of `target` to its
// closed-form value along the trajectory: x -> x(k), u_[a] -> u(k+a)
// componentwise, z_[-b] -> zeta(k-b). Requires a closed-form trajectory.
[[nodiscard]] Substitution trajectory_substitution(const Trajectory& traj, const Expr& target);

// Numeric counterpart at a concrete step, usable for either storage mode.
// Binds exactly the variables of `target`; throws Error when the needed
// samples fall outside a tabulated window.
[[nodiscard]] Binding trajectory_binding(const Trajectory& traj, const Expr& target,
                                         std::int64_t k);

// Rank of the submersivity Jacobian d(f)/d(x,u) at random samples (expected
// n) and of the stacked extension Jacobian d(f,g)/d(x,u) (expected n+m).
// Passes only when both hold at every sample.
[[nodiscard]] VerificationReport check_submersivity(const DiscreteTimeSystem& sys,
                                                    const SampleDomain& domain);

// Verifies psi(k, f(k,x,u), g(k,x,u)) == (x, u) at random samples.
[[nodiscard]] VerificationReport check_inverse(const DiscreteTimeSystem& sys,
                                               const SampleDomain& domain, double tol = 1e-9);

// f(k, x0, u0) == x0 over every integer k in the window.
[[nodiscard]] VerificationReport check_equilibrium(const DiscreteTimeSystem& sys,
                                                   const Eigen::VectorXd& x0,
                                                   const Eigen::VectorXd& u0,
                                                   KWindow window = {-50, 50},
                                                   double tol = 1e-9);

// Residual x(k+1) - f(k, x(k), u(k)) over the window (clipped to coverage
// for tabulated trajectories). Closed-form integer-polynomial trajectories
// are checked exactly; the report notes when the residual is exactly zero.
[[nodiscard]] VerificationReport check_trajectory(const DiscreteTimeSystem& sys,
                                                  const Trajectory& traj,
                                                  std::optional<KWindow> window = std::nullopt,
                                                  double tol = 1e-9);

}  // namespace dtflat
