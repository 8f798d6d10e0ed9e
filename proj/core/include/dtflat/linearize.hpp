#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "dtflat/expr.hpp"
#include "dtflat/flatness.hpp"
#include "dtflat/system.hpp"
#include "dtflat/verify.hpp"

namespace dtflat {

// Linear time-varying dynamics dx+ = A(k) dx + B(k) du together with the
// extension coefficients for dzeta = dzeta_coeff(k) * (dx, du). Closed-form
// storage keeps entries as expressions in k alone; tabulated storage keeps
// per-step matrices on a contiguous window.
class LTVSystem {
 public:
  static LTVSystem closed_form(int n, int m, std::vector<std::vector<Expr>> A,
                               std::vector<std::vector<Expr>> B,
                               std::vector<std::vector<Expr>> dzeta, std::string source = "");
  static LTVSystem tabulated(int n, int m, std::int64_t k0, std::vector<Eigen::MatrixXd> A,
                             std::vector<Eigen::MatrixXd> B,
                             std::vector<Eigen::MatrixXd> dzeta, std::string source = "");

  [[nodiscard]] bool is_closed_form() const { return !A_expr_.empty(); }
  [[nodiscard]] int n() const { return n_; }
  [[nodiscard]] int m() const { return m_; }
  [[nodiscard]] const std::string& source() const { return source_; }

  // Closed-form entry accessors, 1-based; throw Error for tabulated systems.
  [[nodiscard]] const Expr& A(int i, int s) const;
  [[nodiscard]] const Expr& B(int i, int j) const;
  [[nodiscard]] const Expr& dzeta_coeff(int j, int c) const;  // c over (dx, du)

  [[nodiscard]] Eigen::MatrixXd A_at(std::int64_t k) const;
  [[nodiscard]] Eigen::MatrixXd B_at(std::int64_t k) const;
  [[nodiscard]] Eigen::MatrixXd dzeta_at(std::int64_t k) const;

  // Step coverage; unbounded for closed forms.
  [[nodiscard]] std::int64_t k_first() const;
  [[nodiscard]] std::int64_t k_last() const;
  [[nodiscard]] bool covers(std::int64_t k) const { return k >= k_first() && k <= k_last(); }

 private:
  LTVSystem() = default;
  int n_ = 0;
  int m_ = 0;
  std::string source_;
  std::vector<std::vector<Expr>> A_expr_, B_expr_, dzeta_expr_;
  std::int64_t k0_ = 0;
  std::vector<Eigen::MatrixXd> A_tab_, B_tab_, dzeta_tab_;
};

// Linear flat-output candidate for an LTV system: m expressions that are
// homogeneous linear in the Delta coordinates (dzeta history, dx, du jet)
// with coefficients depending on k alone.
class LinearFlatOutput {
 public:
  explicit LinearFlatOutput(std::vector<Expr> dy);

  [[nodiscard]] int m() const { return static_cast<int>(dy_.size()); }
  [[nodiscard]] const Expr& component(int j) const { return dy_.at(j - 1); }  // 1-based
  [[nodiscard]] const std::vector<Expr>& components() const { return dy_; }
  [[nodiscard]] int q1() const { return q1_; }
  [[nodiscard]] int q2() const { return q2_; }

  // Coefficient function of k multiplying one Delta coordinate.
  [[nodiscard]] Expr coefficient(int j, VarRef delta_var) const;

 private:
  std::vector<Expr> dy_;
  int q1_ = 0;
  int q2_ = 0;
};

// Linear parameterization dx = sum F_x(k) dy-jet, du = sum F_u(k) dy-jet
// with the same per-component shift bounds R as its nonlinear source:
// x-components stop below R, u-components at R.
class LinearParameterization {
 public:
  LinearParameterization(int n, int m, std::vector<int> R, std::vector<Expr> dx,
                         std::vector<Expr> du);

  [[nodiscard]] int n() const { return static_cast<int>(dx_.size()); }
  [[nodiscard]] int m() const { return static_cast<int>(du_.size()); }
  [[nodiscard]] const std::vector<int>& R() const { return R_; }

  [[nodiscard]] const Expr& x_component(int i) const { return dx_.at(i - 1); }  // 1-based
  [[nodiscard]] const Expr& u_component(int j) const { return du_.at(j - 1); }

  // Coefficient functions of k: x_coefficient(i, l, a) multiplies dy^l_[a].
  [[nodiscard]] Expr x_coefficient(int i, int l, int alpha) const;
  [[nodiscard]] Expr u_coefficient(int j, int l, int alpha) const;

 private:
  std::vector<int> R_;
  std::vector<Expr> dx_;
  std::vector<Expr> du_;
};

// Expression over the doubled chart (k, zeta-jet, x, u-jet, and their Delta
// counterparts), at most degree 1 in the Delta coordinates. Outputs of
// lie_linearize and delta_lin_shift live here.
class DeltaExtendedFunction {
 public:
  DeltaExtendedFunction(const DiscreteTimeSystem& sys, Expr e);

  [[nodiscard]] const Expr& expr() const { return expr_; }

 private:
  Expr expr_;
};

// Lie derivative along the linearization vector field: replaces h by
// sum over extended coordinates v of (d h / d v) * Delta-v. The result is
// homogeneous linear in the Delta coordinates; nonlinear placeholders stay.
[[nodiscard]] Expr lie_linearize(const Expr& h);

// Forward shift on the doubled chart: nonlinear placeholders shift like
// forward_shift; dzeta_[-1] and dx are replaced by the Jacobian rows of g
// and f applied to (dx, du); deeper dzeta history and the du jet relabel.
[[nodiscard]] Expr delta_lin_shift(const DiscreteTimeSystem& sys, const Expr& h, int times = 1);

// Checks that linearizing the shifted function equals shifting the
// linearized function, for shift counts 1..depth, on random doubled-chart
// samples.
[[nodiscard]] VerificationReport check_commutation(const DiscreteTimeSystem& sys, const Expr& h,
                                                   const SampleDomain& domain, int depth = 4,
                                                   double tol = 1e-9);

// Jacobians of f and g along a trajectory. Closed-form trajectories give
// closed-form entries in k (exact for integer-polynomial data); tabulated
// trajectories give per-step matrices on the covered window.
[[nodiscard]] LTVSystem linearize_along(const DiscreteTimeSystem& sys, const Trajectory& traj);

// Regularity of the stacked (n+m)x(n+m) matrix [A B; dzeta_coeff] at every
// integer step of the window (clipped to coverage for tabulated systems).
[[nodiscard]] VerificationReport check_ltv_regularity(const LTVSystem& ltv,
                                                      KWindow window = {-10, 10});

// Linearization of a flat pair along a closed-form trajectory: the linear
// flat output L(phi)|traj and the linear parameterization whose
// coefficients are the partials of F composed with the flat-output
// trajectory. Throws SingularTrajectoryError when a coefficient hits a
// parameterization singularity on the window.
struct LinearFlatPair {
  LinearFlatOutput output;
  LinearParameterization param;
};
[[nodiscard]] LinearFlatPair linearize_flat_pair(const DiscreteTimeSystem& sys,
                                                 const FlatPair& pair, const Trajectory& traj,
                                                 KWindow window = {-10, 10});

// Flatness of the linear pair for the LTV dynamics, via the machinery for
// nonlinear systems over renamed coordinates: (a) the shift-consistency
// identity of the linear parameterization, (b) the defining identity that
// substituting shifts of the linear flat output into the parameterization
// returns dx and du. Both verdicts are merged; notes carry each summary.
[[nodiscard]] VerificationReport verify_linear_pair(const LTVSystem& ltv,
                                                    const LinearFlatOutput& lfo,
                                                    const LinearParameterization& lp,
                                                    const SampleDomain& domain,
                                                    double tol = 1e-9);

}  // namespace dtflat
