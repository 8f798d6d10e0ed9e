#include "dtflat/linearize.hpp"

#include <algorithm>
#include <limits>
#include <utility>

#include "dtflat/errors.hpp"
#include "dtflat/linalg.hpp"

namespace dtflat {

namespace {

bool plain_chart_group(VarGroup g) {
  return g == VarGroup::State || g == VarGroup::Input || g == VarGroup::Zeta;
}

// A homogeneity probe: zero out every Delta symbol and evaluate what
// remains at several integer steps. Components of linear objects keep only
// k after the substitution, so a nonzero probe value exposes an affine
// part exactly (all surviving arithmetic is on exact zeros).
const std::int64_t kProbeSteps[] = {0, 1, -1, 7, 97, -53};

void require_homogeneous_linear(const Expr& e, const std::string& what) {
  if (!is_linear_in_delta(e))
    throw Error(what + " must be linear in the Delta coordinates: " + to_string(e));
  Substitution zero;
  for (const VarRef& v : e.variables())
    if (is_delta_group(v.group)) zero.set(v, Expr::integer(0));
  Expr remainder = substitute(e, zero);
  for (std::int64_t k : kProbeSteps) {
    try {
      if (evaluate(remainder, Binding{k, {}}) != 0.0)
        throw Error(what + " has a Delta-free part: " + to_string(remainder));
    } catch (const DivisionNearZeroError&) {
      // A singular probe step carries no homogeneity information.
    }
  }
}

void validate_doubled_chart_var(const DiscreteTimeSystem& sys, const VarRef& v,
                                const std::string& what) {
  const VarGroup base = is_delta_group(v.group) ? base_of(v.group) : v.group;
  switch (base) {
    case VarGroup::State:
      if (v.component < 1 || v.component > sys.n())
        throw Error(what + " references unknown state component " + v.name());
      if (v.shift != 0)
        throw Error(what + " references a shifted state " + v.name() +
                    "; states carry no shift on the extended chart");
      return;
    case VarGroup::Input:
      if (v.component < 1 || v.component > sys.m())
        throw Error(what + " references unknown input component " + v.name());
      if (v.shift < 0)
        throw Error(what + " references a past input " + v.name());
      return;
    case VarGroup::Zeta:
      if (v.component < 1 || v.component > sys.m())
        throw Error(what + " references unknown extension component " + v.name());
      if (v.shift > -1)
        throw Error(what + " references " + v.name() +
                    "; extension history lives strictly in the past");
      return;
    default:
      throw Error(what + " references " + v.name() +
                  ", which is not a doubled-chart coordinate");
  }
}

// Jacobian row of f applied to (dx, du), the replacement for dx_i under the
// doubled forward shift.
Expr state_variation_image(const DiscreteTimeSystem& sys, int i) {
  Expr out;
  for (int s = 1; s <= sys.n(); ++s)
    out = out + sys.df_dx(i, s) * Expr::var(VarRef::state(s).delta());
  for (int j = 1; j <= sys.m(); ++j)
    out = out + sys.df_du(i, j) * Expr::var(VarRef::input(j).delta());
  return out;
}

// Jacobian row of g applied to (dx, du), the replacement for dz_[-1].
Expr zeta_variation_image(const DiscreteTimeSystem& sys, int j) {
  Expr out;
  for (int s = 1; s <= sys.n(); ++s)
    out = out + sys.dg_dx(j, s) * Expr::var(VarRef::state(s).delta());
  for (int l = 1; l <= sys.m(); ++l)
    out = out + sys.dg_du(j, l) * Expr::var(VarRef::input(l).delta());
  return out;
}

// Composes an expression with a closed-form trajectory, leaving Delta
// symbols free. Coefficients become functions of k alone.
Expr along_trajectory(const Trajectory& traj, const Expr& e) {
  return substitute(e, trajectory_substitution(traj, e));
}

// Time-shifts a closed-form signal component by alpha steps.
Expr shifted_component(const Signal& sig, int component, int alpha) {
  Substitution s;
  s.set_time(Expr::time_symbol() + Expr::integer(alpha));
  return substitute(sig.component(component), s);
}

void check_matrix_shape(const std::vector<std::vector<Expr>>& M, int rows, int cols,
                        const char* name) {
  if (static_cast<int>(M.size()) != rows)
    throw Error(std::string(name) + " must have " + std::to_string(rows) + " rows");
  for (const auto& row : M) {
    if (static_cast<int>(row.size()) != cols)
      throw Error(std::string(name) + " rows must have " + std::to_string(cols) + " columns");
    for (const Expr& e : row)
      if (!e.variables().empty())
        throw Error(std::string(name) + " entries may depend on k only: " + to_string(e));
  }
}

void check_tab_shape(const std::vector<Eigen::MatrixXd>& M, int rows, int cols,
                     const char* name) {
  for (const Eigen::MatrixXd& step : M)
    if (step.rows() != rows || step.cols() != cols)
      throw Error(std::string(name) + " steps must be " + std::to_string(rows) + "x" +
                  std::to_string(cols));
}

Eigen::MatrixXd evaluate_matrix(const std::vector<std::vector<Expr>>& M, std::int64_t k) {
  Eigen::MatrixXd out(static_cast<int>(M.size()),
                      M.empty() ? 0 : static_cast<int>(M.front().size()));
  Binding b{k, {}};
  for (int r = 0; r < out.rows(); ++r)
    for (int c = 0; c < out.cols(); ++c) out(r, c) = evaluate(M[r][c], b);
  return out;
}

// Renames every Delta symbol to its plain counterpart, turning linear
// objects into extended-chart functions of the coefficient dynamics.
Expr strip_delta(const Expr& e) {
  Substitution s;
  for (const VarRef& v : e.variables())
    if (is_delta_group(v.group))
      s.set(v, Expr::var(VarRef{base_of(v.group), v.component, v.shift}));
  return substitute(e, s);
}

}  // namespace

LTVSystem LTVSystem::closed_form(int n, int m, std::vector<std::vector<Expr>> A,
                                 std::vector<std::vector<Expr>> B,
                                 std::vector<std::vector<Expr>> dzeta, std::string source) {
  if (n < 1 || m < 1) throw Error("an LTV system needs n >= 1 and m >= 1");
  check_matrix_shape(A, n, n, "A");
  check_matrix_shape(B, n, m, "B");
  check_matrix_shape(dzeta, m, n + m, "dzeta");
  LTVSystem ltv;
  ltv.n_ = n;
  ltv.m_ = m;
  ltv.source_ = std::move(source);
  ltv.A_expr_ = std::move(A);
  ltv.B_expr_ = std::move(B);
  ltv.dzeta_expr_ = std::move(dzeta);
  return ltv;
}

LTVSystem LTVSystem::tabulated(int n, int m, std::int64_t k0, std::vector<Eigen::MatrixXd> A,
                               std::vector<Eigen::MatrixXd> B,
                               std::vector<Eigen::MatrixXd> dzeta, std::string source) {
  if (n < 1 || m < 1) throw Error("an LTV system needs n >= 1 and m >= 1");
  if (A.empty()) throw Error("a tabulated LTV system needs at least one step");
  if (B.size() != A.size() || dzeta.size() != A.size())
    throw Error("tabulated A, B, dzeta must cover the same steps");
  check_tab_shape(A, n, n, "A");
  check_tab_shape(B, n, m, "B");
  check_tab_shape(dzeta, m, n + m, "dzeta");
  LTVSystem ltv;
  ltv.n_ = n;
  ltv.m_ = m;
  ltv.source_ = std::move(source);
  ltv.k0_ = k0;
  ltv.A_tab_ = std::move(A);
  ltv.B_tab_ = std::move(B);
  ltv.dzeta_tab_ = std::move(dzeta);
  return ltv;
}

const Expr& LTVSystem::A(int i, int s) const {
  if (!is_closed_form()) throw Error("tabulated LTV systems have no entry expressions");
  return A_expr_.at(i - 1).at(s - 1);
}

const Expr& LTVSystem::B(int i, int j) const {
  if (!is_closed_form()) throw Error("tabulated LTV systems have no entry expressions");
  return B_expr_.at(i - 1).at(j - 1);
}

const Expr& LTVSystem::dzeta_coeff(int j, int c) const {
  if (!is_closed_form()) throw Error("tabulated LTV systems have no entry expressions");
  return dzeta_expr_.at(j - 1).at(c - 1);
}

Eigen::MatrixXd LTVSystem::A_at(std::int64_t k) const {
  if (is_closed_form()) return evaluate_matrix(A_expr_, k);
  if (!covers(k)) throw Error("step k=" + std::to_string(k) + " is outside the tabulated window");
  return A_tab_.at(static_cast<std::size_t>(k - k0_));
}

Eigen::MatrixXd LTVSystem::B_at(std::int64_t k) const {
  if (is_closed_form()) return evaluate_matrix(B_expr_, k);
  if (!covers(k)) throw Error("step k=" + std::to_string(k) + " is outside the tabulated window");
  return B_tab_.at(static_cast<std::size_t>(k - k0_));
}

Eigen::MatrixXd LTVSystem::dzeta_at(std::int64_t k) const {
  if (is_closed_form()) return evaluate_matrix(dzeta_expr_, k);
  if (!covers(k)) throw Error("step k=" + std::to_string(k) + " is outside the tabulated window");
  return dzeta_tab_.at(static_cast<std::size_t>(k - k0_));
}

std::int64_t LTVSystem::k_first() const {
  return is_closed_form() ? std::numeric_limits<std::int64_t>::min() : k0_;
}

std::int64_t LTVSystem::k_last() const {
  return is_closed_form() ? std::numeric_limits<std::int64_t>::max()
                          : k0_ + static_cast<std::int64_t>(A_tab_.size()) - 1;
}

LinearFlatOutput::LinearFlatOutput(std::vector<Expr> dy) : dy_(std::move(dy)) {
  if (dy_.empty()) throw Error("a linear flat output needs at least one component");
  for (const Expr& e : dy_) {
    for (const VarRef& v : e.variables()) {
      if (v.group != VarGroup::DeltaState && v.group != VarGroup::DeltaInput &&
          v.group != VarGroup::DeltaZeta)
        throw Error("linear flat output components are functions of k and the Delta "
                    "coordinates; found " +
                    v.name());
      if (v.group == VarGroup::DeltaState && v.shift != 0)
        throw Error("linear flat output references a shifted state variation " + v.name());
      if (v.group == VarGroup::DeltaInput && v.shift < 0)
        throw Error("linear flat output references a past input variation " + v.name());
      if (v.group == VarGroup::DeltaZeta && v.shift > -1)
        throw Error("linear flat output references " + v.name() +
                    "; extension variations live strictly in the past");
    }
    require_homogeneous_linear(e, "a linear flat output component");
    q1_ = std::max(q1_, zeta_lag(e));
    q2_ = std::max(q2_, input_lead(e));
  }
  q2_ = std::max(q2_, 0);
}

Expr LinearFlatOutput::coefficient(int j, VarRef delta_var) const {
  return differentiate(component(j), delta_var);
}

LinearParameterization::LinearParameterization(int n, int m, std::vector<int> R,
                                               std::vector<Expr> dx, std::vector<Expr> du)
    : R_(std::move(R)), dx_(std::move(dx)), du_(std::move(du)) {
  if (static_cast<int>(dx_.size()) != n || static_cast<int>(du_.size()) != m)
    throw Error("linear parameterization component counts must match n and m");
  if (static_cast<int>(R_.size()) != m)
    throw Error("linear parameterization needs one shift bound per flat output component");
  for (int r : R_)
    if (r < 1) throw Error("linear parameterization shift bounds must be at least 1");
  auto validate = [&](const Expr& e, bool is_state, int index) {
    const std::string what = std::string(is_state ? "dx" : "du") + std::to_string(index) +
                             " of the linear parameterization";
    for (const VarRef& v : e.variables()) {
      if (v.group != VarGroup::DeltaFlatOut)
        throw Error(what + " must be a function of k and the flat output variations; found " +
                    v.name());
      if (v.component < 1 || v.component > m)
        throw Error(what + " references unknown flat output component " + v.name());
      if (v.shift < 0)
        throw Error(what + " references a backward shift " + v.name() +
                    "; normalize the flat output first (replace each component by its "
                    "highest backward shift so the parameterization uses shifts >= 0)");
      const int bound = is_state ? R_[v.component - 1] - 1 : R_[v.component - 1];
      if (v.shift > bound)
        throw Error(what + " references " + v.name() + " beyond the shift bound " +
                    std::to_string(bound));
    }
    require_homogeneous_linear(e, what);
  };
  for (int i = 1; i <= n; ++i) validate(dx_[i - 1], true, i);
  for (int j = 1; j <= m; ++j) validate(du_[j - 1], false, j);
}

Expr LinearParameterization::x_coefficient(int i, int l, int alpha) const {
  return differentiate(x_component(i), VarRef::flat_out(l, alpha).delta());
}

Expr LinearParameterization::u_coefficient(int j, int l, int alpha) const {
  return differentiate(u_component(j), VarRef::flat_out(l, alpha).delta());
}

DeltaExtendedFunction::DeltaExtendedFunction(const DiscreteTimeSystem& sys, Expr e)
    : expr_(std::move(e)) {
  for (const VarRef& v : expr_.variables())
    validate_doubled_chart_var(sys, v, "a doubled-chart function");
  if (!is_linear_in_delta(expr_))
    throw Error("a doubled-chart function must be linear in the Delta coordinates: " +
                to_string(expr_));
}

Expr lie_linearize(const Expr& h) {
  Expr out;
  for (const VarRef& v : h.variables()) {
    if (!plain_chart_group(v.group))
      throw Error("lie_linearize expects a function of the extended chart; found " + v.name());
    out = out + differentiate(h, v) * Expr::var(v.delta());
  }
  return out;
}

Expr delta_lin_shift(const DiscreteTimeSystem& sys, const Expr& h, int times) {
  if (times < 0) throw Error("delta_lin_shift is a forward shift; times must be >= 0");
  Expr cur = DeltaExtendedFunction(sys, h).expr();
  for (int step = 0; step < times; ++step) {
    Substitution s;
    s.set_time(Expr::time_symbol() + Expr::integer(1));
    for (const VarRef& v : cur.variables()) {
      switch (v.group) {
        case VarGroup::State:
          s.set(v, sys.f(v.component));
          break;
        case VarGroup::Input:
          s.set(v, Expr::var(v.shifted_by(1)));
          break;
        case VarGroup::Zeta:
          s.set(v, v.shift == -1 ? sys.g(v.component) : Expr::var(v.shifted_by(1)));
          break;
        case VarGroup::DeltaState:
          s.set(v, state_variation_image(sys, v.component));
          break;
        case VarGroup::DeltaInput:
          s.set(v, Expr::var(v.shifted_by(1)));
          break;
        case VarGroup::DeltaZeta:
          s.set(v, v.shift == -1 ? zeta_variation_image(sys, v.component)
                                 : Expr::var(v.shifted_by(1)));
          break;
        default:
          throw Error("delta_lin_shift cannot shift " + v.name());
      }
    }
    cur = substitute(cur, s);
  }
  return cur;
}

VerificationReport check_commutation(const DiscreteTimeSystem& sys, const Expr& h,
                                     const SampleDomain& domain, int depth, double tol) {
  if (depth < 1) throw Error("check_commutation needs depth >= 1");
  std::vector<std::pair<Expr, Expr>> pairs;
  Expr shifted = h;
  Expr linearized = delta_lin_shift(sys, lie_linearize(h), 0);
  for (int d = 1; d <= depth; ++d) {
    shifted = forward_shift(sys, shifted);
    linearized = delta_lin_shift(sys, linearized);
    pairs.emplace_back(lie_linearize(shifted), linearized);
  }
  VerificationReport report =
      numeric_equal_all(pairs, domain, tol, "shift-linearize-commutation");
  report.notes.push_back("depth " + std::to_string(depth) +
                         ": linearize(shift^d h) against shift_lin^d(linearize h)");
  return report;
}

LTVSystem linearize_along(const DiscreteTimeSystem& sys, const Trajectory& traj) {
  const int n = sys.n();
  const int m = sys.m();
  if (traj.is_closed_form()) {
    std::vector<std::vector<Expr>> A(n, std::vector<Expr>(n));
    std::vector<std::vector<Expr>> B(n, std::vector<Expr>(m));
    std::vector<std::vector<Expr>> dz(m, std::vector<Expr>(n + m));
    for (int i = 1; i <= n; ++i) {
      for (int s = 1; s <= n; ++s) A[i - 1][s - 1] = along_trajectory(traj, sys.df_dx(i, s));
      for (int j = 1; j <= m; ++j) B[i - 1][j - 1] = along_trajectory(traj, sys.df_du(i, j));
    }
    for (int j = 1; j <= m; ++j) {
      for (int s = 1; s <= n; ++s) dz[j - 1][s - 1] = along_trajectory(traj, sys.dg_dx(j, s));
      for (int l = 1; l <= m; ++l)
        dz[j - 1][n + l - 1] = along_trajectory(traj, sys.dg_du(j, l));
    }
    return LTVSystem::closed_form(n, m, std::move(A), std::move(B), std::move(dz),
                                  "linearize_along");
  }

  const std::int64_t k_first = std::max(traj.x().k_first(), traj.u().k_first());
  const std::int64_t k_last = std::min(traj.x().k_last(), traj.u().k_last());
  if (k_first > k_last) throw Error("trajectory coverage too short to linearize along");
  std::vector<Eigen::MatrixXd> A, B, dz;
  for (std::int64_t k = k_first; k <= k_last; ++k) {
    Binding b{k, {}};
    for (int i = 1; i <= n; ++i) b.values[VarRef::state(i)] = traj.x().component_at(i, k);
    for (int j = 1; j <= m; ++j) b.values[VarRef::input(j)] = traj.u().component_at(j, k);
    Eigen::MatrixXd Ak(n, n), Bk(n, m), dzk(m, n + m);
    for (int i = 1; i <= n; ++i) {
      for (int s = 1; s <= n; ++s) Ak(i - 1, s - 1) = evaluate(sys.df_dx(i, s), b);
      for (int j = 1; j <= m; ++j) Bk(i - 1, j - 1) = evaluate(sys.df_du(i, j), b);
    }
    for (int j = 1; j <= m; ++j) {
      for (int s = 1; s <= n; ++s) dzk(j - 1, s - 1) = evaluate(sys.dg_dx(j, s), b);
      for (int l = 1; l <= m; ++l) dzk(j - 1, n + l - 1) = evaluate(sys.dg_du(j, l), b);
    }
    A.push_back(std::move(Ak));
    B.push_back(std::move(Bk));
    dz.push_back(std::move(dzk));
  }
  return LTVSystem::tabulated(n, m, k_first, std::move(A), std::move(B), std::move(dz),
                              "linearize_along");
}

VerificationReport check_ltv_regularity(const LTVSystem& ltv, KWindow window) {
  VerificationReport report;
  report.check = "ltv-regularity";
  report.tolerance = 1e-9;  // relative singular-value threshold
  const std::int64_t k_first = std::max<std::int64_t>(window.first, ltv.k_first());
  const std::int64_t k_last = std::min<std::int64_t>(window.last, ltv.k_last());
  if (k_first > k_last)
    throw Error("regularity window does not intersect the LTV system's coverage");

  const int n = ltv.n();
  const int m = ltv.m();
  int min_rank = n + m;
  bool pass = true;
  for (std::int64_t k = k_first; k <= k_last; ++k) {
    Eigen::MatrixXd M(n + m, n + m);
    try {
      M.topLeftCorner(n, n) = ltv.A_at(k);
      M.topRightCorner(n, m) = ltv.B_at(k);
      M.bottomRows(m) = ltv.dzeta_at(k);
    } catch (const DivisionNearZeroError&) {
      ++report.samples_skipped;
      continue;
    }
    ++report.samples_evaluated;
    const int rank = numeric_rank(M);
    if (rank < min_rank || report.samples_evaluated == 1) {
      min_rank = std::min(min_rank, rank);
      report.worst_sample =
          "k=" + std::to_string(k) + " rank=" + std::to_string(rank);
    }
    if (rank < n + m) pass = false;
  }
  if (report.samples_evaluated == 0)
    throw AllSamplesSingularError("every step of the regularity window was singular");
  report.pass = pass;
  report.notes.push_back("k window [" + std::to_string(k_first) + ", " +
                         std::to_string(k_last) + "]");
  report.notes.push_back("min rank [A B; dzeta] = " + std::to_string(min_rank) + " (want " +
                         std::to_string(n + m) + ")");
  return report;
}

LinearFlatPair linearize_flat_pair(const DiscreteTimeSystem& sys, const FlatPair& pair,
                                   const Trajectory& traj, KWindow window) {
  if (!traj.is_closed_form())
    throw Error("linearize_flat_pair needs a closed-form trajectory");
  const int n = sys.n();
  const int m = sys.m();
  const std::vector<int>& R = pair.param.R();
  const Signal y = flat_output_trajectory(pair, traj);

  // Composes a coefficient of the nonlinear parameterization with the flat
  // output trajectory, producing a function of k alone.
  auto along_flat_output = [&y](const Expr& e) {
    Substitution s;
    for (const VarRef& v : e.variables()) {
      if (v.group != VarGroup::FlatOut)
        throw Error("parameterization coefficient references " + v.name());
      s.set(v, shifted_component(y, v.component, v.shift));
    }
    return substitute(e, s);
  };

  std::vector<Expr> coefficients;
  std::vector<Expr> dy;
  std::vector<Expr> dx(n), du(m);
  try {
    for (int j = 1; j <= m; ++j) {
      Expr dy_j = along_trajectory(traj, lie_linearize(pair.candidate.phi(j)));
      for (const VarRef& v : dy_j.variables()) coefficients.push_back(differentiate(dy_j, v));
      dy.push_back(std::move(dy_j));
    }

    auto build = [&](const Expr& component, int max_shift_past_R) {
      Expr out;
      for (int l = 1; l <= m; ++l) {
        for (int alpha = 0; alpha <= R[l - 1] - 1 + max_shift_past_R; ++alpha) {
          const VarRef y_var = VarRef::flat_out(l, alpha);
          Expr c = differentiate(component, y_var);
          if (c.is_integer_constant(0)) continue;
          Expr along = along_flat_output(c);
          coefficients.push_back(along);
          out = out + along * Expr::var(y_var.delta());
        }
      }
      return out;
    };
    for (int i = 1; i <= n; ++i) dx[i - 1] = build(pair.param.x_component(i), 0);
    for (int j = 1; j <= m; ++j) du[j - 1] = build(pair.param.u_component(j), 1);
  } catch (const DivisionNearZeroError&) {
    // A denominator folded to the zero constant, so the trajectory sits
    // identically on the singular locus rather than merely touching it.
    throw SingularTrajectoryError(
        "the trajectory sits identically on a parameterization singularity");
  }

  for (std::int64_t k = window.first; k <= window.last; ++k) {
    Binding b{k, {}};
    for (const Expr& c : coefficients) {
      try {
        (void)evaluate(c, b);
      } catch (const DivisionNearZeroError&) {
        throw SingularTrajectoryError(
            "the trajectory meets a parameterization singularity at k=" + std::to_string(k));
      }
    }
  }

  return {LinearFlatOutput(std::move(dy)),
          LinearParameterization(n, m, R, std::move(dx), std::move(du))};
}

VerificationReport verify_linear_pair(const LTVSystem& ltv, const LinearFlatOutput& lfo,
                                      const LinearParameterization& lp,
                                      const SampleDomain& domain, double tol) {
  if (!ltv.is_closed_form())
    throw Error("verify_linear_pair needs closed-form LTV coefficients");
  const int n = ltv.n();
  const int m = ltv.m();
  if (lfo.m() != m || lp.n() != n || lp.m() != m)
    throw Error("linear pair dimensions must match the LTV system");

  // The linear objects are themselves an extended system over the renamed
  // coordinates (dx -> x, du -> u, dzeta -> z, dy -> y), so both defining
  // identities reduce to the nonlinear checks on that system.
  std::vector<Expr> f(n), g(m);
  for (int i = 1; i <= n; ++i) {
    Expr fi;
    for (int s = 1; s <= n; ++s) fi = fi + ltv.A(i, s) * Expr::var(VarRef::state(s));
    for (int j = 1; j <= m; ++j) fi = fi + ltv.B(i, j) * Expr::var(VarRef::input(j));
    f[i - 1] = fi;
  }
  for (int j = 1; j <= m; ++j) {
    Expr gj;
    for (int s = 1; s <= n; ++s) gj = gj + ltv.dzeta_coeff(j, s) * Expr::var(VarRef::state(s));
    for (int l = 1; l <= m; ++l)
      gj = gj + ltv.dzeta_coeff(j, n + l) * Expr::var(VarRef::input(l));
    g[j - 1] = gj;
  }
  DiscreteTimeSystem coeff_sys(n, m, std::move(f), std::move(g));

  std::vector<Expr> phi;
  for (int j = 1; j <= m; ++j) phi.push_back(strip_delta(lfo.component(j)));
  std::vector<Expr> F_x, F_u;
  for (int i = 1; i <= n; ++i) F_x.push_back(strip_delta(lp.x_component(i)));
  for (int j = 1; j <= m; ++j) F_u.push_back(strip_delta(lp.u_component(j)));
  FlatPair pair{FlatOutputCandidate(coeff_sys, std::move(phi)),
                Parameterization(n, m, lp.R(), std::move(F_x), std::move(F_u))};

  VerificationReport a =
      verify_parameterization_identity(coeff_sys, pair.param, domain, tol);
  VerificationReport b = verify_flat_pair(coeff_sys, pair, domain, tol);

  VerificationReport report;
  report.check = "linear-pair-flatness";
  report.pass = a.pass && b.pass;
  report.tolerance = tol;
  report.max_abs = std::max(a.max_abs, b.max_abs);
  report.max_rel = std::max(a.max_rel, b.max_rel);
  report.samples_evaluated = a.samples_evaluated + b.samples_evaluated;
  report.samples_rejected = a.samples_rejected + b.samples_rejected;
  report.samples_skipped = a.samples_skipped + b.samples_skipped;
  report.seed = domain.seed;
  report.worst_sample = b.max_rel >= a.max_rel ? b.worst_sample : a.worst_sample;
  report.notes.push_back("(a) " + a.summary());
  report.notes.push_back("(b) " + b.summary());
  return report;
}

}  // namespace dtflat
