#include "dtflat/system.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dtflat/errors.hpp"
#include "dtflat/linalg.hpp"

namespace dtflat {

namespace {

std::string describe(VarRef v) { return "'" + v.name() + "'"; }

// f and g live on the plain chart (k, x, u) with no shifts.
void validate_transition_expr(const Expr& e, int n, int m, const std::string& what) {
  for (VarRef v : e.variables()) {
    switch (v.group) {
      case VarGroup::State:
        if (v.component > n)
          throw Error(what + " references " + describe(v) + " beyond state dimension " +
                      std::to_string(n));
        break;
      case VarGroup::Input:
        if (v.component > m)
          throw Error(what + " references " + describe(v) + " beyond input dimension " +
                      std::to_string(m));
        if (v.shift != 0)
          throw Error(what + " references shifted input " + describe(v) +
                      "; transition maps use unshifted coordinates");
        break;
      default:
        throw Error(what + " references " + describe(v) +
                    " which is not a system coordinate");
    }
  }
}

// Inverse components use states for the x+ slot and z_[-1] for the zeta slot.
void validate_inverse_expr(const Expr& e, int n, int m, const std::string& what) {
  for (VarRef v : e.variables()) {
    switch (v.group) {
      case VarGroup::State:
        if (v.component > n)
          throw Error(what + " references " + describe(v) + " beyond state dimension " +
                      std::to_string(n));
        break;
      case VarGroup::Zeta:
        if (v.component > m)
          throw Error(what + " references " + describe(v) + " beyond extension dimension " +
                      std::to_string(m));
        if (v.shift != -1)
          throw Error(what + " references " + describe(v) +
                      "; inverse maps read the extension only at shift -1");
        break;
      default:
        throw Error(what + " references " + describe(v) +
                    " which is not an inverse-map coordinate");
    }
  }
}

void validate_extended_expr(const Expr& e, int n, int m, const std::string& what) {
  for (VarRef v : e.variables()) {
    switch (v.group) {
      case VarGroup::State:
        if (v.component > n)
          throw Error(what + " references " + describe(v) + " beyond state dimension " +
                      std::to_string(n));
        break;
      case VarGroup::Input:
        if (v.component > m)
          throw Error(what + " references " + describe(v) + " beyond input dimension " +
                      std::to_string(m));
        break;
      case VarGroup::Zeta:
        if (v.component > m)
          throw Error(what + " references " + describe(v) + " beyond extension dimension " +
                      std::to_string(m));
        break;
      default:
        throw Error(what + " references " + describe(v) +
                    " which is not an extended-chart coordinate");
    }
  }
}

}  // namespace

DiscreteTimeSystem::DiscreteTimeSystem(int n, int m, std::vector<Expr> f, std::vector<Expr> g,
                                       std::optional<InverseMap> psi)
    : n_(n), m_(m), f_(std::move(f)), g_(std::move(g)), psi_(std::move(psi)) {
  if (n_ < 1 || m_ < 1) throw Error("system dimensions must be positive");
  if (static_cast<int>(f_.size()) != n_)
    throw Error("expected " + std::to_string(n_) + " transition components, got " +
                std::to_string(f_.size()));
  if (static_cast<int>(g_.size()) != m_)
    throw Error("expected " + std::to_string(m_) + " extension components, got " +
                std::to_string(g_.size()));
  for (int i = 1; i <= n_; ++i)
    validate_transition_expr(f_[i - 1], n_, m_, "f." + std::to_string(i));
  for (int j = 1; j <= m_; ++j)
    validate_transition_expr(g_[j - 1], n_, m_, "g." + std::to_string(j));
  if (psi_) {
    if (static_cast<int>(psi_->x.size()) != n_ || static_cast<int>(psi_->u.size()) != m_)
      throw Error("inverse map has wrong component counts");
    for (int i = 1; i <= n_; ++i)
      validate_inverse_expr(psi_->x[i - 1], n_, m_, "psi.x." + std::to_string(i));
    for (int j = 1; j <= m_; ++j)
      validate_inverse_expr(psi_->u[j - 1], n_, m_, "psi.u." + std::to_string(j));
  }

  df_dx_.resize(n_);
  df_du_.resize(n_);
  for (int i = 0; i < n_; ++i) {
    for (int s = 1; s <= n_; ++s) df_dx_[i].push_back(differentiate(f_[i], VarRef::state(s)));
    for (int j = 1; j <= m_; ++j) df_du_[i].push_back(differentiate(f_[i], VarRef::input(j)));
  }
  dg_dx_.resize(m_);
  dg_du_.resize(m_);
  for (int j = 0; j < m_; ++j) {
    for (int s = 1; s <= n_; ++s) dg_dx_[j].push_back(differentiate(g_[j], VarRef::state(s)));
    for (int l = 1; l <= m_; ++l) dg_du_[j].push_back(differentiate(g_[j], VarRef::input(l)));
  }
}

const InverseMap& DiscreteTimeSystem::psi() const {
  if (!psi_)
    throw MissingInverseError("system has no inverse map; backward shifts are unavailable");
  return *psi_;
}

ExtendedFunction::ExtendedFunction(const DiscreteTimeSystem& sys, Expr e) : expr_(std::move(e)) {
  validate_extended_expr(expr_, sys.n(), sys.m(), "extended function");
}

int ExtendedFunction::zeta_lag() const { return dtflat::zeta_lag(expr_); }
int ExtendedFunction::input_lead() const { return dtflat::input_lead(expr_); }

int zeta_lag(const Expr& e) {
  int lag = 0;
  for (VarRef v : e.variables())
    if (v.group == VarGroup::Zeta || v.group == VarGroup::DeltaZeta)
      lag = std::max(lag, -v.shift);
  return lag;
}

int input_lead(const Expr& e) {
  int lead = -1;
  for (VarRef v : e.variables())
    if (v.group == VarGroup::Input || v.group == VarGroup::DeltaInput)
      lead = std::max(lead, v.shift);
  return lead;
}

Expr forward_shift(const DiscreteTimeSystem& sys, const Expr& e, int times) {
  if (times < 0) throw Error("forward_shift requires times >= 0");
  Expr out = e;
  for (int step = 0; step < times; ++step) {
    validate_extended_expr(out, sys.n(), sys.m(), "forward_shift argument");
    Substitution s;
    s.set_time(Expr::time_symbol() + Expr::integer(1));
    for (VarRef v : out.variables()) {
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
        default:
          break;
      }
    }
    out = substitute(out, s);
  }
  return out;
}

Expr backward_shift(const DiscreteTimeSystem& sys, const Expr& e, int times) {
  if (times < 0) throw Error("backward_shift requires times >= 0");
  const InverseMap& psi = sys.psi();

  // The rule reads the inverse at step k-1; pre-shift its time argument once.
  Substitution to_prev;
  to_prev.set_time(Expr::time_symbol() - Expr::integer(1));
  std::vector<Expr> psi_x, psi_u;
  psi_x.reserve(psi.x.size());
  psi_u.reserve(psi.u.size());
  for (const Expr& c : psi.x) psi_x.push_back(substitute(c, to_prev));
  for (const Expr& c : psi.u) psi_u.push_back(substitute(c, to_prev));

  Expr out = e;
  for (int step = 0; step < times; ++step) {
    validate_extended_expr(out, sys.n(), sys.m(), "backward_shift argument");
    Substitution s;
    s.set_time(Expr::time_symbol() - Expr::integer(1));
    for (VarRef v : out.variables()) {
      switch (v.group) {
        case VarGroup::State:
          s.set(v, psi_x[v.component - 1]);
          break;
        case VarGroup::Input:
          s.set(v, v.shift == 0 ? psi_u[v.component - 1] : Expr::var(v.shifted_by(-1)));
          break;
        case VarGroup::Zeta:
          s.set(v, Expr::var(v.shifted_by(-1)));
          break;
        default:
          break;
      }
    }
    out = substitute(out, s);
  }
  return out;
}

Expr shift(const DiscreteTimeSystem& sys, const Expr& e, int amount) {
  return amount >= 0 ? forward_shift(sys, e, amount) : backward_shift(sys, e, -amount);
}

// ---------------------------------------------------------------------------
// Signals and trajectories

Signal Signal::closed_form(std::vector<Expr> components) {
  if (components.empty()) throw Error("closed-form signal needs at least one component");
  for (const Expr& c : components)
    if (!c.variables().empty())
      throw Error("closed-form trajectory component '" + to_string(c) +
                  "' must depend on k only");
  Signal s;
  s.components_ = std::move(components);
  return s;
}

Signal Signal::tabulated(std::int64_t k0, std::vector<Eigen::VectorXd> samples) {
  if (samples.empty()) throw Error("tabulated signal needs at least one sample");
  const auto dim = samples.front().size();
  if (dim < 1) throw Error("tabulated signal needs at least one component");
  for (const auto& v : samples)
    if (v.size() != dim) throw Error("tabulated signal has ragged sample dimensions");
  Signal s;
  s.k0_ = k0;
  s.samples_ = std::move(samples);
  return s;
}

int Signal::dim() const {
  return is_closed_form() ? static_cast<int>(components_.size())
                          : static_cast<int>(samples_.front().size());
}

double Signal::component_at(int i, std::int64_t k) const {
  if (is_closed_form()) {
    const Expr& c = components_.at(i - 1);
    ExactBinding eb;
    eb.k = k;
    if (auto exact = evaluate_exact(c, eb)) return exact->to_double();
    Binding b;
    b.k = k;
    return evaluate(c, b);
  }
  if (!covers(k))
    throw Error("tabulated signal not defined at k=" + std::to_string(k) +
                " (coverage [" + std::to_string(k_first()) + ", " + std::to_string(k_last()) +
                "])");
  return samples_[static_cast<std::size_t>(k - k0_)](i - 1);
}

Eigen::VectorXd Signal::at(std::int64_t k) const {
  Eigen::VectorXd out(dim());
  for (int i = 1; i <= dim(); ++i) out(i - 1) = component_at(i, k);
  return out;
}

const Expr& Signal::component(int i) const {
  if (!is_closed_form()) throw Error("tabulated signal has no closed-form components");
  return components_.at(i - 1);
}

std::int64_t Signal::k_first() const {
  return is_closed_form() ? std::numeric_limits<std::int64_t>::min() : k0_;
}

std::int64_t Signal::k_last() const {
  return is_closed_form() ? std::numeric_limits<std::int64_t>::max()
                          : k0_ + static_cast<std::int64_t>(samples_.size()) - 1;
}

Trajectory::Trajectory(const DiscreteTimeSystem& sys, Signal x, Signal u)
    : x_(std::move(x)), u_(std::move(u)) {
  if (x_.dim() != sys.n())
    throw Error("trajectory state dimension " + std::to_string(x_.dim()) +
                " does not match system n=" + std::to_string(sys.n()));
  if (u_.dim() != sys.m())
    throw Error("trajectory input dimension " + std::to_string(u_.dim()) +
                " does not match system m=" + std::to_string(sys.m()));
  if (x_.is_closed_form() != u_.is_closed_form())
    throw Error("trajectory state and input must share a storage mode");

  if (x_.is_closed_form()) {
    std::vector<Expr> zeta;
    for (int j = 1; j <= sys.m(); ++j) {
      Substitution s;
      for (int i = 1; i <= sys.n(); ++i) s.set(VarRef::state(i), x_.component(i));
      for (int l = 1; l <= sys.m(); ++l) s.set(VarRef::input(l), u_.component(l));
      zeta.push_back(substitute(sys.g(j), s));
    }
    zeta_ = Signal::closed_form(std::move(zeta));
  } else {
    std::int64_t first = std::max(x_.k_first(), u_.k_first());
    std::int64_t last = std::min(x_.k_last(), u_.k_last());
    if (first > last) throw Error("trajectory state and input windows do not overlap");
    std::vector<Eigen::VectorXd> zeta;
    for (std::int64_t k = first; k <= last; ++k) {
      Binding b;
      b.k = k;
      for (int i = 1; i <= sys.n(); ++i) b.values[VarRef::state(i)] = x_.component_at(i, k);
      for (int l = 1; l <= sys.m(); ++l) b.values[VarRef::input(l)] = u_.component_at(l, k);
      Eigen::VectorXd z(sys.m());
      for (int j = 1; j <= sys.m(); ++j) z(j - 1) = evaluate(sys.g(j), b);
      zeta.push_back(std::move(z));
    }
    zeta_ = Signal::tabulated(first, std::move(zeta));
  }
}

Substitution trajectory_substitution(const Trajectory& traj, const Expr& target) {
  if (!traj.is_closed_form())
    throw Error("trajectory substitution requires a closed-form trajectory");
  Substitution s;
  for (VarRef v : target.variables()) {
    Substitution time_shift;
    time_shift.set_time(Expr::time_symbol() + Expr::integer(v.shift));
    switch (v.group) {
      case VarGroup::State:
        s.set(v, traj.x().component(v.component));
        break;
      case VarGroup::Input:
        s.set(v, substitute(traj.u().component(v.component), time_shift));
        break;
      case VarGroup::Zeta:
        s.set(v, substitute(traj.zeta().component(v.component), time_shift));
        break;
      default:
        break;  // delta coordinates stay free
    }
  }
  return s;
}

Binding trajectory_binding(const Trajectory& traj, const Expr& target, std::int64_t k) {
  Binding b;
  b.k = k;
  for (VarRef v : target.variables()) {
    switch (v.group) {
      case VarGroup::State:
        b.values[v] = traj.x().component_at(v.component, k);
        break;
      case VarGroup::Input:
        b.values[v] = traj.u().component_at(v.component, k + v.shift);
        break;
      case VarGroup::Zeta:
        b.values[v] = traj.zeta().component_at(v.component, k + v.shift);
        break;
      default:
        break;
    }
  }
  return b;
}

// ---------------------------------------------------------------------------
// Checks

namespace {

std::set<VarRef> chart_vars(const DiscreteTimeSystem& sys) {
  std::set<VarRef> vars;
  for (int i = 1; i <= sys.n(); ++i) vars.insert(VarRef::state(i));
  for (int j = 1; j <= sys.m(); ++j) vars.insert(VarRef::input(j));
  return vars;
}

}  // namespace

VerificationReport check_submersivity(const DiscreteTimeSystem& sys, const SampleDomain& domain) {
  VerificationReport report;
  report.check = "submersivity";
  report.tolerance = 1e-9;  // relative singular-value threshold
  report.seed = domain.seed;

  const int n = sys.n();
  const int m = sys.m();
  Sampler sampler(domain, chart_vars(sys));
  int min_rank_f = n;
  int min_rank_fg = n + m;
  Eigen::VectorXd worst_sv;
  bool pass = true;

  const long max_attempts = std::max(50L * domain.samples, 1000L);
  long attempts = 0;
  while (report.samples_evaluated < domain.samples && attempts < max_attempts) {
    ++attempts;
    Binding b = sampler.draw();
    if (sampler.excluded(b)) {
      ++report.samples_rejected;
      continue;
    }
    Eigen::MatrixXd J(n + m, n + m);
    try {
      for (int i = 1; i <= n; ++i) {
        for (int s = 1; s <= n; ++s) J(i - 1, s - 1) = evaluate(sys.df_dx(i, s), b);
        for (int j = 1; j <= m; ++j) J(i - 1, n + j - 1) = evaluate(sys.df_du(i, j), b);
      }
      for (int j = 1; j <= m; ++j) {
        for (int s = 1; s <= n; ++s) J(n + j - 1, s - 1) = evaluate(sys.dg_dx(j, s), b);
        for (int l = 1; l <= m; ++l) J(n + j - 1, n + l - 1) = evaluate(sys.dg_du(j, l), b);
      }
    } catch (const DivisionNearZeroError&) {
      ++report.samples_skipped;
      continue;
    }
    ++report.samples_evaluated;

    Eigen::VectorXd sv;
    int rank_f = numeric_rank(J.topRows(n), 1e-9, &sv);
    int rank_fg = numeric_rank(J, 1e-9);
    if (rank_f < min_rank_f || report.samples_evaluated == 1) worst_sv = sv;
    min_rank_f = std::min(min_rank_f, rank_f);
    min_rank_fg = std::min(min_rank_fg, rank_fg);
    if ((rank_f < n || rank_fg < n + m) && pass) {
      pass = false;
      report.worst_sample = Sampler::render(b);
    }
  }

  if (report.samples_evaluated == 0)
    throw AllSamplesSingularError("submersivity check: no evaluable samples");
  if (report.samples_evaluated < domain.samples)
    report.notes.push_back("only " + std::to_string(report.samples_evaluated) + " of " +
                           std::to_string(domain.samples) + " requested samples evaluated");

  report.pass = pass;
  report.notes.push_back("min rank d(f)/d(x,u) = " + std::to_string(min_rank_f) + " (want " +
                         std::to_string(n) + ")");
  report.notes.push_back("min rank d(f,g)/d(x,u) = " + std::to_string(min_rank_fg) + " (want " +
                         std::to_string(n + m) + ")");
  std::string sv_text = "state-input Jacobian singular values:";
  for (int i = 0; i < worst_sv.size(); ++i) sv_text += ' ' + format_double(worst_sv(i));
  report.notes.push_back(sv_text);
  return report;
}

VerificationReport check_inverse(const DiscreteTimeSystem& sys, const SampleDomain& domain,
                                 double tol) {
  const InverseMap& psi = sys.psi();
  const int n = sys.n();
  const int m = sys.m();

  VerificationReport report;
  report.check = "inverse-of-extension";
  report.tolerance = tol;
  report.seed = domain.seed;

  Sampler sampler(domain, chart_vars(sys));
  const long max_attempts = std::max(50L * domain.samples, 1000L);
  long attempts = 0;
  while (report.samples_evaluated < domain.samples && attempts < max_attempts) {
    ++attempts;
    Binding b = sampler.draw();
    if (sampler.excluded(b)) {
      ++report.samples_rejected;
      continue;
    }
    try {
      Binding image;
      image.k = b.k;
      for (int i = 1; i <= n; ++i) image.values[VarRef::state(i)] = evaluate(sys.f(i), b);
      for (int j = 1; j <= m; ++j)
        image.values[VarRef::zeta(j, -1)] = evaluate(sys.g(j), b);

      double sample_rel = 0.0;
      double sample_abs = 0.0;
      auto track = [&](double got, double want) {
        sample_abs = std::max(sample_abs, std::abs(got - want));
        sample_rel = std::max(sample_rel, relative_deviation(got, want));
      };
      for (int i = 1; i <= n; ++i)
        track(evaluate(psi.x[i - 1], image), b.values[VarRef::state(i)]);
      for (int j = 1; j <= m; ++j)
        track(evaluate(psi.u[j - 1], image), b.values[VarRef::input(j)]);

      ++report.samples_evaluated;
      if (report.samples_evaluated == 1 || sample_rel > report.max_rel) {
        report.max_rel = sample_rel;
        report.worst_sample = Sampler::render(b);
      }
      report.max_abs = std::max(report.max_abs, sample_abs);
    } catch (const DivisionNearZeroError&) {
      ++report.samples_skipped;
    }
  }

  if (report.samples_evaluated == 0)
    throw AllSamplesSingularError("inverse check: no evaluable samples");
  if (report.samples_evaluated < domain.samples)
    report.notes.push_back("only " + std::to_string(report.samples_evaluated) + " of " +
                           std::to_string(domain.samples) + " requested samples evaluated");
  report.pass = report.max_rel < tol;
  return report;
}

VerificationReport check_equilibrium(const DiscreteTimeSystem& sys, const Eigen::VectorXd& x0,
                                     const Eigen::VectorXd& u0, KWindow window, double tol) {
  if (x0.size() != sys.n() || u0.size() != sys.m())
    throw Error("equilibrium candidate has wrong dimensions");

  VerificationReport report;
  report.check = "equilibrium";
  report.tolerance = tol;

  Binding b;
  for (int i = 1; i <= sys.n(); ++i) b.values[VarRef::state(i)] = x0(i - 1);
  for (int j = 1; j <= sys.m(); ++j) b.values[VarRef::input(j)] = u0(j - 1);

  for (std::int64_t k = window.first; k <= window.last; ++k) {
    b.k = k;
    double sample_rel = 0.0;
    double sample_abs = 0.0;
    for (int i = 1; i <= sys.n(); ++i) {
      double next = evaluate(sys.f(i), b);
      sample_abs = std::max(sample_abs, std::abs(next - x0(i - 1)));
      sample_rel = std::max(sample_rel, relative_deviation(next, x0(i - 1)));
    }
    ++report.samples_evaluated;
    if (report.samples_evaluated == 1 || sample_rel > report.max_rel) {
      report.max_rel = sample_rel;
      report.worst_sample = "k=" + std::to_string(k);
    }
    report.max_abs = std::max(report.max_abs, sample_abs);
  }
  report.notes.push_back("k window [" + std::to_string(window.first) + ", " +
                         std::to_string(window.last) + "]");
  report.pass = report.max_rel < tol;
  return report;
}

VerificationReport check_trajectory(const DiscreteTimeSystem& sys, const Trajectory& traj,
                                    std::optional<KWindow> window, double tol) {
  KWindow w = window.value_or(KWindow{-10, 10});
  if (!traj.is_closed_form()) {
    // Steps needing x(k+1) and u(k) both inside coverage.
    std::int64_t first = std::max(traj.x().k_first(), traj.u().k_first());
    std::int64_t last = std::min(traj.x().k_last() - 1, traj.u().k_last());
    if (window) {
      first = std::max(first, window->first);
      last = std::min(last, window->last);
    }
    w = {first, last};
    if (first > last) throw Error("trajectory window is empty");
  }

  VerificationReport report;
  report.check = "trajectory-residual";
  report.tolerance = tol;

  bool all_exact = traj.is_closed_form();
  for (std::int64_t k = w.first; k <= w.last; ++k) {
    double sample_rel = 0.0;
    double sample_abs = 0.0;
    for (int i = 1; i <= sys.n(); ++i) {
      double lhs = traj.x().component_at(i, k + 1);
      double rhs = 0.0;
      bool exact_step = false;
      if (traj.is_closed_form()) {
        // Exact residual where the whole composition stays rational.
        Substitution s = trajectory_substitution(traj, sys.f(i));
        Expr composed = substitute(sys.f(i), s);
        ExactBinding eb;
        eb.k = k;
        Expr next = substitute(traj.x().component(i),
                               Substitution{}.set_time(Expr::time_symbol() + Expr::integer(1)));
        auto exact_rhs = evaluate_exact(composed, eb);
        auto exact_lhs = evaluate_exact(next, eb);
        if (exact_rhs && exact_lhs) {
          exact_step = true;
          rhs = exact_rhs->to_double();
          lhs = exact_lhs->to_double();
          if (!(*exact_lhs == *exact_rhs)) all_exact = false;
        }
      }
      if (!exact_step) {
        all_exact = false;
        Binding b = trajectory_binding(traj, sys.f(i), k);
        rhs = evaluate(sys.f(i), b);
      }
      sample_abs = std::max(sample_abs, std::abs(lhs - rhs));
      sample_rel = std::max(sample_rel, relative_deviation(lhs, rhs));
    }
    ++report.samples_evaluated;
    if (report.samples_evaluated == 1 || sample_rel > report.max_rel) {
      report.max_rel = sample_rel;
      report.worst_sample = "k=" + std::to_string(k);
    }
    report.max_abs = std::max(report.max_abs, sample_abs);
  }

  report.notes.push_back("k window [" + std::to_string(w.first) + ", " + std::to_string(w.last) +
                         "]");
  if (all_exact) report.notes.push_back("residual exactly zero at every checked step");
  report.pass = report.max_rel < tol;
  return report;
}

}  // namespace dtflat
