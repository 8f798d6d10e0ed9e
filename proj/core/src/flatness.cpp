#include "dtflat/flatness.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <utility>

#include "dtflat/errors.hpp"
#include "dtflat/linalg.hpp"

namespace dtflat {

FlatOutputCandidate::FlatOutputCandidate(const DiscreteTimeSystem& sys, std::vector<Expr> phi)
    : phi_(std::move(phi)) {
  if (static_cast<int>(phi_.size()) != sys.m())
    throw Error("flat-output candidate needs m=" + std::to_string(sys.m()) +
                " components, got " + std::to_string(phi_.size()));
  for (const Expr& component : phi_) {
    ExtendedFunction checked(sys, component);
    q1_ = std::max(q1_, checked.zeta_lag());
    q2_ = std::max(q2_, std::max(0, checked.input_lead()));
  }
}

Parameterization::Parameterization(int n, int m, std::vector<int> R, std::vector<Expr> F_x,
                                   std::vector<Expr> F_u)
    : R_(std::move(R)), F_x_(std::move(F_x)), F_u_(std::move(F_u)) {
  if (n < 1 || m < 1) throw Error("parameterization dimensions must be positive");
  if (static_cast<int>(F_x_.size()) != n || static_cast<int>(F_u_.size()) != m)
    throw Error("parameterization component counts do not match (n, m)");
  if (static_cast<int>(R_.size()) != m)
    throw Error("shift bound R needs one entry per flat-output component");
  for (int rj : R_)
    if (rj < 1) throw Error("every entry of R must be at least 1");

  auto validate = [&](const Expr& e, bool is_state, const std::string& what) {
    for (VarRef v : e.variables()) {
      if (v.group != VarGroup::FlatOut)
        throw Error(what + " references '" + v.name() +
                    "'; parameterizations are expressions in k and y shifts only");
      if (v.component > m)
        throw Error(what + " references '" + v.name() + "' beyond flat-output dimension " +
                    std::to_string(m));
      if (v.shift < 0)
        throw Error(what + " references backward shift '" + v.name() +
                    "'; normalize the flat output first (replace each component by its highest "
                    "backward shift so every reference becomes a forward shift)");
      const int bound = is_state ? R_[v.component - 1] - 1 : R_[v.component - 1];
      if (v.shift > bound)
        throw Error(what + " references '" + v.name() + "' beyond its shift bound " +
                    std::to_string(bound));
    }
  };
  for (int i = 1; i <= n; ++i)
    validate(F_x_[i - 1], true, "state parameterization component " + std::to_string(i));
  for (int j = 1; j <= m; ++j)
    validate(F_u_[j - 1], false, "input parameterization component " + std::to_string(j));
}

int Parameterization::r() const { return *std::max_element(R_.begin(), R_.end()); }

FlatPair::FlatPair(FlatOutputCandidate candidate_in, Parameterization param_in)
    : candidate(std::move(candidate_in)), param(std::move(param_in)) {
  if (candidate.m() != param.m())
    throw Error("flat-output candidate and parameterization disagree on m");
}

Expr flat_shift(const Expr& e, int times) {
  Substitution s;
  s.set_time(times >= 0 ? Expr::time_symbol() + Expr::integer(times)
                        : Expr::time_symbol() - Expr::integer(-times));
  for (VarRef v : e.variables()) {
    if (v.group != VarGroup::FlatOut && v.group != VarGroup::DeltaFlatOut)
      throw Error("flat-output relabeling applies to flat-output coordinates only; found '" +
                  v.name() + "'");
    s.set(v, Expr::var(v.shifted_by(times)));
  }
  return substitute(e, s);
}

Substitution flat_output_jet(const DiscreteTimeSystem& sys, const FlatOutputCandidate& candidate,
                             const Expr& target) {
  Substitution jet;
  // Shift each component incrementally so delta^a reuses delta^(a-1).
  std::map<int, std::map<int, Expr>> cache;  // component -> shift -> expr
  for (VarRef v : target.variables()) {
    if (v.group != VarGroup::FlatOut) continue;
    if (v.component > candidate.m())
      throw Error("jet target references '" + v.name() + "' beyond flat-output dimension " +
                  std::to_string(candidate.m()));
    auto& shifts = cache[v.component];
    if (shifts.empty()) shifts.emplace(0, candidate.phi(v.component));
    if (v.shift >= 0) {
      int have = shifts.rbegin()->first;
      for (; have < v.shift; ++have)
        shifts.emplace(have + 1, forward_shift(sys, shifts.at(have)));
    } else {
      int have = shifts.begin()->first;
      for (; have > v.shift; --have)
        shifts.emplace(have - 1, backward_shift(sys, shifts.at(have)));
    }
    jet.set(v, shifts.at(v.shift));
  }
  return jet;
}

VerificationReport verify_parameterization_identity(const DiscreteTimeSystem& sys,
                                                    const Parameterization& param,
                                                    const SampleDomain& domain, double tol) {
  if (param.n() != sys.n() || param.m() != sys.m())
    throw Error("parameterization dimensions do not match the system");

  Substitution into_parameterization;
  for (int i = 1; i <= sys.n(); ++i)
    into_parameterization.set(VarRef::state(i), param.x_component(i));
  for (int j = 1; j <= sys.m(); ++j)
    into_parameterization.set(VarRef::input(j), param.u_component(j));

  std::vector<std::pair<Expr, Expr>> pairs;
  pairs.reserve(sys.n());
  for (int i = 1; i <= sys.n(); ++i)
    pairs.emplace_back(flat_shift(param.x_component(i), 1),
                       substitute(sys.f(i), into_parameterization));
  return numeric_equal_all(pairs, domain, tol, "parameterization-identity");
}

VerificationReport verify_flat_pair(const DiscreteTimeSystem& sys, const FlatPair& pair,
                                    const SampleDomain& domain, double tol) {
  if (pair.param.n() != sys.n() || pair.param.m() != sys.m())
    throw Error("flat pair dimensions do not match the system");

  // One jet covering every y reference in F and in y-written exclusions.
  Expr all = Expr::integer(0);
  for (int i = 1; i <= sys.n(); ++i) all = all + pair.param.x_component(i);
  for (int j = 1; j <= sys.m(); ++j) all = all + pair.param.u_component(j);
  for (const Exclusion& ex : domain.exclusions) {
    bool in_y = false;
    for (VarRef v : ex.expr.variables())
      if (v.group == VarGroup::FlatOut) in_y = true;
    if (in_y) all = all + ex.expr;
  }
  Substitution jet = flat_output_jet(sys, pair.candidate, all);

  std::vector<std::pair<Expr, Expr>> pairs;
  pairs.reserve(sys.n() + sys.m());
  for (int i = 1; i <= sys.n(); ++i)
    pairs.emplace_back(Expr::var(VarRef::state(i)), substitute(pair.param.x_component(i), jet));
  for (int j = 1; j <= sys.m(); ++j)
    pairs.emplace_back(Expr::var(VarRef::input(j)), substitute(pair.param.u_component(j), jet));

  SampleDomain chart_domain = domain;
  for (Exclusion& ex : chart_domain.exclusions) {
    bool in_y = false;
    for (VarRef v : ex.expr.variables())
      if (v.group == VarGroup::FlatOut) in_y = true;
    if (in_y) ex.expr = substitute(ex.expr, jet);
  }
  return numeric_equal_all(pairs, chart_domain, tol, "flat-pair-identity");
}

VerificationReport check_rank_conditions(const Parameterization& param,
                                         const SampleDomain& domain) {
  const int n = param.n();
  const int m = param.m();

  std::vector<VarRef> full_cols, state_cols;
  for (int j = 1; j <= m; ++j)
    for (int a = 0; a <= param.R()[j - 1]; ++a) {
      full_cols.push_back(VarRef::flat_out(j, a));
      if (a < param.R()[j - 1]) state_cols.push_back(VarRef::flat_out(j, a));
    }

  std::vector<std::vector<Expr>> full_jac(n + m), state_jac(n);
  auto row_expr = [&](int row) -> const Expr& {
    return row < n ? param.x_component(row + 1) : param.u_component(row - n + 1);
  };
  for (int row = 0; row < n + m; ++row)
    for (VarRef c : full_cols) full_jac[row].push_back(differentiate(row_expr(row), c));
  for (int row = 0; row < n; ++row)
    for (VarRef c : state_cols) state_jac[row].push_back(differentiate(row_expr(row), c));

  VerificationReport report;
  report.check = "parameterization-rank";
  report.tolerance = 1e-9;  // relative singular-value threshold
  report.seed = domain.seed;

  std::set<VarRef> vars(full_cols.begin(), full_cols.end());
  for (const Exclusion& ex : domain.exclusions) {
    auto ve = ex.expr.variables();
    vars.insert(ve.begin(), ve.end());
  }
  Sampler sampler(domain, vars);

  // Beyond this entry magnitude the SVD threshold is dominated by a single
  // blown-up quotient and the rank readout reflects roundoff, not geometry.
  const double entry_guard = 1e8;
  int min_rank_full = n + m;
  int min_rank_state = n;
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
    Eigen::MatrixXd full(n + m, static_cast<int>(full_cols.size()));
    Eigen::MatrixXd state(n, static_cast<int>(state_cols.size()));
    bool usable = true;
    try {
      for (int row = 0; row < n + m && usable; ++row)
        for (std::size_t c = 0; c < full_cols.size(); ++c) {
          full(row, static_cast<int>(c)) = evaluate(full_jac[row][c], b);
          if (std::abs(full(row, static_cast<int>(c))) > entry_guard) usable = false;
        }
      for (int row = 0; row < n && usable; ++row)
        for (std::size_t c = 0; c < state_cols.size(); ++c)
          state(row, static_cast<int>(c)) = evaluate(state_jac[row][c], b);
    } catch (const DivisionNearZeroError&) {
      usable = false;
    }
    if (!usable) {
      ++report.samples_skipped;
      continue;
    }
    ++report.samples_evaluated;

    Eigen::VectorXd sv_full, sv_state;
    int rank_full = numeric_rank(full, 1e-9, &sv_full);
    int rank_state = numeric_rank(state, 1e-9, &sv_state);
    min_rank_full = std::min(min_rank_full, rank_full);
    min_rank_state = std::min(min_rank_state, rank_state);
    if (rank_full < n + m || rank_state < n) {
      if (pass) report.worst_sample = Sampler::render(b);
      pass = false;
    }

    std::string note = "sample " + std::to_string(report.samples_evaluated) + " k=" +
                       std::to_string(b.k) + " sv_full=[";
    for (int i = 0; i < sv_full.size(); ++i)
      note += (i ? " " : "") + format_double(sv_full(i));
    note += "] sv_state=[";
    for (int i = 0; i < sv_state.size(); ++i)
      note += (i ? " " : "") + format_double(sv_state(i));
    note += "]";
    report.notes.push_back(std::move(note));
  }

  if (report.samples_evaluated == 0)
    throw AllSamplesSingularError("rank check: no evaluable samples");

  report.pass = pass;
  report.notes.insert(report.notes.begin(),
                      "min rank d(F_x,F_u)/d(y-jet) = " + std::to_string(min_rank_full) +
                          " (want " + std::to_string(n + m) + "), min rank d(F_x)/d(y-jet<R) = " +
                          std::to_string(min_rank_state) + " (want " + std::to_string(n) + ")");
  return report;
}

Signal flat_output_trajectory(const FlatPair& pair, const Trajectory& traj) {
  const std::vector<Expr>& phi = pair.candidate.components();

  if (traj.is_closed_form()) {
    std::vector<Expr> y;
    y.reserve(phi.size());
    for (const Expr& component : phi)
      y.push_back(substitute(component, trajectory_substitution(traj, component)));
    return Signal::closed_form(std::move(y));
  }

  // Largest window where every referenced sample is covered.
  std::int64_t first = std::numeric_limits<std::int64_t>::min();
  std::int64_t last = std::numeric_limits<std::int64_t>::max();
  auto clip = [&](const Signal& s, int shift) {
    first = std::max(first, s.k_first() - shift);
    last = std::min(last, s.k_last() - shift);
  };
  for (const Expr& component : phi)
    for (VarRef v : component.variables()) {
      if (v.group == VarGroup::State) clip(traj.x(), 0);
      if (v.group == VarGroup::Input) clip(traj.u(), v.shift);
      if (v.group == VarGroup::Zeta) clip(traj.zeta(), v.shift);
    }
  first = std::max(first, traj.x().k_first());
  last = std::min(last, traj.x().k_last());
  if (first > last) throw Error("trajectory coverage too short for the flat-output windows");

  std::vector<Eigen::VectorXd> samples;
  for (std::int64_t k = first; k <= last; ++k) {
    Eigen::VectorXd y(static_cast<int>(phi.size()));
    for (std::size_t j = 0; j < phi.size(); ++j)
      y(static_cast<int>(j)) = evaluate(phi[j], trajectory_binding(traj, phi[j], k));
    samples.push_back(std::move(y));
  }
  return Signal::tabulated(first, std::move(samples));
}

}  // namespace dtflat
