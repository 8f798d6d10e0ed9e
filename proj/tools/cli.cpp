#include "cli.hpp"

#include <algorithm>
#include <ctime>
#include <fstream>
#include <set>
#include <utility>
#include <vector>

#include "dtflat/errors.hpp"
#include "dtflat/expr.hpp"
#include "dtflat/flatness.hpp"
#include "dtflat/sysfile.hpp"

namespace dtflat::cli {
namespace {

std::string timestamp_line() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return std::string("run: ") + buf + "\n";
}

void header(RunReport& report, const std::string& command, std::uint64_t seed,
            bool deterministic) {
  report.command = command;
  report.seed = seed;
  report.text += "command: " + command + "\n";
  report.text += "seed: " + std::to_string(seed) + "\n";
  if (!deterministic) report.text += timestamp_line();
}

// Appends one check to the report: summary line always; the worst sample and
// the notes when it failed, a short note block when it passed.
void add_check(RunReport& report, VerificationReport check) {
  report.text += check.summary() + "\n";
  if (!check.pass) {
    if (!check.worst_sample.empty()) report.text += "  worst: " + check.worst_sample + "\n";
    for (const std::string& note : check.notes) report.text += "  note: " + note + "\n";
    report.exit_code = kExitFailedCheck;
  } else if (check.notes.size() <= 4) {
    for (const std::string& note : check.notes) report.text += "  note: " + note + "\n";
  }
  report.checks.push_back(std::move(check));
}

std::string render_vector(const Eigen::VectorXd& v) {
  std::string out = "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i > 0) out += ", ";
    out += format_double(v(i));
  }
  return out + ")";
}

// k-only expressions print in collapsed polynomial form when one exists;
// chart compositions otherwise nest too deeply to read.
std::string render_k_expr(const Expr& e) {
  if (auto p = polynomial_in_k(e)) return to_string(*p);
  return to_string(e);
}

// Splits a leading minus off a term so sums print with "-" instead of "+ -1*".
std::pair<bool, Expr> split_sign(const Expr& t) {
  if (t.kind() == NodeKind::Neg) return {true, t.child()};
  if (t.kind() == NodeKind::Integer || t.kind() == NodeKind::Rational) {
    const Rational r = t.rational_value();
    if (r.num < 0)
      if (auto m = Rational::make(-__int128(r.num), r.den)) return {true, Expr::rational(*m)};
  }
  return {false, t};
}

// First variations are linear in the Delta symbols with k-varying
// coefficients along a trajectory. Printing one term per Delta symbol with
// the coefficient collapsed keeps the report readable; the expression object
// itself is left untouched.
std::string render_linear_form(const Expr& e) {
  if (!is_linear_in_delta(e)) return to_string(e);
  const std::set<VarRef> vars = e.variables();
  for (const VarRef& v : vars)
    if (!is_delta_group(v.group)) return to_string(e);

  Substitution zero_deltas;
  for (const VarRef& v : vars) zero_deltas.set(v, Expr::integer(0));

  std::vector<Expr> terms;
  const Expr constant_part = substitute(e, zero_deltas);
  if (auto p = polynomial_in_k(constant_part)) {
    if (!p->is_integer_constant(0)) terms.push_back(*p);
  } else {
    terms.push_back(constant_part);
  }
  for (const VarRef& v : vars) {
    // Zeroing the Delta symbols in the derivative strips spurious
    // zero-coefficient remnants of product and quotient rules.
    const Expr coeff = substitute(differentiate(e, v), zero_deltas);
    const Expr collapsed = polynomial_in_k(coeff).value_or(coeff);
    if (collapsed.is_integer_constant(0)) continue;
    if (collapsed.is_integer_constant(1))
      terms.push_back(Expr::var(v));
    else if (collapsed.is_integer_constant(-1))
      terms.push_back(-Expr::var(v));
    else
      terms.push_back(collapsed * Expr::var(v));
  }

  Expr sum = Expr::integer(0);
  bool first = true;
  for (const Expr& term : terms) {
    auto [negative, magnitude] = split_sign(term);
    if (first) {
      sum = negative ? -magnitude : magnitude;
      first = false;
    } else {
      sum = negative ? sum - magnitude : sum + magnitude;
    }
  }
  return to_string(sum);
}

// The trajectory a command analyzes: the file's closed form unless the
// rollout request is forced or is all the file has.
Trajectory resolve_trajectory(const SystemFile& file, bool force_simulate,
                              const std::string& path) {
  if (!force_simulate && file.trajectory) return *file.trajectory;
  if (file.simulation) {
    const SimulationSetup& setup = *file.simulation;
    return simulate(file.system, setup.x0, setup.k0, Signal::closed_form(setup.u), setup.steps);
  }
  if (force_simulate)
    throw FileFormatError(path + ": --simulate requested but the file has no simulate block");
  throw FileFormatError(path + ": no trajectory block and no simulate block");
}

// Distinct failure modes share the tail of every command: render the message
// and pick the exit status.
void fail(RunReport& report, const std::string& message, int exit_code) {
  report.text += "error: " + message + "\n";
  report.exit_code = exit_code;
}

void write_matrix_csv(const std::string& path, const LTVSystem& ltv, KWindow window) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write CSV file '" + path + "'");
  out << "k";
  for (int i = 1; i <= ltv.n(); ++i)
    for (int s = 1; s <= ltv.n(); ++s) out << ",A[" << i << "][" << s << "]";
  for (int i = 1; i <= ltv.n(); ++i)
    for (int j = 1; j <= ltv.m(); ++j) out << ",B[" << i << "][" << j << "]";
  out << "\n";
  const std::int64_t first = std::max(window.first, ltv.k_first());
  const std::int64_t last = std::min(window.last, ltv.k_last());
  for (std::int64_t k = first; k <= last; ++k) {
    const Eigen::MatrixXd A = ltv.A_at(k);
    const Eigen::MatrixXd B = ltv.B_at(k);
    out << k;
    for (int i = 0; i < ltv.n(); ++i)
      for (int s = 0; s < ltv.n(); ++s) out << "," << format_double(A(i, s));
    for (int i = 0; i < ltv.n(); ++i)
      for (int j = 0; j < ltv.m(); ++j) out << "," << format_double(B(i, j));
    out << "\n";
  }
}

void write_plan_csv(const std::string& path, const Plan& plan, int n, int m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write CSV file '" + path + "'");
  out << "k";
  for (int l = 1; l <= m; ++l) out << ",y[" << l << "]";
  for (int i = 1; i <= n; ++i) out << ",x[" << i << "]";
  for (int j = 1; j <= m; ++j) out << ",u[" << j << "]";
  out << "\n";
  for (std::int64_t k = plan.y.k_first(); k <= plan.y.k_last(); ++k) {
    out << k;
    for (int l = 1; l <= m; ++l) out << "," << format_double(plan.y.component_at(l, k));
    for (int i = 1; i <= n; ++i)
      if (plan.realized.x().covers(k))
        out << "," << format_double(plan.realized.x().component_at(i, k));
      else
        out << ",";
    for (int j = 1; j <= m; ++j)
      if (plan.realized.u().covers(k))
        out << "," << format_double(plan.realized.u().component_at(j, k));
      else
        out << ",";
    out << "\n";
  }
}

}  // namespace

RunReport run_verify(const std::string& path, const VerifyOptions& opt) {
  RunReport report;
  header(report, "verify " + path, opt.seed, opt.deterministic);
  try {
    SystemFile file = load_system_file(path);
    const SampleDomain domain = file.domain().with_seed(opt.seed);
    add_check(report, check_submersivity(file.system, domain));
    if (file.system.has_inverse()) add_check(report, check_inverse(file.system, domain));
    if (file.system.equilibrium)
      add_check(report, check_equilibrium(file.system, file.system.equilibrium->first,
                                          file.system.equilibrium->second));
    if (file.trajectory) add_check(report, check_trajectory(file.system, *file.trajectory));
    if (file.flat_pair) {
      add_check(report, verify_flat_pair(file.system, *file.flat_pair, domain));
      add_check(report,
                verify_parameterization_identity(file.system, file.flat_pair->param, domain));
      add_check(report, check_rank_conditions(file.flat_pair->param, domain));
    }
    report.text += report.exit_code == kExitOk ? "verdict: all checks passed\n"
                                               : "verdict: at least one check failed\n";
  } catch (const FileFormatError& e) {
    fail(report, e.what(), kExitInputError);
  } catch (const AllSamplesSingularError& e) {
    fail(report, e.what(), kExitInputError);
  } catch (const Error& e) {
    fail(report, e.what(), kExitFailedCheck);
  }
  return report;
}

RunReport run_linearize(const std::string& path, const LinearizeOptions& opt) {
  RunReport report;
  header(report, "linearize " + path, opt.seed, opt.deterministic);
  try {
    SystemFile file = load_system_file(path);
    const DiscreteTimeSystem& sys = file.system;
    Trajectory traj = resolve_trajectory(file, opt.simulate, path);

    report.text += "chart Jacobians:\n";
    for (int i = 1; i <= sys.n(); ++i)
      for (int s = 1; s <= sys.n(); ++s)
        report.text +=
            "  df[" + std::to_string(i) + "]/dx[" + std::to_string(s) + "] = " +
            to_string(sys.df_dx(i, s)) + "\n";
    for (int i = 1; i <= sys.n(); ++i)
      for (int j = 1; j <= sys.m(); ++j)
        report.text +=
            "  df[" + std::to_string(i) + "]/du[" + std::to_string(j) + "] = " +
            to_string(sys.df_du(i, j)) + "\n";

    LTVSystem ltv = linearize_along(sys, traj);
    if (ltv.is_closed_form()) {
      report.text += "A(k):\n";
      for (int i = 1; i <= ltv.n(); ++i)
        for (int s = 1; s <= ltv.n(); ++s)
          report.text += "  A[" + std::to_string(i) + "][" + std::to_string(s) + "] = " +
                         render_k_expr(ltv.A(i, s)) + "\n";
      report.text += "B(k):\n";
      for (int i = 1; i <= ltv.n(); ++i)
        for (int j = 1; j <= ltv.m(); ++j)
          report.text += "  B[" + std::to_string(i) + "][" + std::to_string(j) + "] = " +
                         render_k_expr(ltv.B(i, j)) + "\n";
    } else {
      report.text += "A(k), B(k) tabulated on [" + std::to_string(ltv.k_first()) + ", " +
                     std::to_string(ltv.k_last()) + "]\n";
    }

    add_check(report, check_ltv_regularity(ltv, opt.window));

    if (file.flat_pair && traj.is_closed_form()) {
      LinearFlatPair linear = linearize_flat_pair(sys, *file.flat_pair, traj, opt.window);
      report.text += "linearized flat output:\n";
      for (int j = 1; j <= linear.output.m(); ++j)
        report.text += "  dy[" + std::to_string(j) + "] = " +
                       render_linear_form(linear.output.component(j)) + "\n";
      report.text += "linearized parameterization:\n";
      for (int i = 1; i <= linear.param.n(); ++i)
        report.text += "  dx[" + std::to_string(i) + "] = " +
                       render_linear_form(linear.param.x_component(i)) + "\n";
      for (int j = 1; j <= linear.param.m(); ++j)
        report.text += "  du[" + std::to_string(j) + "] = " +
                       render_linear_form(linear.param.u_component(j)) + "\n";

      const SampleDomain plain = SampleDomain{}.with_seed(opt.seed);
      add_check(report, verify_linear_pair(ltv, linear.output, linear.param, plain));
      for (int j = 1; j <= file.flat_pair->candidate.m(); ++j)
        add_check(report, check_commutation(sys, file.flat_pair->candidate.phi(j), plain));
      report.linear_pair = std::move(linear);
    }

    if (!opt.csv.empty()) {
      write_matrix_csv(opt.csv, ltv, opt.window);
      report.csv_paths.push_back(opt.csv);
      report.text += "csv: " + opt.csv + "\n";
    }
    report.ltv = std::move(ltv);
  } catch (const FileFormatError& e) {
    fail(report, e.what(), kExitInputError);
  } catch (const SingularTrajectoryError& e) {
    fail(report, e.what(), kExitFailedCheck);
  } catch (const Error& e) {
    fail(report, e.what(), kExitInputError);
  }
  return report;
}

RunReport run_necessary_condition(const std::string& path, const NecessaryConditionOptions& opt) {
  RunReport report;
  header(report, "necessary-condition " + path, opt.seed, opt.deterministic);
  try {
    SystemFile file = load_system_file(path);
    Trajectory traj = resolve_trajectory(file, opt.simulate, path);
    KWindow window{-10, 10};
    if (opt.window) {
      window = *opt.window;
    } else if (!traj.is_closed_form()) {
      window = {traj.x().k_first(), traj.x().k_last()};
    }
    NecessaryConditionResult result =
        flatness_necessary_condition(file.system, traj, window.first, window.last, opt.horizon);
    report.text += "scan: [" + std::to_string(result.k0) + ", " + std::to_string(result.kf) +
                   "], horizon " + std::to_string(result.horizon) + ", " +
                   std::to_string(result.windows_tested) + " windows\n";
    report.text += "max rank: " + std::to_string(result.max_rank) + " of " +
                   std::to_string(result.required_rank) + " on [" +
                   std::to_string(result.best_k0) + ", " + std::to_string(result.best_kf) + "]\n";
    report.text += std::string("verdict: ") +
                   (result.verdict == FlatnessVerdict::NotFlat ? "NotFlat" : "Inconclusive") +
                   "\n";
    report.text += result.statement + "\n";
    report.verdict = result;
  } catch (const FileFormatError& e) {
    fail(report, e.what(), kExitInputError);
  } catch (const Error& e) {
    fail(report, e.what(), kExitInputError);
  }
  return report;
}

RunReport run_plan(const std::string& path, const PlanOptions& opt) {
  RunReport report;
  header(report, "plan " + path, opt.seed, opt.deterministic);
  try {
    SystemFile file = load_system_file(path);
    const DiscreteTimeSystem& sys = file.system;
    if (!file.flat_pair) throw FileFormatError(path + ": planning needs a flat pair in the file");
    if (static_cast<int>(opt.from.size()) != sys.n() ||
        static_cast<int>(opt.to.size()) != sys.n())
      throw FileFormatError("--from and --to must list " + std::to_string(sys.n()) +
                            " state values");
    PlanProblem problem{*file.flat_pair,
                        Eigen::Map<const Eigen::VectorXd>(opt.from.data(), sys.n()), opt.k_initial,
                        Eigen::Map<const Eigen::VectorXd>(opt.to.data(), sys.n()), opt.k_final};
    report.text += "from " + render_vector(problem.x_initial) + " at k=" +
                   std::to_string(problem.k_initial) + " to " + render_vector(problem.x_final) +
                   " at k=" + std::to_string(problem.k_final) + "\n";

    Plan result = plan(sys, problem, opt.seed);
    report.text += "boundary residual: " + format_double(result.boundary_residual) + "\n";
    report.text += "restarts used: " + std::to_string(result.restarts_used) + "\n";

    Trajectory rollout = simulate(sys, problem.x_initial, problem.k_initial, result.realized.u());
    const double landing =
        (rollout.x().at(problem.k_final) - problem.x_final).lpNorm<Eigen::Infinity>();
    report.text += "simulated landing error: " + format_double(landing) + "\n";

    if (!opt.csv.empty()) {
      write_plan_csv(opt.csv, result, sys.n(), sys.m());
      report.csv_paths.push_back(opt.csv);
      report.text += "csv: " + opt.csv + "\n";
    }
    report.plan = std::move(result);
  } catch (const FileFormatError& e) {
    fail(report, e.what(), kExitInputError);
  } catch (const NoConvergenceError& e) {
    fail(report, e.what(), kExitFailedCheck);
  } catch (const SingularParameterizationError& e) {
    fail(report, e.what(), kExitFailedCheck);
  } catch (const Error& e) {
    fail(report, e.what(), kExitInputError);
  }
  return report;
}

}  // namespace dtflat::cli
