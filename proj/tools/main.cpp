#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cli.hpp"
#include "dtflat/system.hpp"

namespace {

// Two-value --window flag shared by linearize and necessary-condition.
void add_window_option(CLI::App* cmd, std::vector<std::int64_t>& window, const char* help) {
  cmd->add_option("--window", window, help)->expected(2);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"symbolic-numeric toolkit for flatness of discrete-time systems"};
  app.require_subcommand(1);

  std::string path;
  std::uint64_t seed = dtflat::cli::kDefaultSeed;
  bool deterministic = false;
  std::vector<std::int64_t> window;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("file", path, "model definition file")->required();
    cmd->add_option("--seed", seed, "seed for every randomized check");
    cmd->add_flag("--deterministic", deterministic, "suppress timestamps in the report");
  };

  CLI::App* verify = app.add_subcommand("verify", "run every check the model file supports");
  add_common(verify);

  CLI::App* linearize =
      app.add_subcommand("linearize", "linearize the dynamics along the reference trajectory");
  add_common(linearize);
  std::string linearize_csv;
  bool simulate = false;
  linearize->add_option("--csv", linearize_csv, "write sampled A(k), B(k) to this file");
  linearize->add_flag("--simulate", simulate, "use the file's rollout request as trajectory");
  add_window_option(linearize, window, "sampling window, two integers");

  CLI::App* necessary = app.add_subcommand(
      "necessary-condition", "reachability-based flatness test along the trajectory");
  add_common(necessary);
  int horizon = 0;
  necessary->add_option("--horizon", horizon,
                        "longest reachability window tested (default: twice the state dimension)");
  necessary->add_flag("--simulate", simulate, "use the file's rollout request as trajectory");
  add_window_option(necessary, window, "scan window, two integers");

  CLI::App* plan = app.add_subcommand("plan", "steer between two states through the flat output");
  add_common(plan);
  std::vector<double> from;
  std::vector<double> to;
  std::int64_t k_initial = 0;
  std::int64_t k_final = 0;
  std::string plan_csv = "plan.csv";
  plan->add_option("--from", from, "initial state")->required()->expected(-1);
  plan->add_option("--to", to, "final state")->required()->expected(-1);
  plan->add_option("--ki", k_initial, "initial step (default 0)");
  plan->add_option("--kf", k_final, "final step")->required();
  plan->add_option("--csv", plan_csv, "plan export path (default plan.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return dtflat::cli::kExitInputError;
  }

  dtflat::cli::RunReport report;
  if (app.got_subcommand(verify)) {
    report = dtflat::cli::run_verify(path, {seed, deterministic});
  } else if (app.got_subcommand(linearize)) {
    dtflat::cli::LinearizeOptions opt{seed, deterministic};
    if (window.size() == 2) opt.window = dtflat::KWindow{window[0], window[1]};
    opt.csv = linearize_csv;
    opt.simulate = simulate;
    report = dtflat::cli::run_linearize(path, opt);
  } else if (app.got_subcommand(necessary)) {
    dtflat::cli::NecessaryConditionOptions opt{seed, deterministic};
    opt.horizon = horizon;
    opt.simulate = simulate;
    if (window.size() == 2) opt.window = dtflat::KWindow{window[0], window[1]};
    report = dtflat::cli::run_necessary_condition(path, opt);
  } else {
    dtflat::cli::PlanOptions opt{seed, deterministic};
    opt.from = from;
    opt.to = to;
    opt.k_initial = k_initial;
    opt.k_final = k_final;
    opt.csv = plan_csv;
    report = dtflat::cli::run_plan(path, opt);
  }

  std::cout << report.text;
  return report.exit_code;
}
