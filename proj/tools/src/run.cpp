#include <CLI11.hpp>

#include <iostream>

#include "pllsync/cli.hpp"

namespace pllsync::cli {

int run(const std::vector<std::string>& args) {
  CLI::App app{"PLL grid-synchronization laboratory"};
  app.require_subcommand(1);

  GlobalOptions opts;
  std::string out_dir = ".";
  app.add_option("--out-dir", out_dir, "Directory for output files");
  app.add_option("--seed", opts.seed, "Seed for Monte-Carlo sampling");
  double dt_override = 0.0;
  auto* dt_flag = app.add_option("--dt", dt_override, "Integrator step override");
  double t_end_override = 0.0;
  auto* t_end_flag =
      app.add_option("--t-end", t_end_override, "Horizon override");
  app.add_option("--jobs", opts.jobs, "Worker threads (0 = hardware)");

  std::string config_file;
  std::string scenario_arg;

  auto* simulate = app.add_subcommand("simulate", "Run one closed-loop simulation");
  simulate->add_option("config", config_file, "JSON config file")->required();
  auto* portrait =
      app.add_subcommand("portrait", "Sweep a grid of initial conditions");
  portrait->add_option("config", config_file, "JSON config file")->required();
  auto* roa = app.add_subcommand("roa", "Region-of-attraction estimate");
  roa->add_option("config", config_file, "JSON config file")->required();
  auto* bound = app.add_subcommand("bound", "Ultimate bound under bounded RoCoF");
  bound->add_option("config", config_file, "JSON config file")->required();
  auto* scenario = app.add_subcommand("scenario", "Run a named or custom scenario");
  scenario->add_option("name", scenario_arg, "Builtin name or JSON config file")
      ->required();
  auto* validate =
      app.add_subcommand("validate-config", "Validate a config file");
  validate->add_option("config", config_file, "JSON config file")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "argument error: " << e.what() << '\n';
    return kExitConfig;
  }

  if (*dt_flag) opts.dt = dt_override;
  if (*t_end_flag) opts.t_end = t_end_override;
  opts.out_dir = out_dir;

  if (simulate->parsed()) return cmd_simulate(config_file, opts);
  if (portrait->parsed()) return cmd_portrait(config_file, opts);
  if (roa->parsed()) return cmd_roa(config_file, opts);
  if (bound->parsed()) return cmd_bound(config_file, opts);
  if (scenario->parsed()) return cmd_scenario(scenario_arg, opts);
  if (validate->parsed()) return cmd_validate_config(config_file);
  return kExitConfig;
}

}  // namespace pllsync::cli
