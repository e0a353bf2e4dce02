// alps: active learning simulations with partial annotation and self-training.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "alps/cli/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"alps: simulate, report and evaluate active learning runs"};
  app.require_subcommand(1);

  auto* sim = app.add_subcommand("simulate", "run an AL simulation from a config file");
  std::string config;
  std::optional<std::uint64_t> seed_filter;
  sim->add_option("--config", config, "run config (key = value lines)")->required();
  sim->add_option("--seed-filter", seed_filter, "only compute this seed");

  auto* rep = app.add_subcommand("report", "learning curves from finished runs");
  std::vector<std::string> dirs;
  std::string out_dir;
  rep->add_option("dirs", dirs, "run directories")->required();
  rep->add_option("--out", out_dir, "output directory")->required();

  auto* ev = app.add_subcommand("evaluate", "score saved parameters on a corpus");
  std::string params, data, task;
  ev->add_option("--params", params, "model.bin")->required();
  ev->add_option("--data", data, "corpus file")->required();
  ev->add_option("--task", task, "tagging, parsing or ie")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : alps::cli::kExitConfig;
  }

  if (*sim) return alps::cli::cmd_simulate(config, seed_filter, std::cout, std::cerr);
  if (*rep) return alps::cli::cmd_report(dirs, out_dir, std::cout, std::cerr);
  return alps::cli::cmd_evaluate(params, data, task, std::cout, std::cerr);
}
