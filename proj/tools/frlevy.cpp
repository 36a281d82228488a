#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "frlevy/cli/config.hpp"
#include "frlevy/cli/runner.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw frlevy::cli::ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"anisotropic fractional Levy fields and SPDE solvers"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> replicas;
  std::optional<std::string> out_dir;
  bool plots = false;

  for (const auto cmd :
       {frlevy::cli::Command::SimulateField, frlevy::cli::Command::SolvePoisson,
        frlevy::cli::Command::SolveHeat, frlevy::cli::Command::SolveQuasilinear,
        frlevy::cli::Command::Validate}) {
    auto* sub = app.add_subcommand(frlevy::cli::command_name(cmd));
    sub->add_option("--config", config_path, "configuration file")->required();
    sub->add_option("--seed", seed, "master seed (overrides config)");
    sub->add_option("--replicas", replicas, "replica count (overrides config)");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_flag("--plots", plots, "emit SVG plots");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    const std::string sub_name = app.get_subcommands().front()->get_name();
    const auto command = frlevy::cli::command_from_name(sub_name);
    frlevy::cli::SeedOverrides over;
    over.cli_seed = seed;
    over.cli_replicas = replicas;
    over.cli_out = out_dir;
    if (plots) over.cli_plots = true;
    if (const char* env = std::getenv("FRLEVY_SEED")) {
      try {
        over.env_seed = std::stoull(env);
      } catch (...) {
        std::cerr << "warning: ignoring non-numeric FRLEVY_SEED\n";
      }
    }
    const auto cfg =
        frlevy::cli::parse_config(read_file(config_path), *command, over);
    return frlevy::cli::run(cfg);
  } catch (const frlevy::cli::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
