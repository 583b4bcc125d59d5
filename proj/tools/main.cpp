// optoatp: simulate, fit, learn residuals and optimize light schedules for
// optogenetic ATPase fermentations.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "optoatp/cli.hpp"
#include "optoatp/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Kinetic and hybrid models for light-controlled ATPase expression"};
  app.set_version_flag("--version", std::string(optoatp::cli::kVersion));
  app.require_subcommand(1);
  app.footer("Set OPTOATP_THREADS to limit worker threads.\n"
             "Exit codes: 0 ok, 2 data error, 3 numerical failure, 4 infeasible, 5 configuration error.");

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir = ".";

  const std::pair<const char*, const char*> commands[] = {
      {"simulate", "Integrate the nominal or hybrid model over a light schedule"},
      {"fit", "Estimate kinetic parameters from batch CSV files by particle swarm"},
      {"residuals", "Compute re-anchored model residuals from batch data"},
      {"train-gp", "Train the residual Gaussian processes"},
      {"optimize", "Solve the open-loop light schedule problem"},
      {"metrics", "Compute batch yields and productivity from a CSV file"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Random seed (u64)");
    sub->add_option("--out", out_dir, "Output directory")->capture_default_str();
  }

  CLI11_PARSE(app, argc, argv);

  const CLI::App* chosen = app.get_subcommands().front();
  std::optional<std::filesystem::path> config;
  if (!config_path.empty()) config = config_path;
  std::optional<std::uint64_t> seed_opt;
  if (chosen->count("--seed") > 0) seed_opt = seed;

  try {
    const auto rc = optoatp::cli::make_run_config(chosen->get_name(), config, seed_opt, out_dir);
    return optoatp::cli::run(rc, std::cerr);
  } catch (const optoatp::Error& e) {
    std::cerr << "optoatp " << chosen->get_name() << ": " << e.what() << '\n';
    return static_cast<int>(e.code());
  }
}
