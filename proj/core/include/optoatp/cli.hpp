#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

namespace optoatp::cli {

inline constexpr const char* kVersion = OPTOATP_VERSION;

// Subcommands: simulate, fit, residuals, train-gp, optimize, metrics.
struct RunConfig {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  // Relative paths inside `config` are resolved against this directory.
  std::filesystem::path base_dir = ".";
  std::optional<std::uint64_t> seed;
  std::filesystem::path out_dir = ".";
};

// Reads --config from disk (base_dir becomes its parent directory).
RunConfig make_run_config(std::string command, const std::optional<std::filesystem::path>& config_path,
                          std::optional<std::uint64_t> seed, std::filesystem::path out_dir);

// Executes one command and writes its artifacts under out_dir. Returns the
// process exit status: 0 ok, 2 data, 3 numerical, 4 infeasible, 5 config,
// 1 for anything unexpected. Errors are reported on `log`.
int run(const RunConfig& config, std::ostream& log);

}  // namespace optoatp::cli
