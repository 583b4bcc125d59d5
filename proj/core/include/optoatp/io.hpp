#pragma once

// CSV and JSON file formats.
//
// Batch CSV:    t_h,s_G_gpl,B_c_gpl,p_L_gpl[,u_umol_m2_s][,E_VU_g]
// Schedule CSV: interval_start_h,u_umol_m2_s
// Residual CSV: t,s_G,B_c,p_L,E,u_l,w_G,w_c,w_L
//
// Empty cells (or NA) in the batch state columns are missing observations.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "optoatp/dataset.hpp"
#include "optoatp/hybrid.hpp"
#include "optoatp/sim.hpp"

namespace optoatp::io {

struct BatchCsvOptions {
  // Paired schedule file; when absent the u_umol_m2_s column is used.
  std::optional<std::filesystem::path> schedule_path;
  // Interval width used when the schedule comes from the u column.
  double interval_width = 1.0;
  // When false, a file without any light information gets an all-dark schedule.
  bool require_schedule = true;
};

// Parses one batch. The initial state is the first row (E = 0), which must be
// fully observed. Throws DataError naming the unknown column or the offending
// line number.
BatchDataset load_batch_csv(const std::filesystem::path& path, const BatchCsvOptions& options = {});

ControlSchedule load_schedule_csv(const std::filesystem::path& path, double tf);

void write_batch_csv(const std::filesystem::path& path, const BatchDataset& data);
void write_schedule_csv(const std::filesystem::path& path, const ControlSchedule& schedule);

// Writes t_h,s_G_gpl,B_c_gpl,p_L_gpl,E_VU_g,u_umol_m2_s with 12 significant
// digits. `every` > 0 keeps only rows on that time grid (plus the last row).
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& trajectory,
                          double every = 0.0);

void write_residuals_csv(const std::filesystem::path& path, std::span<const ResidualSample> samples);
std::vector<ResidualSample> read_residuals_csv(const std::filesystem::path& path);

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

nlohmann::json to_json(const State& x);
State state_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ControlSchedule& s);
ControlSchedule schedule_from_json(const nlohmann::json& j);
nlohmann::json to_json(const BatchMetrics& m);

}  // namespace optoatp::io
