#pragma once

#include "ferroservo/closed_loop.hpp"
#include "ferroservo/energy.hpp"
#include "ferroservo/harness.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ferroservo {

inline constexpr std::string_view kTrajectoryCsvHeader = "t_s,x_mm,y_mm,tx_mm,ty_mm,pattern,err_mm";

/// One CSV line (with newline) for a log row; an absent target leaves
/// tx_mm and ty_mm empty.
std::string trajectory_csv_row(const LogRow& row);
std::string trajectory_csv(const TrajectoryLog& log);

/// {path, reps, mean_err_um, std_err_um, max_err_um, mean_v_ums, std_v_ums, max_v_ums}
std::string stats_json(std::string_view path_name, int reps, const PathStats& stats);

std::string sweep_csv(const std::vector<SweepRow>& rows);
std::string energy_csv(const std::vector<energy::EnergySample>& samples);

/// One NDJSON-ready object (no newline) describing a tick.
std::string state_event_json(const LogRow& row);

void write_text(const std::filesystem::path& file, std::string_view text);

}  // namespace ferroservo
