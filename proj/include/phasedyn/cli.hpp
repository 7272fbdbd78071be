#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "phasedyn/engine.hpp"

namespace phasedyn::cli {

struct RunManifest {
	std::filesystem::path network;
	std::optional<std::filesystem::path> scenario;
	std::filesystem::path out_dir = "out";
	EngineConfig config;
	bool plots = true;
};

/// Runs a simulation and writes trajectories.csv, run_summary.json and one
/// SVG per quantity group into out_dir. Returns the process exit status.
int cmd_run(const RunManifest& m, std::ostream& out, std::ostream& err);

/// Prints component counts, islands and every problem found. Returns 0 for a
/// valid file.
int cmd_validate(const std::filesystem::path& network, std::ostream& out);

/// Prints per-column RMSE and correlation and writes them to json_out.
int cmd_compare(const std::filesystem::path& a, const std::filesystem::path& b, const std::vector<std::string>& columns,
                const std::filesystem::path& json_out, std::ostream& out, std::ostream& err);

/// One SVG line chart per quantity group (speed, angle, torque, voltage
/// magnitude, voltage angle). Returns the files written.
std::vector<std::filesystem::path> write_plots(const TimeSeries& ts, const std::filesystem::path& dir);

} // namespace phasedyn::cli
