#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "phasedyn/cli.hpp"

namespace {

std::vector<std::string> split_list(const std::vector<std::string>& items) {
	std::vector<std::string> out;
	for (const auto& item : items) {
		std::stringstream ss(item);
		std::string part;
		while (std::getline(ss, part, ','))
			if (!part.empty())
				out.push_back(part);
	}
	return out;
}

} // namespace

int main(int argc, char** argv) {
	CLI::App app{"Three-phase electromechanical transient simulator"};
	app.require_subcommand(1);

	phasedyn::cli::RunManifest manifest;
	std::string network;
	std::string scenario;
	std::string out_dir = "out";
	double eps = 0.0;
	std::string interface = "compensated";
	std::vector<std::string> record;
	bool no_plots = false;

	auto* run = app.add_subcommand("run", "Simulate a network and scenario");
	run->add_option("--network", network, "Network JSON file")->required();
	run->add_option("--scenario", scenario, "Scenario JSON file (no events when omitted)");
	run->add_option("--dt", manifest.config.dt, "Time step in seconds")->capture_default_str();
	run->add_option("--eps", eps, "Sampling offset before the step end in seconds (default dt/20)");
	run->add_option("--duration", manifest.config.duration, "Simulated time in seconds")->capture_default_str();
	run->add_option("--record", record, "gen:<id>, bus:<id>, gen:* or bus:* (comma separated or repeated)");
	run->add_option("--out", out_dir, "Output directory")->capture_default_str();
	run->add_option("--interface", interface, "Machine coupling: compensated or fixed-voltage")
		->check(CLI::IsMember({"compensated", "fixed-voltage"}))
		->capture_default_str();
	run->add_option("--workers", manifest.config.workers, "Threads for the machine stage")->capture_default_str();
	run->add_flag("--no-plots", no_plots, "Skip the SVG plots");

	std::string validate_path;
	auto* validate = app.add_subcommand("validate", "Check a network file and print a summary");
	validate->add_option("path", validate_path, "Network JSON file")->required();

	std::string csv_a;
	std::string csv_b;
	std::vector<std::string> columns;
	std::string compare_out = "comparison.json";
	auto* compare = app.add_subcommand("compare", "RMSE and correlation between two trajectory files");
	compare->add_option("a", csv_a, "First CSV")->required();
	compare->add_option("b", csv_b, "Second CSV")->required();
	compare->add_option("--columns", columns, "Columns to compare (comma separated; default all shared)");
	compare->add_option("--out", compare_out, "JSON output file")->capture_default_str();

	CLI11_PARSE(app, argc, argv);

	if (*run) {
		manifest.network = network;
		if (!scenario.empty())
			manifest.scenario = scenario;
		manifest.out_dir = out_dir;
		if (run->count("--eps"))
			manifest.config.eps = eps;
		manifest.config.record = split_list(record);
		manifest.config.interface = interface == "fixed-voltage" ? phasedyn::MachineInterface::FixedVoltage
		                                                        : phasedyn::MachineInterface::Compensated;
		manifest.plots = !no_plots;
		return phasedyn::cli::cmd_run(manifest, std::cout, std::cerr);
	}
	if (*validate)
		return phasedyn::cli::cmd_validate(validate_path, std::cout);
	return phasedyn::cli::cmd_compare(csv_a, csv_b, split_list(columns), compare_out, std::cout, std::cerr);
}
