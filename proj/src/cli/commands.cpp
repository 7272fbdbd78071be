#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>

#include <nlohmann/json.hpp>

#include "phasedyn/cli.hpp"
#include "phasedyn/csv.hpp"
#include "phasedyn/errors.hpp"
#include "phasedyn/scenario.hpp"

namespace phasedyn::cli {

using nlohmann::json;

namespace {

const char* interface_name(MachineInterface m) {
	return m == MachineInterface::Compensated ? "compensated" : "fixed-voltage";
}

json config_json(const RunManifest& m) {
	const EngineConfig& c = m.config;
	return {
		{"network", m.network.string()},
		{"scenario", m.scenario ? json(m.scenario->string()) : json(nullptr)},
		{"dt_s", c.dt},
		{"eps_s", c.epsilon()},
		{"duration_s", c.duration},
		{"record", c.record},
		{"machine_interface", interface_name(c.interface)},
		{"workers", c.workers},
		{"solver_tolerance", c.solve.tolerance},
		{"solver_max_iterations", c.solve.max_iterations},
		{"low_voltage_threshold_pu", c.solve.low_voltage_threshold},
	};
}

} // namespace

int cmd_run(const RunManifest& m, std::ostream& out, std::ostream& err) {
	Network net;
	Scenario scenario;
	try {
		net = load_network(m.network);
		if (m.scenario)
			scenario = load_scenario(*m.scenario);
		std::filesystem::create_directories(m.out_dir);
	} catch (const std::exception& e) {
		err << "error: " << e.what() << '\n';
		return 1;
	}

	RunResult result;
	try {
		result = run(net, scenario, m.config);
	} catch (const std::exception& e) {
		err << "error: " << e.what() << '\n';
		return 1;
	}

	try {
		write_csv(m.out_dir / "trajectories.csv", result.series, result.failure_message);
		json summary = {
			{"status", result.ok() ? "ok" : "failed"},
			{"config", config_json(m)},
			{"events", result.event_log},
			{"samples", result.series.rows()},
			{"solver",
			 {{"steps", result.stats.steps},
			  {"network_solves", result.stats.network_solves},
			  {"newton_iterations", result.stats.newton_iterations},
			  {"worst_mismatch_pu", result.stats.worst_mismatch}}},
			{"wall_time_s", result.stats.wall_seconds},
		};
		if (!result.ok()) {
			summary["error"] = result.failure_message;
			summary["failure_time_s"] = result.failure_time;
		}
		std::vector<std::string> plots;
		if (m.plots)
			for (const auto& p : write_plots(result.series, m.out_dir))
				plots.push_back(p.filename().string());
		summary["plots"] = plots;
		std::ofstream(m.out_dir / "run_summary.json") << summary.dump(2) << '\n';
	} catch (const std::exception& e) {
		err << "error: " << e.what() << '\n';
		return 1;
	}

	if (!result.ok()) {
		err << "error: " << result.failure_message << '\n';
		return 1;
	}
	out << "simulated " << m.config.duration << " s in " << result.stats.steps << " steps ("
	    << std::setprecision(3) << result.stats.wall_seconds << " s wall); output in " << m.out_dir.string() << '\n';
	return 0;
}

int cmd_validate(const std::filesystem::path& path, std::ostream& out) {
	std::ifstream in(path);
	if (!in) {
		out << path.string() << ": parse error: cannot open file\n";
		return 1;
	}
	json doc;
	try {
		doc = json::parse(in);
	} catch (const json::parse_error& e) {
		out << path.string() << ": parse error: " << e.what() << '\n';
		return 1;
	}
	Network net;
	try {
		net = parse_network(doc);
	} catch (const ParseError& e) {
		out << path.string() << ": parse error: " << e.what() << '\n';
		return 1;
	} catch (const Error& e) {
		out << path.string() << ": " << e.what() << '\n';
		return 1;
	}

	const auto c = count_components(net);
	out << c.buses << " buses, " << c.lines_3ph + c.lines_2ph + c.lines_1ph << " lines, "
	    << c.transformers_3ph + c.transformers_1ph << " transformers, " << c.loads << " loads\n";
	out << "  lines: " << c.lines_3ph << " three-phase, " << c.lines_2ph << " two-phase, " << c.lines_1ph
	    << " single-phase\n";
	out << "  transformers: " << c.transformers_3ph << " three-phase, " << c.transformers_1ph << " single-phase\n";
	out << "  " << c.switches << " switches, " << c.sources << " sources, " << c.injections << " injections, "
	    << c.machines << " machines\n";
	const auto islands = energized_islands(net);
	out << islands.size() << " island(s)\n";
	for (std::size_t k = 0; k < islands.size(); ++k) {
		const auto& isl = islands[k];
		out << "  island " << k + 1 << " (" << (isl.energized ? "energized" : "de-energized") << ", "
		    << isl.buses.size() << " buses):";
		for (std::size_t j = 0; j < isl.buses.size() && j < 12; ++j)
			out << ' ' << isl.buses[j];
		if (isl.buses.size() > 12)
			out << " ...";
		out << '\n';
	}
	out << "no problems found\n";
	return 0;
}

int cmd_compare(const std::filesystem::path& a, const std::filesystem::path& b, const std::vector<std::string>& columns,
                const std::filesystem::path& json_out, std::ostream& out, std::ostream& err) {
	Comparison cmp;
	try {
		cmp = compare(read_csv(a), read_csv(b), columns);
	} catch (const std::exception& e) {
		err << "error: " << e.what() << '\n';
		return 1;
	}
	std::size_t width = 6;
	for (const auto& c : cmp.columns)
		width = std::max(width, c.column.size());
	out << std::left << std::setw(static_cast<int>(width)) << "column" << "  " << std::setw(14) << "rmse"
	    << "correlation\n";
	json rows = json::array();
	for (const auto& c : cmp.columns) {
		out << std::left << std::setw(static_cast<int>(width)) << c.column << "  " << std::setw(14)
		    << std::setprecision(6) << c.rmse;
		if (std::isnan(c.correlation))
			out << "n/a\n";
		else
			out << std::setprecision(9) << c.correlation << '\n';
		rows.push_back({{"column", c.column},
		                {"rmse", c.rmse},
		                {"correlation", std::isnan(c.correlation) ? json(nullptr) : json(c.correlation)}});
	}
	out << cmp.samples << " common samples\n";
	try {
		std::ofstream os(json_out);
		if (!os)
			throw Error("cannot write '" + json_out.string() + "'");
		os << json{{"a", a.string()}, {"b", b.string()}, {"samples", cmp.samples}, {"columns", rows}}.dump(2) << '\n';
	} catch (const std::exception& e) {
		err << "error: " << e.what() << '\n';
		return 1;
	}
	return 0;
}

} // namespace phasedyn::cli
