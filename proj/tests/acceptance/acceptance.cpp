// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Tolerances are fixed here and must not be relaxed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "oracles/smib_oracle.hpp"
#include "phasedyn/csv.hpp"
#include "phasedyn/engine.hpp"
#include "phasedyn/errors.hpp"
#include "phasedyn/frames.hpp"
#include "phasedyn/metrics.hpp"
#include "phasedyn/powerflow.hpp"

using namespace phasedyn;

namespace {

std::filesystem::path data(const std::string& name) { return std::filesystem::path(PHASEDYN_DATA_DIR) / name; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
	return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool is_speed(const std::string& c) { return c.find(".speed_dev_hz") != std::string::npos; }
bool is_vmag(const std::string& c) { return c.find(".vmag_pu") != std::string::npos; }

struct Outcome {
	bool pass = false;
	std::string detail;
};

Outcome criterion_1() {
	const auto t0 = std::chrono::steady_clock::now();
	std::mt19937_64 gen(1);
	std::uniform_real_distribution<double> mag(0.01, 10.0), ang(-kPi, kPi), time(0.0, 2.0), gap(0.0005, 0.05);
	double worst_mag = 0.0, worst_ang = 0.0;
	int checked = 0;
	while (checked < 10000) {
		const Phasor truth(mag(gen), ang(gen));
		const double t1 = time(gen), t2 = t1 + gap(gen);
		if (std::abs(std::sin(kSynchronousSpeed * (t2 - t1))) < 1e-3)
			continue;
		const Phasor got = recover_phasor({phasor_to_instant(truth, t1), phasor_to_instant(truth, t2), t1, t2});
		worst_mag = std::max(worst_mag, std::abs(got.magnitude - truth.magnitude));
		worst_ang = std::max(worst_ang, std::abs(normalize_angle(got.angle - truth.angle)));
		++checked;
	}
	int rejected = 0;
	const int singular = 200;
	for (int k = 0; k < singular; ++k) {
		const double t1 = time(gen);
		const double off = std::uniform_real_distribution<double>(-0.9e-6, 0.9e-6)(gen);
		const double t2 = t1 + ((k % 4) * kPi + off) / kSynchronousSpeed;
		try {
			recover_phasor({1.0, 0.5, t1, t2});
		} catch (const SingularSampling&) {
			++rejected;
		}
	}
	const double wall = seconds_since(t0);
	char buf[200];
	std::snprintf(buf, sizeof buf, "max error %.2e mag, %.2e rad; %d/%d singular pairs rejected; %.3f s", worst_mag,
	              worst_ang, rejected, singular, wall);
	return {worst_mag < 1e-9 && worst_ang < 1e-9 && rejected == singular && wall < 5.0, buf};
}

struct OracleMatch {
	bool ok = false;
	double rmse = 0.0;
	double correlation = 0.0;
	std::string error;
};

OracleMatch against_oracle(double dt) {
	oracle::SmibSetup s;
	s.fixture = data("smib.json");
	s.load_bus = "HV";
	s.load_steps = {{0.1, 2.0}};
	s.duration = 2.0;
	s.sample_spacing = dt;
	s.substeps = 4;
	const oracle::SmibRun ref = oracle::simulate_smib(s);

	EngineConfig cfg;
	cfg.dt = dt;
	cfg.duration = 2.0;
	cfg.record = {"gen:G1"};
	const RunResult r = run(load_network(data("smib.json")), load_scenario(data("scenarios/smib_balanced_step.json")), cfg);
	if (!r.ok())
		return {false, 0.0, 0.0, "engine run failed: " + r.failure_message};
	const auto& w = r.series.column(speed_column("G1"));
	if (w.size() != ref.speed_dev_hz.size())
		return {false, 0.0, 0.0, "sample counts differ"};
	return {true, rmse(w, ref.speed_dev_hz), correlation(w, ref.speed_dev_hz), {}};
}

Outcome criterion_2() {
	// The engine holds the stator current over a step, which makes its error
	// first order in dt. The check runs at 20 samples per cycle; the default
	// step is reported alongside for reference only.
	const OracleMatch fine = against_oracle(1.0 / 1200.0);
	if (!fine.ok)
		return {false, fine.error};
	const OracleMatch coarse = against_oracle(1.0 / 240.0);
	char buf[220];
	std::snprintf(buf, sizeof buf, "speed RMSE %.3e Hz, correlation %.6f at dt 1/1200 s (at 1/240 s: %.3e Hz, %.6f)",
	              fine.rmse, fine.correlation, coarse.rmse, coarse.correlation);
	return {fine.rmse < 1e-3 && fine.correlation > 0.999, buf};
}

Outcome criterion_3() {
	EngineConfig cfg;
	cfg.duration = 10.0;
	cfg.record = {"gen:G1"};
	const RunResult r = run(load_network(data("smib.json")), load_scenario(data("scenarios/smib_phase_a_step.json")), cfg);
	if (!r.ok())
		return {false, "run failed: " + r.failure_message};
	// last second, after the swing excited by the step has decayed
	const auto& w = r.series.column(speed_column("G1"));
	const std::size_t n = static_cast<std::size_t>(std::llround(1.0 / cfg.dt));
	const double f = dominant_frequency(std::span(w).last(n), r.series.spacing);
	char buf[120];
	std::snprintf(buf, sizeof buf, "dominant speed frequency %.3f Hz over 9-10 s", f);
	return {f >= 118.0 && f <= 122.0, buf};
}

Outcome criterion_4() {
	const Network net = load_network(data("ieee39.json"));
	const Scenario sc = load_scenario(data("scenarios/ieee39_case1.json"));
	EngineConfig a;
	a.duration = 2.0;
	EngineConfig b = a;
	b.eps = a.dt / 100.0;
	const RunResult ra = run(net, sc, a), rb = run(net, sc, b);
	if (!ra.ok() || !rb.ok())
		return {false, "run failed"};
	double worst_v = 0.0, worst_w = 0.0;
	for (const auto& c : compare(ra.series, rb.series).columns) {
		if (is_vmag(c.column))
			worst_v = std::max(worst_v, c.rmse);
		if (is_speed(c.column))
			worst_w = std::max(worst_w, c.rmse);
	}
	char buf[160];
	std::snprintf(buf, sizeof buf, "eps dt/20 vs dt/100: voltage RMSE %.2e pu, speed RMSE %.2e Hz", worst_v, worst_w);
	return {worst_v < 1e-4 && worst_w < 1e-4, buf};
}

Outcome criterion_5() {
	const Network net = load_network(data("ieee39.json"));
	const Scenario sc = load_scenario(data("scenarios/ieee39_case1.json"));
	EngineConfig a;
	a.duration = 20.0;
	a.record = {"gen:*"};
	EngineConfig b = a;
	b.dt = a.dt / 2.0;
	const RunResult ra = run(net, sc, a), rb = run(net, sc, b);
	if (!ra.ok() || !rb.ok())
		return {false, "run failed"};
	double worst = 0.0;
	for (const auto& c : compare(ra.series, rb.series).columns)
		if (is_speed(c.column))
			worst = std::max(worst, c.rmse);
	double drift = 0.0;
	for (const RunResult* r : {&ra, &rb})
		for (std::size_t c = 0; c < r->series.columns.size(); ++c) {
			if (!is_speed(r->series.columns[c]))
				continue;
			const auto& d = r->series.data[c];
			const std::size_t n = static_cast<std::size_t>(std::llround(1.0 / r->series.spacing));
			const auto tail = std::span(d).last(n + 1);
			const auto [lo, hi] = std::minmax_element(tail.begin(), tail.end());
			drift = std::max(drift, *hi - *lo);
		}
	char buf[200];
	std::snprintf(buf, sizeof buf, "dt 1/240 vs 1/480 over 20 s: worst speed RMSE %.2e Hz, final 1 s drift %.2e Hz",
	              worst, drift);
	return {worst < 5e-4 && drift < 1e-3, buf};
}

Outcome criterion_6() {
	const Network net = load_network(data("two_feeder_substation.json"));
	EngineConfig cfg;
	cfg.duration = 4.0;
	const RunResult r = run(net, load_scenario(data("scenarios/two_feeder_fault.json")), cfg);
	if (!r.ok())
		return {false, "run failed: " + r.failure_message};
	const double t_clear = 1.0, t_close = 1.5, settled = t_close + 2.0, t_pre = 0.8;
	const TimeSeries& ts = r.series;
	const auto at = [&](double t) { return static_cast<std::size_t>(std::llround(t / ts.spacing)); };

	bool zero = true;
	int zero_checked = 0;
	for (std::size_t c = 0; c < ts.columns.size(); ++c) {
		const std::string& col = ts.columns[c];
		if (!is_vmag(col))
			continue;
		const bool fdr2 = col.rfind("bus.F60.", 0) == 0 || col.rfind("bus.FDR2_", 0) == 0;
		if (!fdr2)
			continue;
		for (std::size_t k = at(t_clear) + 1; k < at(t_close); ++k) {
			zero = zero && ts.data[c][k] == 0.0;
			++zero_checked;
		}
	}

	// X60 is the faulted section; it stays isolated after restoration
	double worst_v = 0.0, worst_w = 0.0;
	for (std::size_t c = 0; c < ts.columns.size(); ++c) {
		const std::string& col = ts.columns[c];
		if (col.rfind("bus.X60.", 0) == 0)
			continue;
		const bool v = is_vmag(col), w = is_speed(col);
		if (!v && !w)
			continue;
		const double pre = ts.data[c][at(t_pre)];
		for (std::size_t k = at(settled); k < ts.rows(); ++k)
			(v ? worst_v : worst_w) = std::max(v ? worst_v : worst_w, std::abs(ts.data[c][k] - pre));
	}
	char buf[220];
	std::snprintf(buf, sizeof buf,
	              "feeder 2 exactly zero while open: %s (%d samples); after %.1f s worst deviation %.2e pu, %.2e Hz",
	              zero ? "yes" : "no", zero_checked, settled, worst_v, worst_w);
	return {zero && zero_checked > 0 && worst_v < 1e-3 && worst_w < 1e-3, buf};
}

Outcome criterion_7() {
	double worst_speed = 0.0, worst_v = 0.0;
	for (const char* f : {"smib.json", "ieee39.json", "two_feeder_substation.json"}) {
		EngineConfig cfg;
		cfg.duration = 5.0;
		const RunResult r = run(load_network(data(f)), {}, cfg);
		if (!r.ok())
			return {false, std::string(f) + ": " + r.failure_message};
		for (std::size_t c = 0; c < r.series.columns.size(); ++c) {
			const auto& d = r.series.data[c];
			for (double x : d) {
				if (is_speed(r.series.columns[c]))
					worst_speed = std::max(worst_speed, 2.0 * kPi * std::abs(x));
				if (is_vmag(r.series.columns[c]))
					worst_v = std::max(worst_v, std::abs(x - d.front()));
			}
		}
	}
	const double limit = 1e-6 * kSynchronousSpeed;
	char buf[200];
	std::snprintf(buf, sizeof buf, "5 s, all fixtures: speed deviation %.2e rad/s (limit %.2e), voltage change %.2e pu",
	              worst_speed, limit, worst_v);
	return {worst_speed < limit && worst_v < 1e-6, buf};
}

Outcome criterion_8() {
	double worst_kcl = 0.0;
	for (const char* f : {"smib.json", "ieee39.json", "two_feeder_substation.json"}) {
		const Network net = load_network(data(f));
		const InitialCondition ic = initial_powerflow(net);
		BoundaryConditions bc;
		for (const auto& m : ic.machines)
			bc.fixed[net.machine(m.id).bus] = m.voltage.to_complex();
		worst_kcl = std::max(worst_kcl, kcl_residual(net, bc, ic.solution));
	}
	const SolverAudit audit = solver_audit();

	nlohmann::json doc = {
		{"mva_base", 100.0},
		{"buses", {{{"id", "S"}, {"base_kv", 12.47}}, {{"id", "L"}, {"base_kv", 12.47}}}},
		{"sources", {{{"bus", "S"}, {"v_pu", 1.0}, {"angle_deg", 0.0}}}},
		{"branches", {{{"id", "LN"}, {"from", "S"}, {"to", "L"}, {"z1", {0.0, 0.1}}, {"z0", {0.0, 0.1}}}}},
		{"loads", {{{"id", "LD"}, {"bus", "L"}, {"p_mw", 100.0}, {"q_mvar", 0.0}, {"zip", {{"z", 1.0}}}}}},
	};
	const Network div = parse_network(doc);
	const NetworkSolution sol = solve_network(div, {});
	const Complex expected = 1.0 / Complex(1.0, 0.1);
	double divider = 0.0;
	for (Phase p : kAllPhases)
		divider = std::max(divider, std::abs(sol.voltages[1][static_cast<int>(p)] -
		                                     expected * std::polar(1.0, phase_shift(p))));
	char buf[220];
	std::snprintf(buf, sizeof buf, "worst mismatch over %lld solves %.2e pu; initial-state KCL %.2e pu; divider error %.2e",
	              audit.solves, audit.worst_mismatch, worst_kcl, divider);
	return {audit.solves > 0 && audit.worst_mismatch < 1e-8 && worst_kcl < 1e-8 && divider < 1e-9, buf};
}

Outcome criterion_9() {
	EngineConfig cfg;
	cfg.duration = 5.0;
	const auto t0 = std::chrono::steady_clock::now();
	const RunResult r = run(load_network(data("ieee39.json")), load_scenario(data("scenarios/ieee39_case1.json")), cfg);
	const double wall = seconds_since(t0);
	char buf[120];
	std::snprintf(buf, sizeof buf, "IEEE 39-bus, 5 s at 4 samples/cycle: %.2f s wall", wall);
	return {r.ok() && wall < 60.0, buf};
}

} // namespace

int main() {
	reset_solver_audit();
	const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
		{"1 phasor recovery", criterion_1},
		{"2 balanced equivalence", criterion_2},
		{"3 unbalance signature", criterion_3},
		{"4 eps robustness", criterion_4},
		{"5 self-convergence", criterion_5},
		{"6 fault and restoration", criterion_6},
		{"7 steady-state hold", criterion_7},
		{"8 solver correctness", criterion_8},
		{"9 runtime", criterion_9},
	};
	int failed = 0;
	for (const auto& [name, check] : criteria) {
		Outcome o;
		try {
			o = check();
		} catch (const std::exception& e) {
			o = {false, std::string("exception: ") + e.what()};
		}
		std::printf("%s  %-24s %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
		std::fflush(stdout);
		failed += o.pass ? 0 : 1;
	}
	return failed == 0 ? 0 : 1;
}
