#include "phasedyn/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <thread>

#include "phasedyn/errors.hpp"
#include "phasedyn/log.hpp"

namespace phasedyn {

void EngineConfig::validate() const {
	if (!(dt > 0.0) || !std::isfinite(dt))
		throw ValidationError("time step must be positive");
	const double e = epsilon();
	if (!(e > 0.0 && e < dt / 10.0))
		throw ValidationError("eps must lie strictly between 0 and dt/10");
	if (!(duration >= 0.0) || !std::isfinite(duration))
		throw ValidationError("duration must be non-negative");
	if (workers < 1)
		throw ValidationError("workers must be at least 1");
}

std::optional<std::size_t> TimeSeries::find(std::string_view name) const {
	for (std::size_t k = 0; k < columns.size(); ++k)
		if (columns[k] == name)
			return k;
	return std::nullopt;
}

const std::vector<double>& TimeSeries::column(std::string_view name) const {
	if (auto k = find(name))
		return data[*k];
	throw UnknownReference("no column '" + std::string(name) + "'");
}

std::string speed_column(std::string_view m) { return "gen." + std::string(m) + ".speed_dev_hz"; }
std::string delta_column(std::string_view m) { return "gen." + std::string(m) + ".delta_rad"; }
std::string torque_column(std::string_view m) { return "gen." + std::string(m) + ".te_pu"; }
std::string vmag_column(std::string_view b, Phase p) {
	return "bus." + std::string(b) + "." + phase_letter(p) + ".vmag_pu";
}
std::string vang_column(std::string_view b, Phase p) {
	return "bus." + std::string(b) + "." + phase_letter(p) + ".vang_rad";
}

MachineState integrate_step(const MachineState& st, const MachineInputs& u, const Dq0Vector& i,
                            const MachineParams& p, double h) {
	auto rhs = [&](const MachineState::Vector& x) { return detail::genrou_rhs(x, i, u, p); };
	return MachineState::from_vector(trapezoidal_step(rhs, st.to_vector(), h));
}

std::vector<InitializedMachine> initialize_machines(const Network& net, const InitialCondition& ic) {
	std::vector<InitializedMachine> out;
	for (std::size_t k = 0; k < net.machines.size(); ++k) {
		const auto& rec = net.machines[k];
		const auto& term = ic.machines.at(k);
		const double to_machine = net.mva_base / rec.params.mva_base;
		try {
			auto init = initialize(term.voltage, term.p * to_machine, term.q * to_machine, rec.params);
			out.push_back({rec.id, init.state, init.inputs, init.current});
		} catch (const Error& e) {
			throw InfeasibleDispatch("machine '" + rec.id + "': " + e.what());
		}
	}
	return out;
}

namespace {

/// Per-machine working data carried between steps.
struct Slot {
	const MachineRecord* rec = nullptr;
	std::size_t bus = 0;
	double to_machine = 1.0; ///< system-base current to machine-base current
	Eigen::Matrix3cd z_sys;
	MachineState state;
	MachineInputs inputs;
	double state_time = 0.0;
	/// Thevenin voltage (compensated) or terminal voltage (fixed), system base.
	PhaseValues boundary{};
	PhaseValues current{}; ///< last solved current, system base
	Dq0Vector idq0;        ///< machine base
	double te = 0.0;
};

Dq0Vector rotor_current(const PhaseValues& current_sys, double to_machine, double t, double delta) {
	const Eigen::Vector3d i_abc = phasors_to_instant(current_sys, t) * to_machine;
	const Dq0Vector i = park(i_abc, shaft_angle(t, delta));
	return {i.d / kSqrt2, i.q / kSqrt2, i.zero / kSqrt2};
}

void check_state(const Slot& s, double t) {
	const auto x = s.state.to_vector();
	for (double v : x)
		if (!std::isfinite(v)) {
			std::ostringstream msg;
			msg << "machine '" << s.rec->id << "': non-finite state at t=" << t << " s";
			throw IntegrationFailure(msg.str());
		}
	const double ws = s.rec->params.omega_s;
	if (!(s.state.omega > 0.5 * ws && s.state.omega < 1.5 * ws)) {
		std::ostringstream msg;
		msg << "machine '" << s.rec->id << "': speed " << s.state.omega << " rad/s left the valid band at t=" << t << " s";
		throw IntegrationFailure(msg.str());
	}
}

/// Integrates the machine through the step ending at t + dt and returns the
/// recovered terminal voltage phasors (system base).
PhaseValues advance_machine(Slot& s, double t, double dt, double eps) {
	const MachineParams& p = s.rec->params;
	const double t1 = t + dt - eps;
	const double t2 = t + dt;
	s.state = integrate_step(s.state, s.inputs, s.idq0, p, t1 - s.state_time);
	s.state_time = t1;
	check_state(s, t1);

	// the states at t2 are taken equal to those at t1
	const double delta = s.state.delta;
	const Dq0Vector i1 = rotor_current(s.current, s.to_machine, t1, delta);
	const Dq0Vector i2 = rotor_current(s.current, s.to_machine, t2, delta);
	const Dq0Vector v1 = stator_voltages(flux_linkages(s.state, i1, p), i1, s.state.omega, p);
	const Dq0Vector v2 = stator_voltages(flux_linkages(s.state, i2, p), i2, s.state.omega, p);
	const Eigen::Vector3d abc1 = kSqrt2 * abc_instant_from_dq0(v1, shaft_angle(t1, delta));
	const Eigen::Vector3d abc2 = kSqrt2 * abc_instant_from_dq0(v2, shaft_angle(t2, delta));

	PhaseValues v{};
	for (int k = 0; k < 3; ++k)
		v[k] = recover_phasor({abc1(k), abc2(k), t1, t2}).to_complex();
	return v;
}

struct Recorder {
	std::vector<std::size_t> machines;
	std::vector<std::size_t> buses;
	TimeSeries series;
};

Recorder make_recorder(const Network& net, const EngineConfig& cfg) {
	Recorder r;
	std::vector<bool> m_on(net.machines.size(), false);
	std::vector<bool> b_on(net.buses.size(), false);
	if (cfg.record.empty()) {
		m_on.assign(m_on.size(), true);
		b_on.assign(b_on.size(), true);
	}
	for (const auto& spec : cfg.record) {
		if (spec == "gen:*") {
			m_on.assign(m_on.size(), true);
		} else if (spec == "bus:*") {
			b_on.assign(b_on.size(), true);
		} else if (spec.rfind("gen:", 0) == 0) {
			const auto id = spec.substr(4);
			bool found = false;
			for (std::size_t k = 0; k < net.machines.size(); ++k)
				if (net.machines[k].id == id) {
					m_on[k] = true;
					found = true;
				}
			if (!found)
				throw UnknownReference("record: unknown machine '" + id + "'");
		} else if (spec.rfind("bus:", 0) == 0) {
			b_on[net.bus_index(spec.substr(4))] = true;
		} else {
			throw ParseError("record entry \"" + spec + "\" must look like gen:<id>, bus:<id>, gen:* or bus:*");
		}
	}
	for (std::size_t k = 0; k < m_on.size(); ++k)
		if (m_on[k]) {
			r.machines.push_back(k);
			const auto& id = net.machines[k].id;
			r.series.columns.insert(r.series.columns.end(), {speed_column(id), delta_column(id), torque_column(id)});
		}
	for (std::size_t k = 0; k < b_on.size(); ++k)
		if (b_on[k]) {
			r.buses.push_back(k);
			for (Phase p : kAllPhases)
				if (net.buses[k].phases.contains(p)) {
					r.series.columns.push_back(vmag_column(net.buses[k].id, p));
					r.series.columns.push_back(vang_column(net.buses[k].id, p));
				}
		}
	r.series.data.resize(r.series.columns.size());
	r.series.spacing = cfg.dt;
	return r;
}

void record_row(Recorder& r, const Network& net, double t, const std::vector<Slot>& slots,
                const std::vector<PhaseValues>& voltages) {
	auto& s = r.series;
	s.time.push_back(t);
	std::size_t c = 0;
	for (auto k : r.machines) {
		const Slot& m = slots[k];
		s.data[c++].push_back((m.state.omega - m.rec->params.omega_s) / (2.0 * kPi));
		s.data[c++].push_back(m.state.delta);
		s.data[c++].push_back(m.te);
	}
	for (auto b : r.buses)
		for (Phase p : kAllPhases) {
			if (!net.buses[b].phases.contains(p))
				continue;
			const Complex v = voltages[b][static_cast<int>(p)];
			s.data[c++].push_back(std::abs(v));
			s.data[c++].push_back(v == Complex(0.0) ? 0.0 : std::arg(v));
		}
}

/// Runs fn(k) for every machine, spread over `workers` threads.
template <class Fn>
void for_each_machine(std::size_t count, int workers, Fn&& fn) {
	std::vector<std::exception_ptr> errors(count);
	auto body = [&](std::size_t begin, std::size_t end) {
		for (std::size_t k = begin; k < end; ++k) {
			try {
				fn(k);
			} catch (...) {
				errors[k] = std::current_exception();
			}
		}
	};
	const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(workers), count);
	if (threads <= 1) {
		body(0, count);
	} else {
		std::vector<std::thread> pool;
		const std::size_t chunk = (count + threads - 1) / threads;
		for (std::size_t w = 0; w < threads; ++w)
			pool.emplace_back(body, w * chunk, std::min(count, (w + 1) * chunk));
		for (auto& th : pool)
			th.join();
	}
	// first failure in machine order, independent of scheduling
	for (auto& e : errors)
		if (e)
			std::rethrow_exception(e);
}

} // namespace

RunResult run(const Network& net_in, const Scenario& scenario, const EngineConfig& cfg) {
	cfg.validate();
	check_scenario(scenario, net_in);
	const auto wall_start = std::chrono::steady_clock::now();

	const double dt = cfg.dt;
	const double eps = cfg.epsilon();
	const auto steps = static_cast<long long>(std::llround(cfg.duration / dt));

	std::vector<std::pair<long long, const Event*>> due;
	for (const auto& ev : scenario) {
		const auto k = static_cast<long long>(std::llround(ev.time / dt));
		if (k > steps) {
			std::ostringstream msg;
			msg << "event at t=" << ev.time << " s lies beyond the run duration " << cfg.duration << " s";
			throw ValidationError(msg.str());
		}
		due.emplace_back(k, &ev);
	}

	Network net = net_in;
	const InitialCondition ic = initial_powerflow(net, cfg.solve);
	const auto init = initialize_machines(net, ic);

	std::vector<Slot> slots(net.machines.size());
	for (std::size_t k = 0; k < slots.size(); ++k) {
		Slot& s = slots[k];
		s.rec = &net.machines[k];
		s.bus = net.bus_index(s.rec->bus);
		s.to_machine = net.mva_base / s.rec->params.mva_base;
		s.z_sys = machine_impedance_abc(s.rec->params, net.mva_base);
		s.state = init[k].state;
		s.inputs = init[k].inputs;
		s.current = ic.machines[k].current;
		const PhaseValues v = ic.solution.voltages[s.bus];
		if (cfg.interface == MachineInterface::Compensated) {
			const Eigen::Vector3cd e = Eigen::Vector3cd(v[0], v[1], v[2]) +
				s.z_sys * Eigen::Vector3cd(s.current[0], s.current[1], s.current[2]);
			s.boundary = {e(0), e(1), e(2)};
		} else {
			s.boundary = v;
		}
	}

	RunResult result;
	Recorder rec = make_recorder(net, cfg);
	std::vector<PhaseValues> voltages = ic.solution.voltages;
	std::size_t next_event = 0;

	auto apply_due = [&](long long k) {
		while (next_event < due.size() && due[next_event].first == k) {
			apply_event(net, *due[next_event].second);
			result.event_log.push_back(describe(*due[next_event].second));
			log_info([&](std::ostream& os) { os << result.event_log.back(); });
			++next_event;
		}
	};

	double t = 0.0;
	try {
		apply_due(0);
		for (long long k = 0;; ++k) {
			t = static_cast<double>(k) * dt;

			BoundaryConditions bc;
			for (const Slot& s : slots) {
				if (cfg.interface == MachineInterface::Compensated)
					bc.thevenin.push_back({s.rec->bus, s.boundary, s.z_sys});
				else
					bc.fixed[s.rec->bus] = s.boundary;
			}
			SolveOptions opt = cfg.solve;
			opt.warm_start = &voltages;
			const NetworkSolution sol = solve_network(net, bc, opt);
			voltages = sol.voltages;
			++result.stats.network_solves;
			result.stats.newton_iterations += sol.iterations;
			result.stats.worst_mismatch = std::max(result.stats.worst_mismatch, sol.max_mismatch);

			for (std::size_t m = 0; m < slots.size(); ++m) {
				Slot& s = slots[m];
				s.current = cfg.interface == MachineInterface::Compensated ? sol.thevenin_currents[m]
				                                                          : sol.source_currents.at(s.rec->bus);
				s.idq0 = rotor_current(s.current, s.to_machine, t, s.state.delta);
				s.te = electrical_torque(flux_linkages(s.state, s.idq0, s.rec->params), s.idq0);
			}
			record_row(rec, net, t, slots, voltages);
			if (k == steps)
				break;

			for_each_machine(slots.size(), cfg.workers, [&](std::size_t m) {
				Slot& s = slots[m];
				const PhaseValues v = advance_machine(s, t, dt, eps);
				if (cfg.interface == MachineInterface::Compensated) {
					const Eigen::Vector3cd e = Eigen::Vector3cd(v[0], v[1], v[2]) +
						s.z_sys * Eigen::Vector3cd(s.current[0], s.current[1], s.current[2]);
					s.boundary = {e(0), e(1), e(2)};
				} else {
					s.boundary = v;
				}
			});
			apply_due(k + 1);
			++result.stats.steps;
		}
	} catch (const Error& e) {
		result.failure = std::current_exception();
		std::ostringstream msg;
		msg << "run aborted at t=" << t << " s: " << e.what();
		result.failure_message = msg.str();
		result.failure_time = t;
		rec.series.truncated = true;
		log_warn([&](std::ostream& os) { os << result.failure_message; });
	}

	result.series = std::move(rec.series);
	result.stats.wall_seconds =
		std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
	return result;
}

} // namespace phasedyn
