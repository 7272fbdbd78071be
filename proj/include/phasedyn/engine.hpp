#pragma once

#include <array>
#include <cmath>
#include <exception>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "phasedyn/errors.hpp"
#include "phasedyn/machine.hpp"
#include "phasedyn/netmodel.hpp"
#include "phasedyn/powerflow.hpp"
#include "phasedyn/scenario.hpp"

namespace phasedyn {

/// How machine terminals enter the network solve.
enum class MachineInterface {
	/// The recovered terminal voltage, corrected by the drop across the
	/// machine's subtransient impedance at the last solved current, is used as
	/// a Thevenin source behind that impedance.
	Compensated,
	/// The recovered terminal voltage is imposed as a fixed bus voltage.
	FixedVoltage,
};

struct EngineConfig {
	double dt = 1.0 / 240.0;
	/// Offset of the first voltage sample before the step end; dt/20 when unset.
	std::optional<double> eps;
	double duration = 1.0;
	/// Entries "gen:<id>", "bus:<id>", "gen:*", "bus:*". Empty records everything.
	std::vector<std::string> record;
	MachineInterface interface = MachineInterface::Compensated;
	/// Threads used for the per-machine stage. Results do not depend on it.
	int workers = 1;
	SolveOptions solve;

	double epsilon() const { return eps.value_or(dt / 20.0); }
	/// Throws ValidationError.
	void validate() const;
};

/// Uniformly sampled trajectories, stored column by column.
class TimeSeries {
public:
	double spacing = 0.0;
	std::vector<double> time;
	std::vector<std::string> columns;
	std::vector<std::vector<double>> data;
	/// Set when the run stopped early.
	bool truncated = false;

	std::size_t rows() const { return time.size(); }
	std::optional<std::size_t> find(std::string_view column) const;
	/// Throws UnknownReference.
	const std::vector<double>& column(std::string_view name) const;
};

std::string speed_column(std::string_view machine);
std::string delta_column(std::string_view machine);
std::string torque_column(std::string_view machine);
std::string vmag_column(std::string_view bus, Phase p);
std::string vang_column(std::string_view bus, Phase p);

struct EngineStats {
	long long steps = 0;
	long long network_solves = 0;
	long long newton_iterations = 0;
	double worst_mismatch = 0.0;
	double wall_seconds = 0.0;
};

struct RunResult {
	TimeSeries series;
	std::vector<std::string> event_log;
	EngineStats stats;
	/// Set when the run aborted; series holds everything recorded before.
	std::exception_ptr failure;
	std::string failure_message;
	double failure_time = 0.0;

	bool ok() const { return !failure; }
	void rethrow_if_failed() const {
		if (failure)
			std::rethrow_exception(failure);
	}
};

/// Implicit trapezoidal step with a fixed-point corrector. Converged when
/// every component moves less than tol * max(1, |x|). Throws
/// IntegrationFailure after max_iter corrector passes.
template <std::size_t N, class F>
std::array<double, N> trapezoidal_step(F&& f, const std::array<double, N>& x0, double h, double tol = 1e-10,
                                       int max_iter = 10) {
	const auto f0 = f(x0);
	std::array<double, N> x;
	for (std::size_t k = 0; k < N; ++k)
		x[k] = x0[k] + h * f0[k];
	for (int it = 0; it < max_iter; ++it) {
		const auto f1 = f(x);
		double worst = 0.0;
		for (std::size_t k = 0; k < N; ++k) {
			const double next = x0[k] + 0.5 * h * (f0[k] + f1[k]);
			if (!std::isfinite(next))
				throw IntegrationFailure("trapezoidal corrector produced a non-finite state");
			worst = std::max(worst, std::abs(next - x[k]) / std::max(1.0, std::abs(next)));
			x[k] = next;
		}
		if (worst <= tol)
			return x;
	}
	throw IntegrationFailure("trapezoidal corrector did not converge in " + std::to_string(max_iter) + " iterations");
}

/// Advances one machine over `h` seconds with the stator current held.
MachineState integrate_step(const MachineState& st, const MachineInputs& u, const Dq0Vector& i,
                            const MachineParams& p, double h);

struct InitializedMachine {
	std::string id;
	MachineState state;
	MachineInputs inputs;
	/// Machine-base rotor-frame current at the initial operating point.
	Dq0Vector current;
};

/// Machine steady states matching the initial power flow.
std::vector<InitializedMachine> initialize_machines(const Network& net, const InitialCondition& ic);

/// Runs the partitioned loop from the balanced initial power flow. Solver
/// and integration failures end the run early; the partial series and the
/// error are returned in the result.
RunResult run(const Network& net, const Scenario& scenario, const EngineConfig& cfg);

} // namespace phasedyn
