#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "phasedyn/netmodel.hpp"

namespace phasedyn {

/// Shunt fault to ground through `impedance_ohm` on each listed phase.
struct ApplyFault {
	std::string id;
	std::string bus;
	PhaseSet phases;
	Complex impedance_ohm;
};

struct ClearFault {
	std::string id;
};

struct SwitchOperation {
	std::string id;
	SwitchStatus status = SwitchStatus::Open;
};

/// Sets the multiplier on the nominal power of every load at `bus`.
/// Phases without a value keep their current multiplier.
struct ScaleLoad {
	std::string bus;
	std::array<std::optional<double>, 3> multiplier;
};

/// Replaces the constant power injection at `bus` (MW / MVAr per phase).
struct SetInjection {
	std::string bus;
	PhaseValues s_mva{};
};

using Action = std::variant<ApplyFault, ClearFault, SwitchOperation, ScaleLoad, SetInjection>;

struct Event {
	double time = 0.0; ///< seconds
	Action action;
};

using Scenario = std::vector<Event>;

/// Accepts a top-level array of events or an object with an "events" array.
/// Each event carries `time_s` or `time_cycles` and an `action` name.
Scenario parse_scenario(const nlohmann::json& doc);
Scenario load_scenario(const std::filesystem::path& path);

/// Throws UnknownReference when an event names a bus, switch, load or fault
/// that does not exist (faults must be applied before they are cleared).
void check_scenario(const Scenario& sc, const Network& net);

/// Fault shunt admittance in p.u.: bus base impedance over the fault impedance.
Complex fault_admittance_pu(const Network& net, const std::string& bus, Complex impedance_ohm);

/// Mutates the network in place. Throws UnknownReference.
void apply_event(Network& net, const Event& ev);

/// One-line human description, used in run logs.
std::string describe(const Event& ev);

} // namespace phasedyn
