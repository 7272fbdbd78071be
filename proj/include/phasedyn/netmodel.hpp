#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "phasedyn/machine.hpp"
#include "phasedyn/types.hpp"

namespace phasedyn {

/// Per-unit helpers. Per-phase quantities are expressed on a per-phase base of
/// mva_base / 3, so a balanced set with 1 p.u. on every phase carries 1 p.u.
/// of three-phase power.
double per_phase_mw_to_pu(double mw, double mva_base);
double per_phase_pu_to_mw(double pu, double mva_base);
/// Line-to-line kV squared over MVA.
double base_impedance_ohm(double base_kv, double mva_base);

struct Bus {
	std::string id;
	double base_kv = 0.0;
	PhaseSet phases = PhaseSet::all();
};

/// Phase-coordinate pi-section. Matrices are n x n for n = phases.size().
struct Branch {
	std::string id;
	std::string from;
	std::string to;
	PhaseSet phases = PhaseSet::all();
	Eigen::MatrixXcd series_z;
	/// Total shunt admittance, split half to each end.
	Eigen::MatrixXcd shunt_y;
	bool in_service = true;
};

enum class TransformerConnection { WyeGWyeG, DeltaWyeG, WyeGDelta, SinglePhase };

std::string_view to_string(TransformerConnection c);

struct TransformerBank {
	std::string id;
	std::string from;
	std::string to;
	TransformerConnection connection = TransformerConnection::WyeGWyeG;
	Complex leakage_z;
	/// Off-nominal ratio on the from side.
	double tap = 1.0;
	/// Only meaningful for single-phase banks.
	Phase phase = Phase::A;
	bool in_service = true;
};

struct ZipPhase {
	/// Complex power at 1 p.u. voltage, per-phase p.u.
	Complex s;
	double z_frac = 1.0;
	double i_frac = 0.0;
	double p_frac = 0.0;
};

struct ZipLoad {
	std::string id;
	std::string bus;
	std::array<std::optional<ZipPhase>, 3> phases;
	/// Multiplier on the nominal power of each phase (scenario load steps).
	std::array<double, 3> scale{1.0, 1.0, 1.0};
};

enum class SwitchStatus { Open, Closed };

struct Switch {
	std::string id;
	std::string from;
	std::string to;
	PhaseSet phases = PhaseSet::all();
	SwitchStatus status = SwitchStatus::Closed;
	bool normally_open = false;
};

struct SourceBus {
	std::string bus;
	PhaseValues voltage{};
};

struct ConstantInjection {
	std::string id;
	std::string bus;
	/// Per-phase complex power injected into the bus, per-phase p.u.
	PhaseValues s{};
};

/// Phase-to-ground shunt placed by a scenario fault.
struct FaultShunt {
	std::string id;
	std::string bus;
	PhaseSet phases;
	Complex admittance; ///< p.u. on the bus base
};

struct MachineRecord {
	std::string id;
	std::string bus;
	MachineParams params;
	/// Scheduled three-phase output, p.u. on the system base.
	double p_dispatch = 0.0;
	double v_setpoint = 1.0;
	bool slack = false;
};

class Network {
public:
	double mva_base = 100.0;
	double frequency_hz = kNominalFrequencyHz;
	std::string name;

	std::vector<Bus> buses;
	std::vector<Branch> branches;
	std::vector<TransformerBank> transformers;
	std::vector<ZipLoad> loads;
	std::vector<Switch> switches;
	std::vector<SourceBus> sources;
	std::vector<ConstantInjection> injections;
	std::vector<MachineRecord> machines;
	std::vector<FaultShunt> faults;

	/// Rebuilds the id index. Call after adding buses by hand.
	void reindex();

	std::optional<std::size_t> find_bus(std::string_view id) const;
	/// Throws UnknownReference.
	std::size_t bus_index(std::string_view id) const;
	const Bus& bus(std::string_view id) const { return buses[bus_index(id)]; }

	Switch& switch_by_id(std::string_view id);
	const MachineRecord& machine(std::string_view id) const;

	double base_impedance(std::string_view bus_id) const;

	/// Ids of every problem found; empty when the model is consistent.
	std::vector<std::string> check() const;
	/// Throws ValidationError listing every problem from check().
	void validate() const;

private:
	std::map<std::string, std::size_t, std::less<>> bus_lookup_;
};

/// Parses and validates a network document. All quantities are converted to
/// per-unit; angles are read in degrees.
Network parse_network(const nlohmann::json& doc);
Network load_network(const std::filesystem::path& path);

struct Island {
	std::vector<std::string> buses;
	bool energized = false;
};

/// Connected components over in-service branches and transformers and closed
/// switches. An island is energized iff it holds a source or machine bus.
std::vector<Island> energized_islands(const Network& net);

/// Returns a copy with the switch set to `status`. Throws UnknownReference.
Network apply_switch_action(Network net, std::string_view switch_id, SwitchStatus status);

struct ComponentCounts {
	std::size_t buses = 0;
	std::size_t lines_3ph = 0;
	std::size_t lines_2ph = 0;
	std::size_t lines_1ph = 0;
	std::size_t transformers_3ph = 0;
	std::size_t transformers_1ph = 0;
	std::size_t loads = 0;
	std::size_t switches = 0;
	std::size_t machines = 0;
	std::size_t sources = 0;
	std::size_t injections = 0;
};

ComponentCounts count_components(const Network& net);

} // namespace phasedyn
