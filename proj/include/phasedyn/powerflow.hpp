#pragma once

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "phasedyn/frames.hpp"
#include "phasedyn/netmodel.hpp"

namespace phasedyn {

/// Maps (bus, phase) to a network node. Buses joined through a closed switch
/// share the node of each switched phase. Absent phases map to -1.
struct NodeIndex {
	std::vector<std::array<int, 3>> bus_nodes;
	int count = 0;

	int node(std::size_t bus, Phase p) const { return bus_nodes[bus][static_cast<int>(p)]; }
};

NodeIndex build_node_index(const Network& net);

struct PhaseYbus {
	Eigen::SparseMatrix<Complex> matrix;
	NodeIndex nodes;
};

/// Admittance matrix over all phase nodes: branches, transformer banks, fault
/// shunts and the constant-impedance part of every load. Machines are not
/// included. Throws SingularNetwork for a branch whose series matrix cannot be
/// inverted.
PhaseYbus assemble_ybus(const Network& net);

/// Voltage `emf` behind a phase-coordinate impedance, connected at `bus`.
struct TheveninSource {
	std::string bus;
	PhaseValues emf{};
	Eigen::Matrix3cd impedance = Eigen::Matrix3cd::Identity();
};

/// Voltage-defining elements for one solve. Source buses from the network
/// are always fixed; `fixed` adds further buses (machine terminals).
struct BoundaryConditions {
	std::map<std::string, PhaseValues, std::less<>> fixed;
	std::vector<TheveninSource> thevenin;
};

struct SolveOptions {
	/// Largest accepted KCL mismatch current at a solved node, p.u.
	double tolerance = 1e-8;
	int max_iterations = 50;
	/// Below this voltage the constant-current and constant-power parts of a
	/// load behave as constant impedance. Zero disables the conversion.
	double low_voltage_threshold = 0.4;
	/// Per-bus voltages of a previous solution. Nodes without a usable value
	/// fall back to the flat start.
	const std::vector<PhaseValues>* warm_start = nullptr;
};

struct NetworkSolution {
	/// Indexed like Network::buses. Absent phases and de-energized nodes are 0.
	std::vector<PhaseValues> voltages;
	/// Current delivered into the network by each fixed bus, keyed by bus id.
	std::map<std::string, PhaseValues, std::less<>> source_currents;
	/// Current delivered by each Thevenin source, in BoundaryConditions order.
	std::vector<PhaseValues> thevenin_currents;
	int iterations = 0;
	double max_mismatch = 0.0;

	ThreePhasePhasor voltage(const Network& net, std::string_view bus) const;
};

/// Newton current-injection solve of every energized node. Nodes with no
/// electrical path to a fixed or Thevenin bus are set to exactly zero.
/// Throws UnsourcedIsland, SingularNetwork and NonConvergence.
NetworkSolution solve_network(const Network& net, const BoundaryConditions& bc, const SolveOptions& opt = {});

/// Largest KCL mismatch over the solved nodes, recomputed element by element
/// from the branch, transformer, load and source currents.
double kcl_residual(const Network& net, const BoundaryConditions& bc, const NetworkSolution& sol,
                    double low_voltage_threshold = 0.4);

/// Worst mismatch reported by any converged solve in this process, and the
/// number of solves. Used to audit solver accuracy across whole runs.
struct SolverAudit {
	long long solves = 0;
	double worst_mismatch = 0.0;
};
SolverAudit solver_audit();
void reset_solver_audit();

struct MachineTerminal {
	std::string id;
	ThreePhasePhasor voltage;
	/// Current delivered by the machine, system base.
	PhaseValues current{};
	/// Three-phase output, p.u. on the system base.
	double p = 0.0;
	double q = 0.0;
};

struct InitialCondition {
	NetworkSolution solution;
	std::vector<MachineTerminal> machines;
	int outer_iterations = 0;
	double max_power_mismatch = 0.0;
};

/// Balanced steady state with every machine bus held at its voltage setpoint.
/// Machine angles are adjusted until each non-slack machine delivers its
/// dispatch. One machine per island without a source bus acts as slack (the
/// flagged one, else the first listed). Throws NonConvergence or
/// InfeasibleDispatch.
InitialCondition initial_powerflow(const Network& net, const SolveOptions& opt = {});

} // namespace phasedyn
