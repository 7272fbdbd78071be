#include "phasedyn/powerflow.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <mutex>
#include <numeric>
#include <optional>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/SparseLU>

#include "phasedyn/errors.hpp"
#include "phasedyn/log.hpp"

namespace phasedyn {

ThreePhasePhasor NetworkSolution::voltage(const Network& net, std::string_view bus) const {
	const std::size_t k = net.bus_index(bus);
	return ThreePhasePhasor::from_complex(voltages.at(k), net.buses[k].phases);
}

// ---------------------------------------------------------------- node index

NodeIndex build_node_index(const Network& net) {
	const std::size_t nb = net.buses.size();
	std::vector<int> parent(nb * 3);
	std::iota(parent.begin(), parent.end(), 0);
	auto find = [&](int x) {
		while (parent[x] != x) {
			parent[x] = parent[parent[x]];
			x = parent[x];
		}
		return x;
	};
	for (const auto& sw : net.switches) {
		if (sw.status != SwitchStatus::Closed)
			continue;
		const auto f = net.bus_index(sw.from);
		const auto t = net.bus_index(sw.to);
		for (Phase p : kAllPhases) {
			if (!sw.phases.contains(p))
				continue;
			int a = find(static_cast<int>(f * 3) + static_cast<int>(p));
			int b = find(static_cast<int>(t * 3) + static_cast<int>(p));
			if (a != b)
				parent[std::max(a, b)] = std::min(a, b);
		}
	}

	NodeIndex idx;
	idx.bus_nodes.assign(nb, {-1, -1, -1});
	std::vector<int> compact(nb * 3, -1);
	for (std::size_t b = 0; b < nb; ++b) {
		for (Phase p : kAllPhases) {
			if (!net.buses[b].phases.contains(p))
				continue;
			const int root = find(static_cast<int>(b * 3) + static_cast<int>(p));
			if (compact[root] < 0)
				compact[root] = idx.count++;
			idx.bus_nodes[b][static_cast<int>(p)] = compact[root];
		}
	}
	return idx;
}

namespace {

struct ElementStamp {
	std::vector<int> nodes;
	Eigen::MatrixXcd y;
};

std::vector<int> phase_nodes(const NodeIndex& idx, std::size_t bus, PhaseSet phases) {
	std::vector<int> out;
	for (Phase p : kAllPhases)
		if (phases.contains(p))
			out.push_back(idx.node(bus, p));
	return out;
}

/// Two-port admittance of a three-phase bank, 6x6, from-side first.
Eigen::MatrixXcd bank_admittance(const TransformerBank& tr) {
	const Complex y = 1.0 / tr.leakage_z;
	const Eigen::Matrix3cd y_self = y * Eigen::Matrix3cd::Identity();
	Eigen::Matrix3cd y_delta;
	y_delta << 2.0, -1.0, -1.0, -1.0, 2.0, -1.0, -1.0, -1.0, 2.0;
	y_delta *= y / 3.0;
	Eigen::Matrix3cd y_shift;
	y_shift << -1.0, 1.0, 0.0, 0.0, -1.0, 1.0, 1.0, 0.0, -1.0;
	y_shift *= y / std::sqrt(3.0);

	Eigen::Matrix3cd from_self;
	Eigen::Matrix3cd mutual;
	Eigen::Matrix3cd to_self;
	switch (tr.connection) {
	case TransformerConnection::WyeGWyeG:
		from_self = y_self;
		mutual = -y_self;
		to_self = y_self;
		break;
	case TransformerConnection::DeltaWyeG:
		from_self = y_delta;
		mutual = y_shift;
		to_self = y_self;
		break;
	case TransformerConnection::WyeGDelta:
		from_self = y_self;
		mutual = y_shift;
		to_self = y_delta;
		break;
	case TransformerConnection::SinglePhase:
		throw Error("bank_admittance called for a single-phase transformer");
	}
	Eigen::MatrixXcd out(6, 6);
	out.topLeftCorner<3, 3>() = from_self / (tr.tap * tr.tap);
	out.topRightCorner<3, 3>() = mutual / tr.tap;
	out.bottomLeftCorner<3, 3>() = mutual.transpose() / tr.tap;
	out.bottomRightCorner<3, 3>() = to_self;
	return out;
}

std::vector<ElementStamp> element_stamps(const Network& net, const NodeIndex& idx) {
	std::vector<ElementStamp> out;
	for (const auto& br : net.branches) {
		if (!br.in_service)
			continue;
		const auto f = net.bus_index(br.from);
		const auto t = net.bus_index(br.to);
		const Eigen::Index n = br.phases.size();
		Eigen::FullPivLU<Eigen::MatrixXcd> lu(br.series_z);
		if (!lu.isInvertible())
			throw SingularNetwork("branch '" + br.id + "': series impedance matrix is singular");
		const Eigen::MatrixXcd ys = lu.inverse();
		ElementStamp st;
		st.nodes = phase_nodes(idx, f, br.phases);
		const auto to_nodes = phase_nodes(idx, t, br.phases);
		st.nodes.insert(st.nodes.end(), to_nodes.begin(), to_nodes.end());
		st.y.resize(2 * n, 2 * n);
		st.y.topLeftCorner(n, n) = ys + 0.5 * br.shunt_y;
		st.y.topRightCorner(n, n) = -ys;
		st.y.bottomLeftCorner(n, n) = -ys;
		st.y.bottomRightCorner(n, n) = ys + 0.5 * br.shunt_y;
		out.push_back(std::move(st));
	}
	for (const auto& tr : net.transformers) {
		if (!tr.in_service)
			continue;
		const auto f = net.bus_index(tr.from);
		const auto t = net.bus_index(tr.to);
		ElementStamp st;
		if (tr.connection == TransformerConnection::SinglePhase) {
			const Complex y = 1.0 / tr.leakage_z;
			st.nodes = {idx.node(f, tr.phase), idx.node(t, tr.phase)};
			st.y.resize(2, 2);
			st.y << y / (tr.tap * tr.tap), -y / tr.tap, -y / tr.tap, y;
		} else {
			st.nodes = phase_nodes(idx, f, PhaseSet::all());
			const auto to_nodes = phase_nodes(idx, t, PhaseSet::all());
			st.nodes.insert(st.nodes.end(), to_nodes.begin(), to_nodes.end());
			st.y = bank_admittance(tr);
		}
		out.push_back(std::move(st));
	}
	return out;
}

/// Shunt admittance to ground at each node: load Z parts and fault shunts.
std::vector<Complex> shunt_admittance(const Network& net, const NodeIndex& idx) {
	std::vector<Complex> y(static_cast<std::size_t>(idx.count), Complex(0.0));
	for (const auto& ld : net.loads) {
		const auto b = net.bus_index(ld.bus);
		for (Phase p : kAllPhases) {
			const auto& zp = ld.phases[static_cast<int>(p)];
			if (zp)
				y[idx.node(b, p)] += std::conj(zp->s * ld.scale[static_cast<int>(p)]) * zp->z_frac;
		}
	}
	for (const auto& f : net.faults) {
		const auto b = net.bus_index(f.bus);
		for (Phase p : kAllPhases)
			if (f.phases.contains(p) && idx.node(b, p) >= 0)
				y[idx.node(b, p)] += f.admittance;
	}
	return y;
}

/// Constant-current / constant-power demand at one node. Injections enter
/// with negated power and a pure constant-power characteristic.
struct NonlinearDemand {
	int node = -1;
	Complex s;
	double i_frac = 0.0;
	double p_frac = 0.0;
};

std::vector<NonlinearDemand> nonlinear_demands(const Network& net, const NodeIndex& idx) {
	std::vector<NonlinearDemand> out;
	for (const auto& ld : net.loads) {
		const auto b = net.bus_index(ld.bus);
		for (Phase p : kAllPhases) {
			const auto& zp = ld.phases[static_cast<int>(p)];
			if (!zp || (zp->i_frac == 0.0 && zp->p_frac == 0.0))
				continue;
			const Complex s = zp->s * ld.scale[static_cast<int>(p)];
			if (s != Complex(0.0))
				out.push_back({idx.node(b, p), s, zp->i_frac, zp->p_frac});
		}
	}
	for (const auto& inj : net.injections) {
		const auto b = net.bus_index(inj.bus);
		for (Phase p : kAllPhases) {
			const Complex s = inj.s[static_cast<int>(p)];
			if (s != Complex(0.0) && net.buses[b].phases.contains(p))
				out.push_back({idx.node(b, p), -s, 0.0, 1.0});
		}
	}
	return out;
}

/// Current drawn by the I and P parts of a demand at voltage v.
Complex demand_current(const NonlinearDemand& d, Complex v, double threshold) {
	const Complex k = std::conj(d.s);
	const double mag = std::abs(v);
	const double vt = std::max(threshold, 1e-9);
	if (mag < vt)
		return k * (d.i_frac / vt + d.p_frac / (vt * vt)) * v;
	return k * (d.i_frac * v / mag + d.p_frac / std::conj(v));
}

/// d(Re I, Im I) / d(Re V, Im V) of demand_current.
Eigen::Matrix2d demand_jacobian(const NonlinearDemand& d, Complex v, double threshold) {
	const Complex k = std::conj(d.s);
	const double mag = std::abs(v);
	const double vt = std::max(threshold, 1e-9);
	Complex di_dx;
	Complex di_dy;
	if (mag < vt) {
		const Complex c = k * (d.i_frac / vt + d.p_frac / (vt * vt));
		di_dx = c;
		di_dy = Complex(0.0, 1.0) * c;
	} else {
		const double m3 = mag * mag * mag;
		const Complex cv = std::conj(v);
		di_dx = k * d.i_frac * (1.0 / mag - v * v.real() / m3) - k * d.p_frac / (cv * cv);
		di_dy = k * d.i_frac * (Complex(0.0, 1.0) / mag - v * v.imag() / m3) + Complex(0.0, 1.0) * k * d.p_frac / (cv * cv);
	}
	Eigen::Matrix2d j;
	j << di_dx.real(), di_dy.real(), di_dx.imag(), di_dy.imag();
	return j;
}

Eigen::Matrix3cd thevenin_admittance(const TheveninSource& th) {
	Eigen::FullPivLU<Eigen::Matrix3cd> lu(th.impedance);
	if (!lu.isInvertible())
		throw SingularNetwork("source impedance at bus '" + th.bus + "' is singular");
	return lu.inverse();
}

std::mutex g_audit_mutex;
SolverAudit g_audit;

void record_audit(double mismatch) {
	std::lock_guard lock(g_audit_mutex);
	++g_audit.solves;
	g_audit.worst_mismatch = std::max(g_audit.worst_mismatch, mismatch);
}

double max_abs(const Eigen::VectorXcd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

} // namespace

SolverAudit solver_audit() {
	std::lock_guard lock(g_audit_mutex);
	return g_audit;
}

void reset_solver_audit() {
	std::lock_guard lock(g_audit_mutex);
	g_audit = {};
}

PhaseYbus assemble_ybus(const Network& net) {
	PhaseYbus out;
	out.nodes = build_node_index(net);
	const int n = out.nodes.count;
	std::vector<Eigen::Triplet<Complex>> trip;
	for (const auto& st : element_stamps(net, out.nodes))
		for (std::size_t r = 0; r < st.nodes.size(); ++r)
			for (std::size_t c = 0; c < st.nodes.size(); ++c)
				if (st.y(r, c) != Complex(0.0))
					trip.emplace_back(st.nodes[r], st.nodes[c], st.y(r, c));
	const auto shunts = shunt_admittance(net, out.nodes);
	for (int k = 0; k < n; ++k)
		if (shunts[k] != Complex(0.0))
			trip.emplace_back(k, k, shunts[k]);
	out.matrix.resize(n, n);
	out.matrix.setFromTriplets(trip.begin(), trip.end());
	out.matrix.prune(Complex(0.0));
	return out;
}

// ---------------------------------------------------------------- solve

NetworkSolution solve_network(const Network& net, const BoundaryConditions& bc, const SolveOptions& opt) {
	const std::size_t nb = net.buses.size();
	PhaseYbus ybus = assemble_ybus(net);
	const NodeIndex& idx = ybus.nodes;
	const int n = idx.count;

	std::vector<std::optional<Complex>> fixed(n);
	std::vector<bool> seed_bus(nb, false);
	std::vector<double> bus_reference(nb, 0.0);
	auto fix_bus = [&](std::string_view bus_id, const PhaseValues& v) {
		const auto b = net.bus_index(bus_id);
		for (Phase p : kAllPhases)
			if (net.buses[b].phases.contains(p))
				fixed[idx.node(b, p)] = v[static_cast<int>(p)];
		seed_bus[b] = true;
		for (Phase p : kAllPhases)
			if (net.buses[b].phases.contains(p) && v[static_cast<int>(p)] != Complex(0.0)) {
				bus_reference[b] = std::arg(v[static_cast<int>(p)]) - phase_shift(p);
				break;
			}
	};
	for (const auto& src : net.sources)
		fix_bus(src.bus, src.voltage);
	for (const auto& [bus_id, v] : bc.fixed)
		fix_bus(bus_id, v);

	Eigen::VectorXcd inj = Eigen::VectorXcd::Zero(n);
	std::vector<Eigen::Matrix3cd> th_y;
	std::vector<Eigen::Triplet<Complex>> th_trip;
	for (const auto& th : bc.thevenin) {
		const auto b = net.bus_index(th.bus);
		if (net.buses[b].phases != PhaseSet::all())
			throw ValidationError("source at bus '" + th.bus + "' needs phases ABC");
		const Eigen::Matrix3cd ym = thevenin_admittance(th);
		th_y.push_back(ym);
		const Eigen::Vector3cd e(th.emf[0], th.emf[1], th.emf[2]);
		const Eigen::Vector3cd j = ym * e;
		for (int r = 0; r < 3; ++r) {
			const int nr = idx.bus_nodes[b][r];
			inj(nr) += j(r);
			for (int c = 0; c < 3; ++c)
				th_trip.emplace_back(nr, idx.bus_nodes[b][c], ym(r, c));
		}
		seed_bus[b] = true;
		bus_reference[b] = std::arg(th.emf[0]);
	}
	if (!th_trip.empty()) {
		Eigen::SparseMatrix<Complex> extra(n, n);
		extra.setFromTriplets(th_trip.begin(), th_trip.end());
		ybus.matrix += extra;
	}
	const Eigen::SparseMatrix<Complex>& y = ybus.matrix;

	// every island that ought to be live must hold a voltage-defining element
	{
		for (const auto& isl : energized_islands(net)) {
			if (!isl.energized)
				continue;
			const bool defined = std::any_of(isl.buses.begin(), isl.buses.end(),
			                                 [&](const std::string& id) { return seed_bus[net.bus_index(id)]; });
			if (!defined)
				throw UnsourcedIsland("island containing bus '" + isl.buses.front() +
				                      "' holds a machine but no fixed or Thevenin bus");
		}
	}

	// nodes reachable from a voltage-defining node
	std::vector<std::vector<int>> adj(n);
	for (int col = 0; col < y.outerSize(); ++col)
		for (Eigen::SparseMatrix<Complex>::InnerIterator it(y, col); it; ++it)
			if (it.row() != col && it.value() != Complex(0.0))
				adj[col].push_back(static_cast<int>(it.row()));
	std::vector<bool> live(n, false);
	std::deque<int> queue;
	for (std::size_t b = 0; b < nb; ++b)
		if (seed_bus[b])
			for (int node : idx.bus_nodes[b])
				if (node >= 0 && !live[node]) {
					live[node] = true;
					queue.push_back(node);
				}
	while (!queue.empty()) {
		const int k = queue.front();
		queue.pop_front();
		for (int m : adj[k])
			if (!live[m]) {
				live[m] = true;
				queue.push_back(m);
			}
	}

	// flat start angles spread outwards from the voltage-defining buses
	std::vector<std::optional<double>> flat_angle(nb);
	{
		std::vector<std::vector<std::size_t>> bus_adj(nb);
		auto link = [&](const std::string& a, const std::string& b) {
			const auto ia = net.bus_index(a);
			const auto ib = net.bus_index(b);
			bus_adj[ia].push_back(ib);
			bus_adj[ib].push_back(ia);
		};
		for (const auto& br : net.branches)
			if (br.in_service)
				link(br.from, br.to);
		for (const auto& tr : net.transformers)
			if (tr.in_service)
				link(tr.from, tr.to);
		for (const auto& sw : net.switches)
			if (sw.status == SwitchStatus::Closed)
				link(sw.from, sw.to);
		std::deque<std::size_t> bq;
		for (std::size_t b = 0; b < nb; ++b)
			if (seed_bus[b]) {
				flat_angle[b] = bus_reference[b];
				bq.push_back(b);
			}
		while (!bq.empty()) {
			const auto b = bq.front();
			bq.pop_front();
			for (auto m : bus_adj[b])
				if (!flat_angle[m]) {
					flat_angle[m] = flat_angle[b];
					bq.push_back(m);
				}
		}
	}

	Eigen::VectorXcd v = Eigen::VectorXcd::Zero(n);
	std::vector<bool> assigned(n, false);
	const bool warm = opt.warm_start && opt.warm_start->size() == nb;
	for (std::size_t b = 0; b < nb; ++b) {
		for (Phase p : kAllPhases) {
			const int node = idx.node(b, p);
			if (node < 0 || assigned[node] || !live[node])
				continue;
			assigned[node] = true;
			if (fixed[node]) {
				v(node) = *fixed[node];
			} else if (warm && std::abs((*opt.warm_start)[b][static_cast<int>(p)]) > 1e-3) {
				v(node) = (*opt.warm_start)[b][static_cast<int>(p)];
			} else {
				v(node) = std::polar(1.0, flat_angle[b].value_or(0.0) + phase_shift(p));
			}
		}
	}

	std::vector<int> unknowns;
	std::vector<int> pos(n, -1);
	for (int k = 0; k < n; ++k)
		if (live[k] && !fixed[k]) {
			pos[k] = static_cast<int>(unknowns.size());
			unknowns.push_back(k);
		}
	const int m = static_cast<int>(unknowns.size());

	std::vector<NonlinearDemand> demands;
	for (const auto& d : nonlinear_demands(net, idx))
		if (live[d.node])
			demands.push_back(d);
	const double vt = opt.low_voltage_threshold;

	// node current balance: network outflow + demand - source injection
	auto node_balance = [&](const Eigen::VectorXcd& volts) {
		Eigen::VectorXcd bal = y * volts - inj;
		for (const auto& d : demands)
			bal(d.node) += demand_current(d, volts(d.node), vt);
		return bal;
	};
	auto mismatch = [&](const Eigen::VectorXcd& volts) {
		const Eigen::VectorXcd bal = node_balance(volts);
		Eigen::VectorXcd f(m);
		for (int k = 0; k < m; ++k)
			f(k) = bal(unknowns[k]);
		return f;
	};

	bool has_nonlinear = false;
	for (const auto& d : demands)
		has_nonlinear = has_nonlinear || pos[d.node] >= 0;

	using RealSparse = Eigen::SparseMatrix<double>;
	Eigen::SparseLU<RealSparse, Eigen::COLAMDOrdering<int>> lu;
	bool pattern_ready = false;
	auto factorize = [&](const Eigen::VectorXcd& volts) {
		std::vector<Eigen::Triplet<double>> trip;
		for (int col = 0; col < y.outerSize(); ++col) {
			const int pc = pos[col];
			if (pc < 0)
				continue;
			for (Eigen::SparseMatrix<Complex>::InnerIterator it(y, col); it; ++it) {
				const int pr = pos[it.row()];
				if (pr < 0)
					continue;
				const double g = it.value().real();
				const double b = it.value().imag();
				trip.emplace_back(2 * pr, 2 * pc, g);
				trip.emplace_back(2 * pr, 2 * pc + 1, -b);
				trip.emplace_back(2 * pr + 1, 2 * pc, b);
				trip.emplace_back(2 * pr + 1, 2 * pc + 1, g);
			}
		}
		for (const auto& d : demands) {
			const int pr = pos[d.node];
			if (pr < 0)
				continue;
			const Eigen::Matrix2d jd = demand_jacobian(d, volts(d.node), vt);
			for (int r = 0; r < 2; ++r)
				for (int c = 0; c < 2; ++c)
					trip.emplace_back(2 * pr + r, 2 * pr + c, jd(r, c));
		}
		RealSparse jac(2 * m, 2 * m);
		jac.setFromTriplets(trip.begin(), trip.end());
		if (!pattern_ready) {
			lu.analyzePattern(jac);
			pattern_ready = true;
		}
		lu.factorize(jac);
		if (lu.info() != Eigen::Success)
			throw SingularNetwork("network matrix is singular (floating node or ungrounded delta?)");
	};

	Eigen::VectorXcd f = mismatch(v);
	double err = max_abs(f);
	int iter = 0;
	while (!(err <= opt.tolerance)) {
		if (iter >= opt.max_iterations) {
			std::ostringstream msg;
			msg << "network solve did not converge in " << opt.max_iterations << " iterations (mismatch " << err << ")";
			throw NonConvergence(msg.str());
		}
		if (has_nonlinear || iter == 0)
			factorize(v);
		++iter;
		Eigen::VectorXd rhs(2 * m);
		for (int k = 0; k < m; ++k) {
			rhs(2 * k) = -f(k).real();
			rhs(2 * k + 1) = -f(k).imag();
		}
		const Eigen::VectorXd dx = lu.solve(rhs);
		if (!dx.allFinite())
			throw SingularNetwork("network matrix is singular (non-finite Newton step)");

		double alpha = 1.0;
		bool accepted = false;
		for (int halving = 0; halving <= 12 && !accepted; ++halving, alpha *= 0.5) {
			Eigen::VectorXcd trial = v;
			for (int k = 0; k < m; ++k)
				trial(unknowns[k]) += alpha * Complex(dx(2 * k), dx(2 * k + 1));
			Eigen::VectorXcd ft = mismatch(trial);
			const double et = max_abs(ft);
			if (std::isfinite(et) && et < err) {
				v = std::move(trial);
				f = std::move(ft);
				err = et;
				accepted = true;
			}
		}
		if (!accepted) {
			std::ostringstream msg;
			msg << "network solve stalled after " << iter << " iterations (mismatch " << err << ")";
			throw NonConvergence(msg.str());
		}
		log_debug([&](std::ostream& os) { os << "newton iteration " << iter << " mismatch " << err; });
	}

	NetworkSolution sol;
	sol.iterations = iter;
	sol.max_mismatch = err;
	sol.voltages.assign(nb, PhaseValues{});
	for (std::size_t b = 0; b < nb; ++b)
		for (Phase p : kAllPhases) {
			const int node = idx.node(b, p);
			if (node >= 0 && live[node])
				sol.voltages[b][static_cast<int>(p)] = v(node);
		}

	const Eigen::VectorXcd bal = node_balance(v);
	auto fixed_current = [&](std::string_view bus_id) {
		const auto b = net.bus_index(bus_id);
		PhaseValues out{};
		for (Phase p : kAllPhases)
			if (const int node = idx.node(b, p); node >= 0)
				out[static_cast<int>(p)] = bal(node);
		return out;
	};
	for (const auto& src : net.sources)
		sol.source_currents[src.bus] = fixed_current(src.bus);
	for (const auto& [bus_id, volts] : bc.fixed)
		sol.source_currents[bus_id] = fixed_current(bus_id);
	for (std::size_t k = 0; k < bc.thevenin.size(); ++k) {
		const auto& th = bc.thevenin[k];
		const auto b = net.bus_index(th.bus);
		Eigen::Vector3cd dv;
		for (int r = 0; r < 3; ++r)
			dv(r) = th.emf[r] - sol.voltages[b][r];
		const Eigen::Vector3cd i = th_y[k] * dv;
		sol.thevenin_currents.push_back({i(0), i(1), i(2)});
	}
	record_audit(err);
	return sol;
}

double kcl_residual(const Network& net, const BoundaryConditions& bc, const NetworkSolution& sol,
                    double low_voltage_threshold) {
	const NodeIndex idx = build_node_index(net);
	const int n = idx.count;
	Eigen::VectorXcd v = Eigen::VectorXcd::Zero(n);
	std::vector<bool> solved(n, false);
	for (std::size_t b = 0; b < net.buses.size(); ++b)
		for (Phase p : kAllPhases)
			if (const int node = idx.node(b, p); node >= 0) {
				v(node) = sol.voltages[b][static_cast<int>(p)];
				solved[node] = solved[node] || v(node) != Complex(0.0);
			}
	for (const auto& src : net.sources)
		for (int node : idx.bus_nodes[net.bus_index(src.bus)])
			if (node >= 0)
				solved[node] = false;
	for (const auto& [bus_id, volts] : bc.fixed)
		for (int node : idx.bus_nodes[net.bus_index(bus_id)])
			if (node >= 0)
				solved[node] = false;

	Eigen::VectorXcd out = Eigen::VectorXcd::Zero(n);
	for (const auto& st : element_stamps(net, idx)) {
		Eigen::VectorXcd vl(static_cast<Eigen::Index>(st.nodes.size()));
		for (std::size_t k = 0; k < st.nodes.size(); ++k)
			vl(k) = v(st.nodes[k]);
		const Eigen::VectorXcd il = st.y * vl;
		for (std::size_t k = 0; k < st.nodes.size(); ++k)
			out(st.nodes[k]) += il(k);
	}
	const auto shunts = shunt_admittance(net, idx);
	for (int k = 0; k < n; ++k)
		out(k) += shunts[k] * v(k);
	for (const auto& d : nonlinear_demands(net, idx))
		out(d.node) += demand_current(d, v(d.node), low_voltage_threshold);
	for (std::size_t k = 0; k < bc.thevenin.size(); ++k) {
		const auto b = net.bus_index(bc.thevenin[k].bus);
		for (int r = 0; r < 3; ++r)
			out(idx.bus_nodes[b][r]) -= sol.thevenin_currents.at(k)[r];
	}
	double worst = 0.0;
	for (int k = 0; k < n; ++k)
		if (solved[k])
			worst = std::max(worst, std::abs(out(k)));
	return worst;
}

// ---------------------------------------------------------------- initial power flow

namespace {

PhaseValues balanced_set(double magnitude, double angle) {
	PhaseValues out;
	for (Phase p : kAllPhases)
		out[static_cast<int>(p)] = std::polar(magnitude, angle + phase_shift(p));
	return out;
}

double three_phase_power(const PhaseValues& v, const PhaseValues& i, bool reactive) {
	Complex s(0.0);
	for (int k = 0; k < 3; ++k)
		s += v[k] * std::conj(i[k]);
	return (reactive ? s.imag() : s.real()) / 3.0;
}

} // namespace

InitialCondition initial_powerflow(const Network& net, const SolveOptions& opt) {
	const auto& machines = net.machines;
	const std::size_t nm = machines.size();

	// decide which machines carry the slack of their island
	std::vector<int> island_of(net.buses.size(), -1);
	const auto islands = energized_islands(net);
	for (std::size_t k = 0; k < islands.size(); ++k)
		for (const auto& id : islands[k].buses)
			island_of[net.bus_index(id)] = static_cast<int>(k);
	std::vector<bool> island_has_source(islands.size(), false);
	for (const auto& s : net.sources)
		island_has_source[island_of[net.bus_index(s.bus)]] = true;
	std::vector<int> slack_of_island(islands.size(), -1);
	for (std::size_t k = 0; k < nm; ++k) {
		const int isl = island_of[net.bus_index(machines[k].bus)];
		if (island_has_source[isl])
			continue;
		int& slot = slack_of_island[isl];
		if (slot < 0 || (machines[k].slack && !machines[slot].slack))
			slot = static_cast<int>(k);
	}
	std::vector<bool> is_slack(nm, false);
	for (int s : slack_of_island)
		if (s >= 0)
			is_slack[s] = true;
	std::vector<int> free;
	for (std::size_t k = 0; k < nm; ++k)
		if (!is_slack[k])
			free.push_back(static_cast<int>(k));

	SolveOptions inner = opt;
	inner.tolerance = std::min(opt.tolerance, 1e-10);

	std::vector<double> theta(nm, 0.0);
	std::optional<std::vector<PhaseValues>> last_voltages;
	auto evaluate = [&](const std::vector<double>& angles, NetworkSolution& sol) {
		BoundaryConditions bc;
		for (std::size_t k = 0; k < nm; ++k)
			bc.fixed[machines[k].bus] = balanced_set(machines[k].v_setpoint, angles[k]);
		inner.warm_start = last_voltages ? &*last_voltages : nullptr;
		sol = solve_network(net, bc, inner);
		last_voltages = sol.voltages;
		Eigen::VectorXd r(static_cast<Eigen::Index>(free.size()));
		for (std::size_t j = 0; j < free.size(); ++j) {
			const auto& mc = machines[free[j]];
			const auto& v = sol.voltages[net.bus_index(mc.bus)];
			r(j) = three_phase_power(v, sol.source_currents.at(mc.bus), false) - mc.p_dispatch;
		}
		return r;
	};

	InitialCondition out;
	constexpr double kPowerTolerance = 1e-9;
	constexpr int kMaxOuter = 40;
	constexpr double kAngleStep = 1e-6;
	Eigen::VectorXd r = evaluate(theta, out.solution);
	double err = r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
	while (err > kPowerTolerance) {
		if (out.outer_iterations >= kMaxOuter) {
			std::ostringstream msg;
			msg << "initial power flow did not meet the dispatch (power mismatch " << err << " p.u.)";
			throw NonConvergence(msg.str());
		}
		++out.outer_iterations;
		const auto fr = static_cast<Eigen::Index>(free.size());
		Eigen::MatrixXd jac(fr, fr);
		NetworkSolution scratch;
		for (Eigen::Index j = 0; j < fr; ++j) {
			auto shifted = theta;
			shifted[free[j]] += kAngleStep;
			jac.col(j) = (evaluate(shifted, scratch) - r) / kAngleStep;
		}
		Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
		if (!lu.isInvertible())
			throw InfeasibleDispatch("initial power flow: machine angles do not control the dispatch");
		const Eigen::VectorXd step = lu.solve(-r);
		double alpha = 1.0;
		bool accepted = false;
		for (int h = 0; h < 10 && !accepted; ++h, alpha *= 0.5) {
			auto trial = theta;
			for (Eigen::Index j = 0; j < fr; ++j)
				trial[free[j]] += alpha * step(j);
			NetworkSolution sol;
			Eigen::VectorXd rt;
			try {
				rt = evaluate(trial, sol);
			} catch (const NonConvergence&) {
				continue;
			}
			const double et = rt.cwiseAbs().maxCoeff();
			if (et < err) {
				theta = std::move(trial);
				r = std::move(rt);
				err = et;
				out.solution = std::move(sol);
				accepted = true;
			}
		}
		if (!accepted)
			throw InfeasibleDispatch("initial power flow stalled: dispatch cannot be delivered");
	}
	out.max_power_mismatch = err;

	for (std::size_t k = 0; k < nm; ++k) {
		const auto& mc = machines[k];
		const std::size_t b = net.bus_index(mc.bus);
		MachineTerminal mt;
		mt.id = mc.id;
		mt.voltage = ThreePhasePhasor::from_complex(out.solution.voltages[b]);
		mt.current = out.solution.source_currents.at(mc.bus);
		mt.p = three_phase_power(out.solution.voltages[b], mt.current, false);
		mt.q = three_phase_power(out.solution.voltages[b], mt.current, true);
		out.machines.push_back(std::move(mt));
	}
	return out;
}

} // namespace phasedyn
