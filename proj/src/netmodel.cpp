#include "phasedyn/netmodel.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <Eigen/LU>
#include <nlohmann/json.hpp>

#include "phasedyn/errors.hpp"

namespace phasedyn {

using nlohmann::json;

PhaseSet PhaseSet::parse(std::string_view text) {
	PhaseSet out;
	for (char ch : text) {
		switch (std::toupper(static_cast<unsigned char>(ch))) {
		case 'A': out.bits_ |= 1u; break;
		case 'B': out.bits_ |= 2u; break;
		case 'C': out.bits_ |= 4u; break;
		default: throw ParseError("invalid phase letter '" + std::string(1, ch) + "' in \"" + std::string(text) + "\"");
		}
	}
	return out;
}

std::string PhaseSet::to_string() const {
	std::string out;
	for (Phase p : kAllPhases)
		if (contains(p))
			out.push_back(phase_letter(p));
	return out;
}

double per_phase_mw_to_pu(double mw, double mva_base) { return 3.0 * mw / mva_base; }
double per_phase_pu_to_mw(double pu, double mva_base) { return pu * mva_base / 3.0; }
double base_impedance_ohm(double base_kv, double mva_base) { return base_kv * base_kv / mva_base; }

std::string_view to_string(TransformerConnection c) {
	switch (c) {
	case TransformerConnection::WyeGWyeG: return "wye-g/wye-g";
	case TransformerConnection::DeltaWyeG: return "delta/wye-g";
	case TransformerConnection::WyeGDelta: return "wye-g/delta";
	case TransformerConnection::SinglePhase: return "single-phase";
	}
	return "?";
}

// ---------------------------------------------------------------- Network

void Network::reindex() {
	bus_lookup_.clear();
	for (std::size_t k = 0; k < buses.size(); ++k)
		bus_lookup_.emplace(buses[k].id, k);
}

std::optional<std::size_t> Network::find_bus(std::string_view id) const {
	if (bus_lookup_.size() != buses.size()) {
		// index is stale after hand edits; fall back to a scan
		for (std::size_t k = 0; k < buses.size(); ++k)
			if (buses[k].id == id)
				return k;
		return std::nullopt;
	}
	auto it = bus_lookup_.find(id);
	if (it == bus_lookup_.end())
		return std::nullopt;
	return it->second;
}

std::size_t Network::bus_index(std::string_view id) const {
	if (auto k = find_bus(id))
		return *k;
	throw UnknownReference("unknown bus '" + std::string(id) + "'");
}

Switch& Network::switch_by_id(std::string_view id) {
	for (auto& sw : switches)
		if (sw.id == id)
			return sw;
	throw UnknownReference("unknown switch '" + std::string(id) + "'");
}

const MachineRecord& Network::machine(std::string_view id) const {
	for (const auto& m : machines)
		if (m.id == id)
			return m;
	throw UnknownReference("unknown machine '" + std::string(id) + "'");
}

double Network::base_impedance(std::string_view bus_id) const {
	return base_impedance_ohm(bus(bus_id).base_kv, mva_base);
}

namespace {

bool finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

bool is_symmetric(const Eigen::MatrixXcd& m) {
	const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
	return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale;
}

} // namespace

std::vector<std::string> Network::check() const {
	std::vector<std::string> problems;
	auto fail = [&](std::string msg) { problems.push_back(std::move(msg)); };

	if (!(mva_base > 0.0))
		fail("mva_base must be positive");

	std::map<std::string, int, std::less<>> seen;
	for (const auto& b : buses) {
		if (++seen[b.id] == 2)
			fail("bus '" + b.id + "': duplicate id");
		if (!(b.base_kv > 0.0))
			fail("bus '" + b.id + "': base_kv must be positive");
		if (b.phases.empty())
			fail("bus '" + b.id + "': no phases");
	}

	auto bus_ptr = [&](const std::string& id) -> const Bus* {
		auto k = find_bus(id);
		return k ? &buses[*k] : nullptr;
	};
	auto endpoint = [&](const std::string& what, const std::string& bus_id) -> const Bus* {
		const Bus* b = bus_ptr(bus_id);
		if (!b)
			fail(what + ": unknown bus '" + bus_id + "'");
		return b;
	};

	for (const auto& br : branches) {
		const std::string what = "branch '" + br.id + "'";
		const Bus* f = endpoint(what, br.from);
		const Bus* t = endpoint(what, br.to);
		if (br.phases.empty())
			fail(what + ": no phases");
		if (f && !br.phases.is_subset_of(f->phases))
			fail(what + ": phases " + br.phases.to_string() + " not present on bus '" + f->id + "'");
		if (t && !br.phases.is_subset_of(t->phases))
			fail(what + ": phases " + br.phases.to_string() + " not present on bus '" + t->id + "'");
		const auto n = br.phases.size();
		if (br.series_z.rows() != n || br.series_z.cols() != n || br.shunt_y.rows() != n || br.shunt_y.cols() != n) {
			fail(what + ": impedance matrix dimension does not match phase count");
			continue;
		}
		if (!br.series_z.allFinite() || !br.shunt_y.allFinite())
			fail(what + ": non-finite impedance");
		else if (!is_symmetric(br.series_z))
			fail(what + ": series impedance matrix is not symmetric");
		else if (br.in_service && br.series_z.fullPivLu().rank() < n)
			fail(what + ": series impedance matrix is singular");
	}

	for (const auto& tr : transformers) {
		const std::string what = "transformer '" + tr.id + "'";
		const Bus* f = endpoint(what, tr.from);
		const Bus* t = endpoint(what, tr.to);
		if (!(tr.tap >= 0.8 && tr.tap <= 1.2))
			fail(what + ": tap must lie in [0.8, 1.2]");
		if (tr.leakage_z == Complex(0.0) || !finite(tr.leakage_z))
			fail(what + ": leakage impedance must be finite and non-zero");
		for (const Bus* b : {f, t}) {
			if (!b)
				continue;
			if (tr.connection == TransformerConnection::SinglePhase) {
				if (!b->phases.contains(tr.phase))
					fail(what + ": phase " + std::string(1, phase_letter(tr.phase)) + " not present on bus '" + b->id + "'");
			} else if (b->phases != PhaseSet::all()) {
				fail(what + ": three-phase bank needs phases ABC on bus '" + b->id + "'");
			}
		}
	}

	for (const auto& ld : loads) {
		const std::string what = "load '" + ld.id + "' at bus '" + ld.bus + "'";
		const Bus* b = endpoint(what, ld.bus);
		bool any = false;
		for (Phase p : kAllPhases) {
			const auto& ph = ld.phases[static_cast<int>(p)];
			if (!ph)
				continue;
			any = true;
			const std::string tag = what + ": phase " + std::string(1, phase_letter(p));
			if (b && !b->phases.contains(p))
				fail(tag + " not present on bus");
			if (!finite(ph->s))
				fail(tag + " power is not finite");
			if (ph->z_frac < 0.0 || ph->i_frac < 0.0 || ph->p_frac < 0.0)
				fail(tag + " ZIP fractions must be non-negative");
			const double sum = ph->z_frac + ph->i_frac + ph->p_frac;
			if (std::abs(sum - 1.0) > 1e-9) {
				std::ostringstream msg;
				msg << tag << " ZIP fractions sum to " << sum << " (must be 1)";
				fail(msg.str());
			}
		}
		if (!any)
			fail(what + ": no phases");
	}

	for (const auto& sw : switches) {
		const std::string what = "switch '" + sw.id + "'";
		const Bus* f = endpoint(what, sw.from);
		const Bus* t = endpoint(what, sw.to);
		if (sw.phases.empty())
			fail(what + ": no phases");
		for (const Bus* b : {f, t})
			if (b && !sw.phases.is_subset_of(b->phases))
				fail(what + ": phases " + sw.phases.to_string() + " not present on bus '" + b->id + "'");
	}

	for (const auto& src : sources) {
		const Bus* b = endpoint("source", src.bus);
		for (Phase p : kAllPhases)
			if (b && b->phases.contains(p) && !finite(src.voltage[static_cast<int>(p)]))
				fail("source at bus '" + src.bus + "': non-finite voltage");
	}

	for (const auto& inj : injections) {
		const std::string what = "injection '" + inj.id + "'";
		endpoint(what, inj.bus);
		for (const auto& s : inj.s)
			if (!finite(s))
				fail(what + ": non-finite power");
	}

	std::map<std::string, int, std::less<>> machine_ids;
	for (const auto& m : machines) {
		const std::string what = "machine '" + m.id + "'";
		if (++machine_ids[m.id] == 2)
			fail(what + ": duplicate id");
		const Bus* b = endpoint(what, m.bus);
		if (b && b->phases != PhaseSet::all())
			fail(what + ": bus '" + b->id + "' must carry phases ABC");
		try {
			m.params.validate();
		} catch (const ValidationError& e) {
			fail(what + ": " + e.what());
		}
		if (!(m.v_setpoint > 0.0) || !std::isfinite(m.p_dispatch))
			fail(what + ": dispatch must be finite with a positive voltage setpoint");
	}

	for (const auto& f : faults) {
		endpoint("fault '" + f.id + "'", f.bus);
		if (!finite(f.admittance))
			fail("fault '" + f.id + "': non-finite admittance");
	}
	return problems;
}

void Network::validate() const {
	const auto problems = check();
	if (problems.empty())
		return;
	std::string msg = "invalid network";
	if (!name.empty())
		msg += " '" + name + "'";
	for (const auto& p : problems)
		msg += "\n  " + p;
	throw ValidationError(msg);
}

// ---------------------------------------------------------------- parsing

namespace {

/// Reads `key` from `obj` with a message naming the element on failure.
template <class T>
T get(const json& obj, const char* key, const std::string& where) {
	auto it = obj.find(key);
	if (it == obj.end())
		throw ParseError(where + ": missing key '" + key + "'");
	try {
		return it->get<T>();
	} catch (const json::exception& e) {
		throw ParseError(where + ": key '" + key + "' has the wrong type (" + e.what() + ")");
	}
}

template <class T>
T get_or(const json& obj, const char* key, T fallback, const std::string& where) {
	if (!obj.contains(key))
		return fallback;
	return get<T>(obj, key, where);
}

Complex read_complex(const json& v, const std::string& where) {
	if (v.is_number())
		return {v.get<double>(), 0.0};
	if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
		return {v[0].get<double>(), v[1].get<double>()};
	throw ParseError(where + ": expected a number or [re, im] pair");
}

Eigen::MatrixXcd read_matrix(const json& v, int n, const std::string& where) {
	if (!v.is_array() || static_cast<int>(v.size()) != n)
		throw ParseError(where + ": expected a " + std::to_string(n) + "x" + std::to_string(n) + " matrix");
	Eigen::MatrixXcd m(n, n);
	for (int r = 0; r < n; ++r) {
		if (!v[r].is_array() || static_cast<int>(v[r].size()) != n)
			throw ParseError(where + ": row " + std::to_string(r) + " has the wrong length");
		for (int c = 0; c < n; ++c)
			m(r, c) = read_complex(v[r][c], where);
	}
	return m;
}

/// Phase matrix from sequence values; restricted to the present phases.
Eigen::MatrixXcd from_sequence(Complex z1, Complex z0, int n) {
	const Complex self = (z0 + 2.0 * z1) / 3.0;
	const Complex mutual = (z0 - z1) / 3.0;
	Eigen::MatrixXcd m = Eigen::MatrixXcd::Constant(n, n, mutual);
	m.diagonal().setConstant(self);
	return m;
}

const json& array_or_empty(const json& doc, const char* key) {
	static const json empty = json::array();
	auto it = doc.find(key);
	if (it == doc.end() || it->is_null())
		return empty;
	if (!it->is_array())
		throw ParseError(std::string("top-level key '") + key + "' must be an array");
	return *it;
}

Phase parse_single_phase(const std::string& text, const std::string& where) {
	const PhaseSet set = PhaseSet::parse(text);
	if (set.size() != 1)
		throw ParseError(where + ": expected exactly one phase, got \"" + text + "\"");
	for (Phase p : kAllPhases)
		if (set.contains(p))
			return p;
	return Phase::A;
}

TransformerConnection parse_connection(const std::string& text, const std::string& where) {
	if (text == "wye-g/wye-g") return TransformerConnection::WyeGWyeG;
	if (text == "delta/wye-g") return TransformerConnection::DeltaWyeG;
	if (text == "wye-g/delta") return TransformerConnection::WyeGDelta;
	if (text == "single-phase") return TransformerConnection::SinglePhase;
	throw ParseError(where + ": unsupported connection \"" + text +
	                 "\" (expected wye-g/wye-g, delta/wye-g, wye-g/delta or single-phase)");
}

/// Per-phase complex powers from either {"p_mw","q_mvar"} split evenly over
/// `phases`, or a "per_phase" object keyed by phase letter.
std::array<std::optional<json>, 3> per_phase_records(const json& obj, PhaseSet phases, const std::string& where) {
	std::array<std::optional<json>, 3> out;
	if (auto it = obj.find("per_phase"); it != obj.end()) {
		if (!it->is_object())
			throw ParseError(where + ": 'per_phase' must be an object");
		for (auto& [key, value] : it->items())
			out[static_cast<int>(parse_single_phase(key, where))] = value;
		return out;
	}
	const double p = get_or<double>(obj, "p_mw", 0.0, where);
	const double q = get_or<double>(obj, "q_mvar", 0.0, where);
	const int n = phases.size();
	for (Phase ph : kAllPhases) {
		if (!phases.contains(ph))
			continue;
		json rec = obj.contains("zip") ? json{{"zip", obj["zip"]}} : json::object();
		rec["p_mw"] = p / n;
		rec["q_mvar"] = q / n;
		out[static_cast<int>(ph)] = rec;
	}
	return out;
}

MachineParams parse_params(const json& obj, const std::string& where) {
	MachineParams p;
	p.mva_base = get_or<double>(obj, "mva_base", p.mva_base, where);
	auto it = obj.find("params");
	if (it == obj.end())
		return p;
	if (!it->is_object())
		throw ParseError(where + ": 'params' must be an object");
	const std::map<std::string, double MachineParams::*> fields{
		{"rs", &MachineParams::rs},         {"xd", &MachineParams::xd},         {"xq", &MachineParams::xq},
		{"xd_p", &MachineParams::xd_p},     {"xq_p", &MachineParams::xq_p},     {"xd_pp", &MachineParams::xd_pp},
		{"xq_pp", &MachineParams::xq_pp},   {"xl", &MachineParams::xl},         {"tdo_p", &MachineParams::tdo_p},
		{"tqo_p", &MachineParams::tqo_p},   {"tdo_pp", &MachineParams::tdo_pp}, {"tqo_pp", &MachineParams::tqo_pp},
		{"h", &MachineParams::h},           {"d", &MachineParams::d},
	};
	for (auto& [key, value] : it->items()) {
		auto f = fields.find(key);
		if (f == fields.end())
			throw ParseError(where + ": unknown machine parameter '" + key + "'");
		if (!value.is_number())
			throw ParseError(where + ": machine parameter '" + key + "' must be a number");
		p.*(f->second) = value.get<double>();
	}
	return p;
}

} // namespace

Network parse_network(const json& doc) {
	if (!doc.is_object())
		throw ParseError("network document must be a JSON object");

	Network net;
	net.name = get_or<std::string>(doc, "name", "", "network");
	net.mva_base = get<double>(doc, "mva_base", "network");
	net.frequency_hz = get_or<double>(doc, "frequency_hz", kNominalFrequencyHz, "network");
	if (net.frequency_hz != kNominalFrequencyHz)
		throw ValidationError("network frequency must be 60 Hz");
	if (!(net.mva_base > 0.0))
		throw ValidationError("mva_base must be positive");

	for (const auto& b : array_or_empty(doc, "buses")) {
		Bus bus;
		bus.id = get<std::string>(b, "id", "bus");
		const std::string where = "bus '" + bus.id + "'";
		bus.base_kv = get<double>(b, "base_kv", where);
		bus.phases = PhaseSet::parse(get_or<std::string>(b, "phases", "ABC", where));
		net.buses.push_back(std::move(bus));
	}
	net.reindex();

	// Impedances given in ohms are referred to the from-bus base.
	auto zbase_of = [&](const std::string& bus_id) {
		auto k = net.find_bus(bus_id);
		return k ? base_impedance_ohm(net.buses[*k].base_kv, net.mva_base) : 1.0;
	};

	for (const auto& b : array_or_empty(doc, "branches")) {
		Branch br;
		br.id = get<std::string>(b, "id", "branch");
		const std::string where = "branch '" + br.id + "'";
		br.from = get<std::string>(b, "from", where);
		br.to = get<std::string>(b, "to", where);
		br.phases = PhaseSet::parse(get_or<std::string>(b, "phases", "ABC", where));
		br.in_service = get_or<bool>(b, "in_service", true, where);
		const int n = br.phases.size();
		if (b.contains("z_abc")) {
			br.series_z = read_matrix(b["z_abc"], n, where + " z_abc");
		} else if (b.contains("z1")) {
			const Complex z1 = read_complex(b["z1"], where + " z1");
			const Complex z0 = b.contains("z0") ? read_complex(b["z0"], where + " z0") : z1;
			br.series_z = from_sequence(z1, z0, n);
		} else {
			throw ParseError(where + ": needs either 'z_abc' or 'z1'");
		}
		if (b.contains("b_abc")) {
			br.shunt_y = Complex(0.0, 1.0) * read_matrix(b["b_abc"], n, where + " b_abc");
		} else {
			const double b1 = get_or<double>(b, "b1", 0.0, where);
			const double b0 = get_or<double>(b, "b0", b1, where);
			br.shunt_y = Complex(0.0, 1.0) * from_sequence(b1, b0, n);
		}
		const std::string units = get_or<std::string>(b, "units", "pu", where);
		if (units == "ohm") {
			const double zb = zbase_of(br.from);
			br.series_z /= zb;
			br.shunt_y *= zb;
		} else if (units != "pu") {
			throw ParseError(where + ": units must be \"pu\" or \"ohm\"");
		}
		net.branches.push_back(std::move(br));
	}

	for (const auto& t : array_or_empty(doc, "transformers")) {
		TransformerBank tr;
		tr.id = get<std::string>(t, "id", "transformer");
		const std::string where = "transformer '" + tr.id + "'";
		tr.from = get<std::string>(t, "from", where);
		tr.to = get<std::string>(t, "to", where);
		tr.connection = parse_connection(get_or<std::string>(t, "connection", "wye-g/wye-g", where), where);
		if (t.contains("z"))
			tr.leakage_z = read_complex(t["z"], where + " z");
		else
			tr.leakage_z = {get_or<double>(t, "r", 0.0, where), get<double>(t, "x", where)};
		tr.tap = get_or<double>(t, "tap", 1.0, where);
		tr.in_service = get_or<bool>(t, "in_service", true, where);
		if (tr.connection == TransformerConnection::SinglePhase)
			tr.phase = parse_single_phase(get<std::string>(t, "phase", where), where);
		net.transformers.push_back(std::move(tr));
	}

	for (const auto& l : array_or_empty(doc, "loads")) {
		ZipLoad ld;
		ld.bus = get<std::string>(l, "bus", "load");
		ld.id = get_or<std::string>(l, "id", "load@" + ld.bus, "load");
		const std::string where = "load '" + ld.id + "'";
		const PhaseSet phases = PhaseSet::parse(get_or<std::string>(l, "phases", "ABC", where));
		const auto recs = per_phase_records(l, phases, where);
		for (int k = 0; k < 3; ++k) {
			if (!recs[k])
				continue;
			const json& r = *recs[k];
			ZipPhase zp;
			const double p = get_or<double>(r, "p_mw", 0.0, where);
			const double q = get_or<double>(r, "q_mvar", 0.0, where);
			zp.s = {per_phase_mw_to_pu(p, net.mva_base), per_phase_mw_to_pu(q, net.mva_base)};
			const json zip = r.contains("zip") ? r["zip"] : (l.contains("zip") ? l["zip"] : json::object());
			zp.z_frac = get_or<double>(zip, "z", zip.empty() ? 1.0 : 0.0, where);
			zp.i_frac = get_or<double>(zip, "i", 0.0, where);
			zp.p_frac = get_or<double>(zip, "p", 0.0, where);
			ld.phases[k] = zp;
		}
		net.loads.push_back(std::move(ld));
	}

	for (const auto& s : array_or_empty(doc, "switches")) {
		Switch sw;
		sw.id = get<std::string>(s, "id", "switch");
		const std::string where = "switch '" + sw.id + "'";
		sw.from = get<std::string>(s, "from", where);
		sw.to = get<std::string>(s, "to", where);
		sw.phases = PhaseSet::parse(get_or<std::string>(s, "phases", "ABC", where));
		sw.normally_open = get_or<bool>(s, "normally_open", false, where);
		const std::string status = get_or<std::string>(s, "status", sw.normally_open ? "open" : "closed", where);
		if (status == "open")
			sw.status = SwitchStatus::Open;
		else if (status == "closed")
			sw.status = SwitchStatus::Closed;
		else
			throw ParseError(where + ": status must be \"open\" or \"closed\"");
		net.switches.push_back(std::move(sw));
	}

	for (const auto& s : array_or_empty(doc, "sources")) {
		SourceBus src;
		src.bus = get<std::string>(s, "bus", "source");
		const std::string where = "source at bus '" + src.bus + "'";
		if (auto it = s.find("phasors"); it != s.end()) {
			for (auto& [key, value] : it->items()) {
				if (!value.is_array() || value.size() != 2)
					throw ParseError(where + ": phasor must be [magnitude_pu, angle_deg]");
				const Phase p = parse_single_phase(key, where);
				src.voltage[static_cast<int>(p)] = std::polar(value[0].get<double>(), value[1].get<double>() * kPi / 180.0);
			}
		} else {
			const double v = get_or<double>(s, "v_pu", 1.0, where);
			const double ang = get_or<double>(s, "angle_deg", 0.0, where) * kPi / 180.0;
			for (Phase p : kAllPhases)
				src.voltage[static_cast<int>(p)] = std::polar(v, ang + phase_shift(p));
		}
		net.sources.push_back(src);
	}

	for (const auto& s : array_or_empty(doc, "injections")) {
		ConstantInjection inj;
		inj.bus = get<std::string>(s, "bus", "injection");
		inj.id = get_or<std::string>(s, "id", "injection@" + inj.bus, "injection");
		const std::string where = "injection '" + inj.id + "'";
		const PhaseSet phases = PhaseSet::parse(get_or<std::string>(s, "phases", "ABC", where));
		const auto recs = per_phase_records(s, phases, where);
		for (int k = 0; k < 3; ++k)
			if (recs[k])
				inj.s[k] = {per_phase_mw_to_pu(get_or<double>(*recs[k], "p_mw", 0.0, where), net.mva_base),
				            per_phase_mw_to_pu(get_or<double>(*recs[k], "q_mvar", 0.0, where), net.mva_base)};
		net.injections.push_back(std::move(inj));
	}

	for (const auto& m : array_or_empty(doc, "machines")) {
		MachineRecord rec;
		rec.id = get<std::string>(m, "id", "machine");
		const std::string where = "machine '" + rec.id + "'";
		rec.bus = get<std::string>(m, "bus", where);
		rec.params = parse_params(m, where);
		rec.p_dispatch = get_or<double>(m, "p_mw", 0.0, where) / net.mva_base;
		rec.v_setpoint = get_or<double>(m, "v_pu", 1.0, where);
		rec.slack = get_or<bool>(m, "slack", false, where);
		net.machines.push_back(std::move(rec));
	}

	net.validate();
	return net;
}

Network load_network(const std::filesystem::path& path) {
	std::ifstream in(path);
	if (!in)
		throw ParseError("cannot open network file '" + path.string() + "'");
	json doc;
	try {
		doc = json::parse(in);
	} catch (const json::parse_error& e) {
		throw ParseError("network file '" + path.string() + "': " + e.what());
	}
	return parse_network(doc);
}

// ---------------------------------------------------------------- topology

namespace {

struct DisjointSet {
	std::vector<std::size_t> parent;
	explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
	std::size_t find(std::size_t x) {
		while (parent[x] != x) {
			parent[x] = parent[parent[x]];
			x = parent[x];
		}
		return x;
	}
	void unite(std::size_t a, std::size_t b) {
		a = find(a);
		b = find(b);
		// smaller index becomes the root so the partition order is stable
		if (a != b)
			parent[std::max(a, b)] = std::min(a, b);
	}
};

} // namespace

std::vector<Island> energized_islands(const Network& net) {
	const std::size_t n = net.buses.size();
	DisjointSet dsu(n);
	for (const auto& br : net.branches)
		if (br.in_service)
			dsu.unite(net.bus_index(br.from), net.bus_index(br.to));
	for (const auto& tr : net.transformers)
		if (tr.in_service)
			dsu.unite(net.bus_index(tr.from), net.bus_index(tr.to));
	for (const auto& sw : net.switches)
		if (sw.status == SwitchStatus::Closed)
			dsu.unite(net.bus_index(sw.from), net.bus_index(sw.to));

	std::vector<bool> sourced(n, false);
	for (const auto& s : net.sources)
		sourced[net.bus_index(s.bus)] = true;
	for (const auto& m : net.machines)
		sourced[net.bus_index(m.bus)] = true;

	std::vector<Island> islands;
	std::map<std::size_t, std::size_t> root_to_island;
	for (std::size_t k = 0; k < n; ++k) {
		const std::size_t root = dsu.find(k);
		auto [it, inserted] = root_to_island.emplace(root, islands.size());
		if (inserted)
			islands.emplace_back();
		Island& isl = islands[it->second];
		isl.buses.push_back(net.buses[k].id);
		isl.energized = isl.energized || sourced[k];
	}
	return islands;
}

Network apply_switch_action(Network net, std::string_view switch_id, SwitchStatus status) {
	net.switch_by_id(switch_id).status = status;
	return net;
}

ComponentCounts count_components(const Network& net) {
	ComponentCounts c;
	c.buses = net.buses.size();
	for (const auto& br : net.branches) {
		switch (br.phases.size()) {
		case 3: ++c.lines_3ph; break;
		case 2: ++c.lines_2ph; break;
		default: ++c.lines_1ph; break;
		}
	}
	for (const auto& tr : net.transformers) {
		if (tr.connection == TransformerConnection::SinglePhase)
			++c.transformers_1ph;
		else
			++c.transformers_3ph;
	}
	c.loads = net.loads.size();
	c.switches = net.switches.size();
	c.machines = net.machines.size();
	c.sources = net.sources.size();
	c.injections = net.injections.size();
	return c;
}

} // namespace phasedyn
