#include "phasedyn/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "phasedyn/errors.hpp"

namespace phasedyn {

using nlohmann::json;

namespace {

std::string text(const json& ev, const char* key, const std::string& where) {
	auto it = ev.find(key);
	if (it == ev.end() || !it->is_string())
		throw ParseError(where + ": missing string '" + key + "'");
	return it->get<std::string>();
}

double number(const json& ev, const char* key, const std::string& where) {
	auto it = ev.find(key);
	if (it == ev.end() || !it->is_number())
		throw ParseError(where + ": missing number '" + key + "'");
	return it->get<double>();
}

Complex impedance(const json& v, const std::string& where) {
	if (v.is_number())
		return {v.get<double>(), 0.0};
	if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
		return {v[0].get<double>(), v[1].get<double>()};
	throw ParseError(where + ": impedance must be a number or [r, x]");
}

Phase single_phase(const std::string& key, const std::string& where) {
	const PhaseSet set = PhaseSet::parse(key);
	if (set.size() != 1)
		throw ParseError(where + ": expected a single phase letter, got \"" + key + "\"");
	for (Phase p : kAllPhases)
		if (set.contains(p))
			return p;
	return Phase::A;
}

Action parse_action(const json& ev, const std::string& where) {
	const std::string name = text(ev, "action", where);
	if (name == "apply_fault") {
		ApplyFault a;
		a.bus = text(ev, "bus", where);
		a.id = ev.contains("id") ? text(ev, "id", where) : "fault@" + a.bus;
		a.phases = PhaseSet::parse(ev.contains("phases") ? text(ev, "phases", where) : "A");
		if (!ev.contains("impedance_ohm"))
			throw ParseError(where + ": apply_fault needs 'impedance_ohm'");
		a.impedance_ohm = impedance(ev["impedance_ohm"], where);
		if (a.impedance_ohm == Complex(0.0))
			throw ValidationError(where + ": a bolted fault (zero impedance) is not supported");
		return a;
	}
	if (name == "clear_fault") {
		ClearFault a;
		if (ev.contains("fault"))
			a.id = text(ev, "fault", where);
		else
			a.id = "fault@" + text(ev, "bus", where);
		return a;
	}
	if (name == "switch") {
		SwitchOperation a;
		a.id = text(ev, "id", where);
		const std::string st = text(ev, "status", where);
		if (st == "open")
			a.status = SwitchStatus::Open;
		else if (st == "close" || st == "closed")
			a.status = SwitchStatus::Closed;
		else
			throw ParseError(where + ": status must be \"open\" or \"close\"");
		return a;
	}
	if (name == "scale_load") {
		ScaleLoad a;
		a.bus = text(ev, "bus", where);
		auto it = ev.find("multiplier");
		if (it == ev.end())
			throw ParseError(where + ": scale_load needs 'multiplier'");
		if (it->is_number()) {
			a.multiplier.fill(it->get<double>());
		} else if (it->is_object()) {
			for (auto& [key, value] : it->items()) {
				if (!value.is_number())
					throw ParseError(where + ": multiplier values must be numbers");
				a.multiplier[static_cast<int>(single_phase(key, where))] = value.get<double>();
			}
		} else {
			throw ParseError(where + ": multiplier must be a number or an object keyed by phase");
		}
		return a;
	}
	if (name == "set_injection") {
		SetInjection a;
		a.bus = text(ev, "bus", where);
		if (auto it = ev.find("per_phase"); it != ev.end()) {
			for (auto& [key, value] : it->items())
				a.s_mva[static_cast<int>(single_phase(key, where))] =
					Complex(value.value("p_mw", 0.0), value.value("q_mvar", 0.0));
		} else {
			const PhaseSet phases = PhaseSet::parse(ev.contains("phases") ? text(ev, "phases", where) : "ABC");
			const Complex total(ev.value("p_mw", 0.0), ev.value("q_mvar", 0.0));
			for (Phase p : kAllPhases)
				if (phases.contains(p))
					a.s_mva[static_cast<int>(p)] = total / static_cast<double>(phases.size());
		}
		return a;
	}
	throw ParseError(where + ": unknown action \"" + name + "\"");
}

} // namespace

Scenario parse_scenario(const json& doc) {
	const json* events = &doc;
	if (doc.is_object()) {
		auto it = doc.find("events");
		if (it == doc.end())
			throw ParseError("scenario object must contain an 'events' array");
		events = &*it;
	}
	if (!events->is_array())
		throw ParseError("scenario must be a list of events");

	Scenario out;
	for (std::size_t k = 0; k < events->size(); ++k) {
		const json& ev = (*events)[k];
		const std::string where = "event " + std::to_string(k);
		if (!ev.is_object())
			throw ParseError(where + ": must be an object");
		Event e;
		if (ev.contains("time_s"))
			e.time = number(ev, "time_s", where);
		else if (ev.contains("time_cycles"))
			e.time = number(ev, "time_cycles", where) / kNominalFrequencyHz;
		else
			throw ParseError(where + ": needs 'time_s' or 'time_cycles'");
		if (!(e.time >= 0.0))
			throw ValidationError(where + ": time must be non-negative");
		e.action = parse_action(ev, where);
		out.push_back(std::move(e));
	}
	std::stable_sort(out.begin(), out.end(), [](const Event& a, const Event& b) { return a.time < b.time; });
	return out;
}

Scenario load_scenario(const std::filesystem::path& path) {
	std::ifstream in(path);
	if (!in)
		throw ParseError("cannot open scenario file '" + path.string() + "'");
	try {
		return parse_scenario(json::parse(in));
	} catch (const json::parse_error& e) {
		throw ParseError("scenario file '" + path.string() + "': " + e.what());
	}
}

void check_scenario(const Scenario& sc, const Network& net) {
	std::set<std::string> live_faults;
	for (const auto& f : net.faults)
		live_faults.insert(f.id);
	for (const auto& ev : sc) {
		std::visit(
			[&](const auto& a) {
				using T = std::decay_t<decltype(a)>;
				if constexpr (std::is_same_v<T, ApplyFault>) {
					net.bus_index(a.bus);
					live_faults.insert(a.id);
				} else if constexpr (std::is_same_v<T, ClearFault>) {
					if (!live_faults.count(a.id))
						throw UnknownReference("clear_fault refers to fault '" + a.id + "' that is not applied");
					live_faults.erase(a.id);
				} else if constexpr (std::is_same_v<T, SwitchOperation>) {
					bool found = false;
					for (const auto& sw : net.switches)
						found = found || sw.id == a.id;
					if (!found)
						throw UnknownReference("unknown switch '" + a.id + "'");
				} else if constexpr (std::is_same_v<T, ScaleLoad>) {
					net.bus_index(a.bus);
					if (std::none_of(net.loads.begin(), net.loads.end(), [&](const ZipLoad& l) { return l.bus == a.bus; }))
						throw UnknownReference("no load at bus '" + a.bus + "'");
				} else {
					net.bus_index(a.bus);
				}
			},
			ev.action);
	}
}

Complex fault_admittance_pu(const Network& net, const std::string& bus, Complex impedance_ohm) {
	return net.base_impedance(bus) / impedance_ohm;
}

void apply_event(Network& net, const Event& ev) {
	std::visit(
		[&](const auto& a) {
			using T = std::decay_t<decltype(a)>;
			if constexpr (std::is_same_v<T, ApplyFault>) {
				net.bus_index(a.bus);
				std::erase_if(net.faults, [&](const FaultShunt& f) { return f.id == a.id; });
				net.faults.push_back({a.id, a.bus, a.phases, fault_admittance_pu(net, a.bus, a.impedance_ohm)});
			} else if constexpr (std::is_same_v<T, ClearFault>) {
				const auto removed = std::erase_if(net.faults, [&](const FaultShunt& f) { return f.id == a.id; });
				if (removed == 0)
					throw UnknownReference("unknown fault '" + a.id + "'");
			} else if constexpr (std::is_same_v<T, SwitchOperation>) {
				net.switch_by_id(a.id).status = a.status;
			} else if constexpr (std::is_same_v<T, ScaleLoad>) {
				bool found = false;
				for (auto& ld : net.loads) {
					if (ld.bus != a.bus)
						continue;
					found = true;
					for (int k = 0; k < 3; ++k)
						if (a.multiplier[k])
							ld.scale[k] = *a.multiplier[k];
				}
				if (!found)
					throw UnknownReference("no load at bus '" + a.bus + "'");
			} else {
				net.bus_index(a.bus);
				PhaseValues s{};
				for (int k = 0; k < 3; ++k)
					s[k] = Complex(per_phase_mw_to_pu(a.s_mva[k].real(), net.mva_base),
					               per_phase_mw_to_pu(a.s_mva[k].imag(), net.mva_base));
				auto it = std::find_if(net.injections.begin(), net.injections.end(),
				                       [&](const ConstantInjection& inj) { return inj.bus == a.bus; });
				if (it == net.injections.end())
					net.injections.push_back({"injection@" + a.bus, a.bus, s});
				else
					it->s = s;
			}
		},
		ev.action);
}

std::string describe(const Event& ev) {
	std::ostringstream os;
	os << "t=" << ev.time << " s: ";
	std::visit(
		[&](const auto& a) {
			using T = std::decay_t<decltype(a)>;
			if constexpr (std::is_same_v<T, ApplyFault>) {
				os << "apply fault '" << a.id << "' at bus " << a.bus << " phases " << a.phases.to_string() << " through "
				   << a.impedance_ohm.real() << (a.impedance_ohm.imag() < 0 ? "-j" : "+j") << std::abs(a.impedance_ohm.imag())
				   << " ohm";
			} else if constexpr (std::is_same_v<T, ClearFault>) {
				os << "clear fault '" << a.id << "'";
			} else if constexpr (std::is_same_v<T, SwitchOperation>) {
				os << (a.status == SwitchStatus::Open ? "open" : "close") << " switch " << a.id;
			} else if constexpr (std::is_same_v<T, ScaleLoad>) {
				os << "scale load at bus " << a.bus << " to";
				for (Phase p : kAllPhases)
					if (const auto& m = a.multiplier[static_cast<int>(p)])
						os << ' ' << phase_letter(p) << '=' << *m;
			} else {
				os << "set injection at bus " << a.bus;
			}
		},
		ev.action);
	return os.str();
}

} // namespace phasedyn
