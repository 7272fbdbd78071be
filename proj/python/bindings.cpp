#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "phasedyn/engine.hpp"
#include "phasedyn/errors.hpp"
#include "phasedyn/frames.hpp"
#include "phasedyn/metrics.hpp"

namespace py = pybind11;
using namespace phasedyn;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
	py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
	std::copy(v.begin(), v.end(), out.mutable_data());
	return out;
}

std::span<const double> view(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
	if (a.ndim() != 1)
		throw ValidationError("expected a one-dimensional array");
	return {a.data(), static_cast<std::size_t>(a.size())};
}

py::dict simulate(const std::string& network, const std::optional<std::string>& scenario, double dt, double duration,
                  std::optional<double> eps, const std::vector<std::string>& record, const std::string& interface,
                  int workers) {
	const Network net = load_network(network);
	const Scenario sc = scenario ? load_scenario(*scenario) : Scenario{};
	EngineConfig cfg;
	cfg.dt = dt;
	cfg.duration = duration;
	cfg.eps = eps;
	cfg.record = record;
	cfg.workers = workers;
	if (interface == "fixed-voltage")
		cfg.interface = MachineInterface::FixedVoltage;
	else if (interface != "compensated")
		throw ValidationError("interface must be 'compensated' or 'fixed-voltage'");

	RunResult r;
	{
		py::gil_scoped_release release;
		r = run(net, sc, cfg);
	}
	py::dict columns;
	for (std::size_t c = 0; c < r.series.columns.size(); ++c)
		columns[py::str(r.series.columns[c])] = to_array(r.series.data[c]);
	py::dict out;
	out["time"] = to_array(r.series.time);
	out["columns"] = columns;
	out["events"] = r.event_log;
	out["ok"] = r.ok();
	out["error"] = r.failure_message;
	out["wall_seconds"] = r.stats.wall_seconds;
	return out;
}

} // namespace

PYBIND11_MODULE(_core, m) {
	m.doc() = "Three-phase electromechanical transient simulator";

	py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
	py::register_exception<SingularSampling>(m, "SingularSampling", PyExc_ValueError);

	m.def(
		"recover_phasor",
		[](double x1, double x2, double t1, double t2) {
			const Phasor p = recover_phasor({x1, x2, t1, t2});
			return py::make_tuple(p.magnitude, p.angle);
		},
		py::arg("x1"), py::arg("x2"), py::arg("t1"), py::arg("t2"),
		"RMS magnitude and angle of a 60 Hz sinusoid from two samples.");
	m.def(
		"phasor_to_instant", [](double magnitude, double angle, double t) { return phasor_to_instant({magnitude, angle}, t); },
		py::arg("magnitude"), py::arg("angle"), py::arg("t"));

	m.def("rmse", [](py::array_t<double, py::array::c_style | py::array::forcecast> a,
	                 py::array_t<double, py::array::c_style | py::array::forcecast> b) { return rmse(view(a), view(b)); });
	m.def("correlation", [](py::array_t<double, py::array::c_style | py::array::forcecast> a,
	                        py::array_t<double, py::array::c_style | py::array::forcecast> b) {
		return correlation(view(a), view(b));
	});
	m.def(
		"dominant_frequency",
		[](py::array_t<double, py::array::c_style | py::array::forcecast> seq, double spacing) {
			return dominant_frequency(view(seq), spacing);
		},
		py::arg("seq"), py::arg("spacing"));
	m.def(
		"sag_stats",
		[](py::array_t<double, py::array::c_style | py::array::forcecast> seq, double spacing, double threshold) {
			const SagStats s = sag_stats(view(seq), spacing, threshold);
			return py::make_tuple(s.minimum, s.longest_below);
		},
		py::arg("seq"), py::arg("spacing"), py::arg("threshold"));

	m.def(
		"component_counts",
		[](const std::string& path) {
			const auto c = count_components(load_network(path));
			py::dict d;
			d["buses"] = c.buses;
			d["lines"] = c.lines_3ph + c.lines_2ph + c.lines_1ph;
			d["transformers"] = c.transformers_3ph + c.transformers_1ph;
			d["loads"] = c.loads;
			d["machines"] = c.machines;
			return d;
		},
		py::arg("network"));

	m.def("simulate", &simulate, py::arg("network"), py::arg("scenario") = py::none(), py::arg("dt") = 1.0 / 240.0,
	      py::arg("duration") = 1.0, py::arg("eps") = py::none(), py::arg("record") = std::vector<std::string>{},
	      py::arg("interface") = "compensated", py::arg("workers") = 1,
	      "Runs the simulator. Returns time, a dict of trajectory columns, the event log and the run status.");
}
