#include "smib_oracle.hpp"

#include <array>
#include <cmath>
#include <complex>
#include <fstream>
#include <map>
#include <stdexcept>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace oracle {

namespace {

using cd = std::complex<double>;
using Vec6 = Eigen::Matrix<double, 6, 1>;

constexpr double kPi = 3.14159265358979323846;
constexpr double kWs = 2.0 * kPi * 60.0;

struct Genrou {
	double rs, xd, xq, xdp, xqp, xdpp, xqpp, xl, tdop, tqop, tdopp, tqopp, h, d, mva;
	double efd = 0.0, pm = 0.0;
};

// subtransient flux behind x'' on each axis
double psi_d_pp(const Genrou& g, const Vec6& x) {
	return ((g.xdpp - g.xl) * x[0] + (g.xdp - g.xdpp) * x[2]) / (g.xdp - g.xl);
}
double psi_q_pp(const Genrou& g, const Vec6& x) {
	return (-(g.xqpp - g.xl) * x[1] + (g.xqp - g.xqpp) * x[3]) / (g.xqp - g.xl);
}

// Positive-sequence network reduced to the machine bus: V = voc + zth * I,
// with I leaving the machine. System base.
struct Thevenin {
	cd voc;
	cd zth;
};

struct Net {
	std::vector<std::string> buses;      // non-source buses
	std::map<std::string, int> index;
	std::string source_bus;
	cd source_v;
	Eigen::MatrixXcd y;                  // among non-source buses, no loads
	Eigen::VectorXcd y_to_source;        // coupling to the source bus
	std::vector<std::pair<int, cd>> loads; // shunt admittance per load
	std::vector<std::string> load_bus;
	double mva = 100.0;
	std::string machine_bus;
};

cd pair_value(const nlohmann::json& v) { return {v.at(0).get<double>(), v.at(1).get<double>()}; }

Net read_net(const nlohmann::json& doc, Genrou& g, double& p_set, double& v_set) {
	Net n;
	n.mva = doc.at("mva_base").get<double>();
	const auto& src = doc.at("sources").at(0);
	n.source_bus = src.at("bus").get<std::string>();
	n.source_v = std::polar(src.value("v_pu", 1.0), src.value("angle_deg", 0.0) * kPi / 180.0);
	for (const auto& b : doc.at("buses")) {
		const auto id = b.at("id").get<std::string>();
		if (id == n.source_bus)
			continue;
		n.index[id] = static_cast<int>(n.buses.size());
		n.buses.push_back(id);
	}
	const auto m = static_cast<Eigen::Index>(n.buses.size());
	n.y = Eigen::MatrixXcd::Zero(m, m);
	n.y_to_source = Eigen::VectorXcd::Zero(m);

	auto series = [&](const std::string& f, const std::string& t, cd y, cd shunt_half, double tap) {
		const bool fs = f == n.source_bus, ts = t == n.source_bus;
		if (!fs) {
			n.y(n.index.at(f), n.index.at(f)) += y / (tap * tap) + shunt_half;
			if (!ts) {
				n.y(n.index.at(f), n.index.at(t)) -= y / tap;
				n.y(n.index.at(t), n.index.at(f)) -= y / tap;
			} else {
				n.y_to_source(n.index.at(f)) -= y / tap;
			}
		}
		if (!ts) {
			n.y(n.index.at(t), n.index.at(t)) += y + shunt_half;
			if (fs)
				n.y_to_source(n.index.at(t)) -= y / tap;
		}
	};
	for (const auto& br : doc.value("branches", nlohmann::json::array())) {
		if (br.value("units", std::string("pu")) != "pu" || !br.contains("z1"))
			throw std::runtime_error("oracle handles per-unit sequence branches only");
		series(br.at("from"), br.at("to"), 1.0 / pair_value(br.at("z1")), cd(0.0, 0.5 * br.value("b1", 0.0)), 1.0);
	}
	// a delta/wye phase shift only rotates the machine side, which leaves
	// speeds and magnitudes unchanged
	for (const auto& tr : doc.value("transformers", nlohmann::json::array()))
		series(tr.at("from"), tr.at("to"), 1.0 / cd(tr.value("r", 0.0), tr.at("x").get<double>()), 0.0,
		       tr.value("tap", 1.0));
	for (const auto& ld : doc.value("loads", nlohmann::json::array())) {
		if (ld.contains("zip") && ld["zip"].value("z", 1.0) != 1.0)
			throw std::runtime_error("oracle handles constant-impedance loads only");
		const cd s(ld.at("p_mw").get<double>(), ld.value("q_mvar", 0.0));
		n.loads.push_back({n.index.at(ld.at("bus").get<std::string>()), std::conj(s) / n.mva});
		n.load_bus.push_back(ld.at("bus").get<std::string>());
	}

	const auto& mac = doc.at("machines").at(0);
	n.machine_bus = mac.at("bus").get<std::string>();
	const auto& p = mac.at("params");
	g = {p.at("rs"), p.at("xd"), p.at("xq"), p.at("xd_p"), p.at("xq_p"), p.at("xd_pp"), p.at("xq_pp"), p.at("xl"),
	     p.at("tdo_p"), p.at("tqo_p"), p.at("tdo_pp"), p.at("tqo_pp"), p.at("h"), p.at("d"), mac.at("mva_base")};
	p_set = mac.at("p_mw").get<double>() / n.mva;
	v_set = mac.value("v_pu", 1.0);
	return n;
}

Thevenin reduce(const Net& n, const std::vector<double>& scale) {
	Eigen::MatrixXcd y = n.y;
	for (std::size_t k = 0; k < n.loads.size(); ++k)
		y(n.loads[k].first, n.loads[k].first) += n.loads[k].second * scale[k];
	const Eigen::MatrixXcd z = y.inverse();
	const Eigen::VectorXcd v_open = z * (-n.y_to_source * n.source_v);
	const int g = n.index.at(n.machine_bus);
	return {v_open(g), z(g, g)};
}

struct Model {
	Genrou g;
	double to_mach_z; // system-base impedance to machine base
	double to_mach_i; // system-base current to machine base

	// rotor-frame stator currents consistent with the network for state x
	std::array<double, 2> currents(const Vec6& x, const Thevenin& th) const {
		const double s = x[5] / kWs;
		const cd r = std::polar(1.0, x[4] - 0.5 * kPi);
		const cd vo = th.voc / r;
		const cd z = th.zth * to_mach_z;
		Eigen::Matrix2d a;
		a << -g.rs - z.real(), s * g.xqpp + z.imag(), -s * g.xdpp - z.imag(), -g.rs - z.real();
		const Eigen::Vector2d b(vo.real() + s * psi_q_pp(g, x), vo.imag() - s * psi_d_pp(g, x));
		const Eigen::Vector2d i = a.partialPivLu().solve(b);
		return {i(0), i(1)};
	}

	double torque(const Vec6& x, double id, double iq) const {
		const double pd = psi_d_pp(g, x) - g.xdpp * id;
		const double pq = psi_q_pp(g, x) - g.xqpp * iq;
		return pd * iq - pq * id;
	}

	Vec6 rhs(const Vec6& x, const Thevenin& th) const {
		const auto [id, iq] = currents(x, th);
		const double kd = (g.xdp - g.xdpp) / ((g.xdp - g.xl) * (g.xdp - g.xl));
		const double kq = (g.xqp - g.xqpp) / ((g.xqp - g.xl) * (g.xqp - g.xl));
		Vec6 f;
		f[0] = (g.efd - x[0] - (g.xd - g.xdp) * (id - kd * (x[2] + (g.xdp - g.xl) * id - x[0]))) / g.tdop;
		f[1] = (-x[1] + (g.xq - g.xqp) * (iq - kq * (x[3] + (g.xqp - g.xl) * iq + x[1]))) / g.tqop;
		f[2] = (x[0] - x[2] - (g.xdp - g.xl) * id) / g.tdopp;
		f[3] = (-x[1] - x[3] - (g.xqp - g.xl) * iq) / g.tqopp;
		f[4] = x[5] - kWs;
		f[5] = kWs / (2.0 * g.h) * (g.pm * kWs / x[5] - torque(x, id, iq) - g.d * (x[5] - kWs) / kWs);
		return f;
	}
};

Vec6 trapezoid(const Model& m, const Vec6& x0, const Thevenin& th, double h) {
	const Vec6 f0 = m.rhs(x0, th);
	Vec6 x = x0 + h * f0;
	for (int it = 0; it < 30; ++it) {
		const Vec6 r = x - x0 - 0.5 * h * (f0 + m.rhs(x, th));
		if (r.cwiseAbs().maxCoeff() < 1e-13)
			return x;
		Eigen::Matrix<double, 6, 6> jac;
		for (int c = 0; c < 6; ++c) {
			const double dx = 1e-7 * std::max(1.0, std::abs(x[c]));
			Vec6 xp = x, xm = x;
			xp[c] += dx;
			xm[c] -= dx;
			jac.col(c) = (xp - xm - 0.5 * h * (m.rhs(xp, th) - m.rhs(xm, th))) / (2.0 * dx);
		}
		x -= jac.partialPivLu().solve(r);
	}
	throw std::runtime_error("oracle trapezoid did not converge");
}

} // namespace

SmibRun simulate_smib(const SmibSetup& setup) {
	std::ifstream in(setup.fixture);
	if (!in)
		throw std::runtime_error("cannot open " + setup.fixture.string());
	const auto doc = nlohmann::json::parse(in);
	Model m{};
	double p_set = 0.0, v_set = 1.0;
	const Net net = read_net(doc, m.g, p_set, v_set);
	m.to_mach_z = m.g.mva / net.mva;
	m.to_mach_i = net.mva / m.g.mva;

	std::vector<double> scale(net.loads.size(), 1.0);
	Thevenin th = reduce(net, scale);

	// machine bus angle giving the scheduled output at the set voltage
	auto output = [&](double ang) {
		const cd v = std::polar(v_set, ang);
		const cd i = (v - th.voc) / th.zth;
		return v * std::conj(i);
	};
	double ang = 0.0;
	for (int it = 0; it < 100; ++it) {
		const double f = output(ang).real() - p_set;
		if (std::abs(f) < 1e-14)
			break;
		const double df = (output(ang + 1e-7).real() - output(ang - 1e-7).real()) / 2e-7;
		ang -= f / df;
	}

	// steady state on the machine base
	const cd v = std::polar(v_set, ang);
	const cd i_sys = (v - th.voc) / th.zth;
	const cd i = i_sys * m.to_mach_i;
	const Genrou& g = m.g;
	const double delta = std::arg(v + cd(g.rs, g.xq) * i);
	const cd rot = std::polar(1.0, -(delta - 0.5 * kPi));
	const cd vr = v * rot, ir = i * rot;
	Vec6 x;
	x[1] = (g.xq - g.xqp) * ir.imag();
	x[0] = vr.imag() + g.rs * ir.imag() + g.xdp * ir.real();
	x[2] = x[0] - (g.xdp - g.xl) * ir.real();
	x[3] = -x[1] - (g.xqp - g.xl) * ir.imag();
	x[4] = delta;
	x[5] = kWs;
	m.g.efd = x[0] + (g.xd - g.xdp) * ir.real();
	m.g.pm = m.torque(x, ir.real(), ir.imag());

	SmibRun out;
	out.spacing = setup.sample_spacing;
	const double h = setup.sample_spacing / setup.substeps;
	const auto samples = static_cast<long long>(std::llround(setup.duration / setup.sample_spacing));
	auto record = [&](double t) {
		const auto [id, iq] = m.currents(x, th);
		out.time.push_back(t);
		out.speed_dev_hz.push_back((x[5] - kWs) / (2.0 * kPi));
		out.delta.push_back(x[4]);
		out.te.push_back(m.torque(x, id, iq));
	};
	auto apply_steps = [&](long long k) {
		bool changed = false;
		for (const auto& [t, mult] : setup.load_steps)
			if (std::llround(t / h) == k) {
				for (std::size_t l = 0; l < net.loads.size(); ++l)
					if (net.load_bus[l] == setup.load_bus)
						scale[l] = mult;
				changed = true;
			}
		if (changed)
			th = reduce(net, scale);
	};

	apply_steps(0);
	record(0.0);
	for (long long k = 1; k <= samples * setup.substeps; ++k) {
		x = trapezoid(m, x, th, h);
		apply_steps(k);
		if (k % setup.substeps == 0)
			record(static_cast<double>(k) * h);
	}
	return out;
}

} // namespace oracle
