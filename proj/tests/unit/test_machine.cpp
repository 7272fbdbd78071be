#include <cmath>
#include <complex>

#include <doctest.h>

#include "phasedyn/errors.hpp"
#include "phasedyn/machine.hpp"
#include "phasedyn/powerflow.hpp"
#include "support.hpp"

using namespace phasedyn;
using testsupport::uniform;

namespace {

MachineState random_state() {
	MachineState st;
	st.eq_p = uniform(0.5, 1.3);
	st.ed_p = uniform(-0.5, 0.5);
	st.psi_1d = uniform(0.4, 1.2);
	st.psi_2q = uniform(-0.6, 0.6);
	st.delta = uniform(-1.5, 1.5);
	st.omega = kSynchronousSpeed * uniform(0.97, 1.03);
	return st;
}

Dq0Vector random_current() { return {uniform(-1.5, 1.5), uniform(-1.5, 1.5), uniform(-0.5, 0.5)}; }

// the same flux expressions written out in terms of the winding split
std::pair<double, double> flux_by_hand(const MachineState& s, const Dq0Vector& i, const MachineParams& p) {
	const double wd = (p.xd_pp - p.xl) / (p.xd_p - p.xl);
	const double wq = (p.xq_pp - p.xl) / (p.xq_p - p.xl);
	const double psi_d = wd * s.eq_p + (1.0 - wd) * s.psi_1d - p.xd_pp * i.d;
	const double psi_q = -wq * s.ed_p + (1.0 - wq) * s.psi_2q - p.xq_pp * i.q;
	return {psi_d, psi_q};
}

ThreePhasePhasor balanced(double mag, double ang) { return ThreePhasePhasor::balanced(mag, ang); }

} // namespace

TEST_CASE("subtransient weights sum to one") {
	MachineParams p;
	MachineState st;
	st.eq_p = 1.0;
	st.psi_1d = 1.0;
	const FluxLinkages psi = flux_linkages(st, {}, p);
	CHECK(psi.psi_d == doctest::Approx(1.0).epsilon(1e-14));
	CHECK(psi.psi_q == 0.0);
}

TEST_CASE("d-axis current alone gives -X''d flux") {
	MachineParams p;
	const FluxLinkages psi = flux_linkages(MachineState{}, {1.0, 0.0, 0.0}, p);
	CHECK(psi.psi_d == doctest::Approx(-p.xd_pp));
}

TEST_CASE("flux linkages agree with a separate evaluation") {
	MachineParams p;
	p.xq_pp = 0.27;
	for (int k = 0; k < 200; ++k) {
		const MachineState st = random_state();
		const Dq0Vector i = random_current();
		const FluxLinkages psi = flux_linkages(st, i, p);
		const auto [d, q] = flux_by_hand(st, i, p);
		CHECK(std::abs(psi.psi_d - d) < 1e-12);
		CHECK(std::abs(psi.psi_q - q) < 1e-12);
	}
}

TEST_CASE("stator voltages at the reference points") {
	MachineParams p;
	p.rs = 0.0;
	Dq0Vector v = stator_voltages({1.0, 0.0}, {}, p.omega_s, p);
	CHECK(v.d == 0.0);
	CHECK(v.q == doctest::Approx(1.0));
	CHECK(v.zero == 0.0);

	p.rs = 0.0025;
	v = stator_voltages({0.0, 0.0}, {0.0, 0.0, 2.0}, p.omega_s, p);
	CHECK(v.zero == doctest::Approx(-0.005));
}

TEST_CASE("speed scales only the flux terms") {
	MachineParams p;
	const FluxLinkages psi{0.9, -0.3};
	const Dq0Vector i{0.4, 0.7, 0.1};
	const Dq0Vector a = stator_voltages(psi, i, p.omega_s, p);
	const Dq0Vector b = stator_voltages(psi, i, 2.0 * p.omega_s, p);
	CHECK(b.d + p.rs * i.d == doctest::Approx(2.0 * (a.d + p.rs * i.d)));
	CHECK(b.q + p.rs * i.q == doctest::Approx(2.0 * (a.q + p.rs * i.q)));
	CHECK(b.zero == a.zero);
}

TEST_CASE("stator algebra superposes in the currents") {
	MachineParams p;
	for (int k = 0; k < 50; ++k) {
		MachineState st = random_state();
		st.omega = p.omega_s;
		const Dq0Vector i1 = random_current(), i2 = random_current();
		const Dq0Vector sum{i1.d + i2.d, i1.q + i2.q, i1.zero + i2.zero};
		auto v = [&](const Dq0Vector& i) { return stator_voltages(flux_linkages(st, i, p), i, st.omega, p); };
		const Dq0Vector v0 = v({}), v1 = v(i1), v2 = v(i2), v12 = v(sum);
		CHECK(std::abs(v12.d - (v1.d + v2.d - v0.d)) < 1e-12);
		CHECK(std::abs(v12.q - (v1.q + v2.q - v0.q)) < 1e-12);
		CHECK(std::abs(v12.zero - (v1.zero + v2.zero - v0.zero)) < 1e-12);
	}
}

TEST_CASE("no-load initialization") {
	MachineParams p;
	const auto init = initialize(balanced(1.0, 0.0), 0.0, 0.0, p);
	CHECK(std::abs(init.state.delta) < 1e-12);
	CHECK(init.state.omega == p.omega_s);
	CHECK(std::abs(init.current.d) < 1e-12);
	CHECK(std::abs(init.current.q) < 1e-12);
	CHECK(init.inputs.efd == doctest::Approx(1.0));
}

TEST_CASE("initialization is an equilibrium") {
	MachineParams p;
	p.xq_pp = 0.28;
	for (int k = 0; k < 50; ++k) {
		const double pgen = uniform(0.0, 1.0), qgen = uniform(-0.3, 0.6);
		const auto init = initialize(balanced(uniform(0.95, 1.05), uniform(-kPi, kPi)), pgen, qgen, p);
		const auto dx = derivatives(init.state, init.current, init.inputs, p);
		for (double d : dx)
			CHECK(std::abs(d) < 1e-9);
		const double te = electrical_torque(flux_linkages(init.state, init.current, p), init.current);
		CHECK(te == doctest::Approx(init.inputs.pm).epsilon(1e-9));
		// with rs = 0.0025 the air-gap torque carries the stator loss
		CHECK(te == doctest::Approx(pgen + p.rs * (init.current.d * init.current.d + init.current.q * init.current.q))
		              .epsilon(1e-9));
	}
}

TEST_CASE("speed is stationary when torques balance") {
	MachineParams p;
	const auto init = initialize(balanced(1.0, 0.2), 0.7, 0.1, p);
	MachineState st = init.state;
	st.eq_p *= 1.01; // disturb the flux states only
	const auto dx = derivatives(st, init.current, init.inputs, p);
	const double te = electrical_torque(flux_linkages(st, init.current, p), init.current);
	MachineInputs u = init.inputs;
	u.pm = te;
	CHECK(std::abs(derivatives(st, init.current, u, p)[5]) < 1e-12);
	CHECK(std::abs(dx[5]) > 1e-6);
}

TEST_CASE("numerical Jacobian matches complex-step derivatives") {
	MachineParams p;
	MachineInputs u{1.8, 0.75};
	for (int k = 0; k < 50; ++k) {
		const MachineState st = random_state();
		const Dq0Vector i = random_current();
		const auto jac = numerical_jacobian(st, i, u, p);
		const auto x = st.to_vector();
		for (std::size_t c = 0; c < 6; ++c) {
			std::array<std::complex<double>, 6> xc;
			for (std::size_t r = 0; r < 6; ++r)
				xc[r] = x[r];
			const double h = 1e-20;
			xc[c] += std::complex<double>(0.0, h);
			const auto f = detail::genrou_rhs(xc, i, u, p);
			for (std::size_t r = 0; r < 6; ++r) {
				const double exact = f[r].imag() / h;
				CHECK(std::abs(jac(static_cast<int>(r), static_cast<int>(c)) - exact) < 1e-6 * std::max(1.0, std::abs(exact)));
			}
		}
	}
}

TEST_CASE("unbalanced terminal phasors are rejected") {
	MachineParams p;
	ThreePhasePhasor v = balanced(1.0, 0.0);
	v[Phase::B] = Phasor(0.9, -2.0 * kPi / 3.0);
	CHECK_THROWS_AS(initialize(v, 0.5, 0.0, p), ValidationError);
	v = balanced(1.0, 0.0);
	v[Phase::C].reset();
	CHECK_THROWS_AS(initialize(v, 0.5, 0.0, p), ValidationError);
}

TEST_CASE("dispatch needing negative field voltage is infeasible") {
	MachineParams p;
	CHECK_THROWS_AS(initialize(balanced(1.0, 0.0), 0.0, -1.5, p), InfeasibleDispatch);
}

TEST_CASE("inconsistent reactances are rejected") {
	MachineParams p;
	p.xd_pp = 0.1;
	p.xl = 0.2;
	CHECK_THROWS_AS(p.validate(), ValidationError);
	p = MachineParams{};
	p.h = 0.0;
	CHECK_THROWS_AS(p.validate(), ValidationError);
}

TEST_CASE("SMIB fixture initializes to an equilibrium") {
	const Network net = load_network(testsupport::data_path("smib.json"));
	const InitialCondition ic = initial_powerflow(net);
	REQUIRE(ic.machines.size() == 1);
	CHECK(ic.machines[0].p == doctest::Approx(0.8).epsilon(1e-9));
	const MachineParams& p = net.machines[0].params;
	const auto init = initialize(ic.machines[0].voltage, ic.machines[0].p, ic.machines[0].q, p);
	for (double d : derivatives(init.state, init.current, init.inputs, p))
		CHECK(std::abs(d) < 1e-9);
}

TEST_CASE("balanced operation at synchronous speed keeps v_dq constant") {
	MachineParams p;
	const auto init = initialize(balanced(1.02, 0.3), 0.8, 0.2, p);
	const Phasor v = *ThreePhasePhasor::balanced(1.02, 0.3)[Phase::A];
	Dq0Vector first{};
	for (int k = 0; k < 40; ++k) {
		const double t = k * 0.0013;
		const Eigen::Vector3d abc(phasor_to_instant(v, t), phasor_to_instant({v.magnitude, v.angle - 2.0 * kPi / 3.0}, t),
		                          phasor_to_instant({v.magnitude, v.angle + 2.0 * kPi / 3.0}, t));
		Dq0Vector dq = park(abc, shaft_angle(t, init.state.delta));
		dq = {dq.d / kSqrt2, dq.q / kSqrt2, dq.zero / kSqrt2};
		const Dq0Vector model = stator_voltages(flux_linkages(init.state, init.current, p), init.current, p.omega_s, p);
		CHECK(std::abs(dq.d - model.d) < 1e-9);
		CHECK(std::abs(dq.q - model.q) < 1e-9);
		if (k == 0)
			first = dq;
		CHECK(std::abs(dq.d - first.d) < 1e-9);
		CHECK(std::abs(dq.q - first.q) < 1e-9);
	}
}

TEST_CASE("machine impedance has the expected sequence values") {
	MachineParams p;
	p.mva_base = 200.0;
	const Eigen::Matrix3cd z = machine_impedance_abc(p, 100.0);
	const Complex a = std::polar(1.0, 2.0 * kPi / 3.0);
	auto seq_voltage = [&](Complex i0, Complex i1, Complex i2) {
		const Eigen::Vector3cd i(i0 + i1 + i2, i0 + a * a * i1 + a * i2, i0 + a * i1 + a * a * i2);
		return Eigen::Vector3cd(z * i);
	};
	const double scale = 100.0 / 200.0;
	CHECK(std::abs(seq_voltage(0, 1, 0)(0) - Complex(p.rs, p.xd_pp) * scale) < 1e-12);
	CHECK(std::abs(seq_voltage(0, 0, 1)(0) - Complex(p.rs, -p.xd_pp) * scale) < 1e-12);
	CHECK(std::abs(seq_voltage(1, 0, 0)(0) - Complex(p.rs, 0.0) * scale) < 1e-12);
}
