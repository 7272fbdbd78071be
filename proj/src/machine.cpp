#include "phasedyn/machine.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/LU>

#include "phasedyn/errors.hpp"

namespace phasedyn {

void MachineParams::validate() const {
	std::ostringstream bad;
	if (!(xd >= xd_p && xd_p >= xd_pp && xd_pp > xl && xl > 0.0))
		bad << " d-axis reactances must satisfy xd >= xd' >= xd'' > xl > 0;";
	if (!(xq >= xq_p && xq_p >= xq_pp && xq_pp > xl))
		bad << " q-axis reactances must satisfy xq >= xq' >= xq'' > xl;";
	if (!(tdo_p > 0.0 && tqo_p > 0.0 && tdo_pp > 0.0 && tqo_pp > 0.0))
		bad << " time constants must be positive;";
	if (!(h > 0.0))
		bad << " inertia must be positive;";
	if (!(rs >= 0.0 && d >= 0.0))
		bad << " rs and damping must be non-negative;";
	if (!(mva_base > 0.0 && omega_s > 0.0))
		bad << " mva_base and omega_s must be positive;";
	const auto msg = bad.str();
	if (!msg.empty())
		throw ValidationError("machine parameters:" + msg);
}

FluxLinkages flux_linkages(const MachineState& st, const Dq0Vector& i, const MachineParams& p) {
	const double psi_d_pp = (p.xd_pp - p.xl) / (p.xd_p - p.xl) * st.eq_p
		+ (p.xd_p - p.xd_pp) / (p.xd_p - p.xl) * st.psi_1d;
	const double psi_q_pp = -(p.xq_pp - p.xl) / (p.xq_p - p.xl) * st.ed_p
		+ (p.xq_p - p.xq_pp) / (p.xq_p - p.xl) * st.psi_2q;
	return {psi_d_pp - p.xd_pp * i.d, psi_q_pp - p.xq_pp * i.q};
}

Dq0Vector stator_voltages(const FluxLinkages& psi, const Dq0Vector& i, double omega, const MachineParams& p) {
	const double speed = omega / p.omega_s;
	return {-p.rs * i.d - speed * psi.psi_q, -p.rs * i.q + speed * psi.psi_d, -p.rs * i.zero};
}

double electrical_torque(const FluxLinkages& psi, const Dq0Vector& i) { return psi.psi_d * i.q - psi.psi_q * i.d; }

MachineState::Vector derivatives(const MachineState& st, const Dq0Vector& i, const MachineInputs& u,
                                 const MachineParams& p) {
	return detail::genrou_rhs(st.to_vector(), i, u, p);
}

Eigen::Matrix<double, 6, 6> numerical_jacobian(const MachineState& st, const Dq0Vector& i, const MachineInputs& u,
                                               const MachineParams& p, double rel_step) {
	Eigen::Matrix<double, 6, 6> jac;
	const auto x0 = st.to_vector();
	for (std::size_t col = 0; col < MachineState::kSize; ++col) {
		const double h = rel_step * std::max(1.0, std::abs(x0[col]));
		auto xp = x0;
		auto xm = x0;
		xp[col] += h;
		xm[col] -= h;
		const auto fp = detail::genrou_rhs(xp, i, u, p);
		const auto fm = detail::genrou_rhs(xm, i, u, p);
		for (std::size_t row = 0; row < MachineState::kSize; ++row)
			jac(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = (fp[row] - fm[row]) / (2.0 * h);
	}
	return jac;
}

namespace {

void require_balanced(const ThreePhasePhasor& terminal) {
	for (Phase ph : kAllPhases)
		if (!terminal[ph])
			throw ValidationError(std::string("machine terminal is missing phase ") + phase_letter(ph));
	const Phasor& a = *terminal[Phase::A];
	for (Phase ph : {Phase::B, Phase::C}) {
		const Phasor& x = *terminal[ph];
		const double mag_err = std::abs(x.magnitude - a.magnitude);
		const double ang_err = std::abs(normalize_angle(x.angle - a.angle - phase_shift(ph)));
		if (mag_err > 1e-6 * std::max(1.0, a.magnitude) || ang_err > 1e-6)
			throw ValidationError("machine initialization requires balanced terminal phasors");
	}
}

} // namespace

MachineInitialization initialize(const ThreePhasePhasor& terminal, double p, double q, const MachineParams& params) {
	params.validate();
	require_balanced(terminal);

	const Complex v = terminal[Phase::A]->to_complex();
	if (std::abs(v) < 1e-6)
		throw InfeasibleDispatch("machine terminal voltage is zero");
	const Complex current = std::conj(Complex(p, q) / v);

	// q axis lies along the internal voltage behind R_s + jX_q
	const Complex eq_axis = v + Complex(params.rs, params.xq) * current;
	// Pointing away from the terminal voltage, it is a field reversal
	// rather than a load angle.
	if ((eq_axis * std::conj(v)).real() <= 0.0) {
		std::ostringstream msg;
		msg << "dispatch P=" << p << " Q=" << q << " at |V|=" << std::abs(v) << " needs a negative field voltage";
		throw InfeasibleDispatch(msg.str());
	}
	const double delta = std::arg(eq_axis);
	const Complex to_rotor = std::polar(1.0, -(delta - 0.5 * kPi));
	const Complex vdq = v * to_rotor;
	const Complex idq = current * to_rotor;
	const double vq = vdq.imag();
	const double id = idq.real();
	const double iq = idq.imag();

	MachineState st;
	st.delta = delta;
	st.omega = params.omega_s;
	st.ed_p = (params.xq - params.xq_p) * iq;
	st.eq_p = vq + params.rs * iq + params.xd_p * id;
	st.psi_1d = st.eq_p - (params.xd_p - params.xl) * id;
	st.psi_2q = -st.ed_p - (params.xq_p - params.xl) * iq;

	const Dq0Vector idq0{id, iq, 0.0};
	MachineInputs in;
	in.efd = st.eq_p + (params.xd - params.xd_p) * id;
	in.pm = electrical_torque(flux_linkages(st, idq0, params), idq0);

	if (!std::isfinite(in.efd) || in.efd <= 0.0) {
		std::ostringstream msg;
		msg << "dispatch P=" << p << " Q=" << q << " at |V|=" << std::abs(v)
			<< " needs field voltage " << in.efd << " p.u.";
		throw InfeasibleDispatch(msg.str());
	}
	return {st, in, idq0};
}

Eigen::Matrix3cd machine_impedance_abc(const MachineParams& p, double system_mva_base) {
	const double to_system = system_mva_base / p.mva_base;
	const double x = 0.5 * (p.xd_pp + p.xq_pp);
	// With the stator flux derivative left out, a negative-sequence current
	// seen through two samples of the rotor frame produces a voltage that
	// leads it, so that sequence appears as R_s - jX''.
	const Complex z1 = Complex(p.rs, x) * to_system;
	const Complex z2 = Complex(p.rs, -x) * to_system;
	// a machine with zero stator resistance would short the zero sequence outright
	const Complex z0 = Complex(std::max(p.rs, 1e-6), 0.0) * to_system;
	const Complex a = std::polar(1.0, 2.0 * kPi / 3.0);
	Eigen::Matrix3cd seq;
	seq << 1.0, 1.0, 1.0, 1.0, a * a, a, 1.0, a, a * a;
	const Eigen::Vector3cd diag(z0, z1, z2);
	return seq * diag.asDiagonal() * seq.inverse();
}

} // namespace phasedyn
