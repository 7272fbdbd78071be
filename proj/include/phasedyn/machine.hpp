#pragma once

#include <array>

#include <Eigen/Core>

#include "phasedyn/frames.hpp"
#include "phasedyn/types.hpp"

namespace phasedyn {

/// Round-rotor (GENROU-style) machine data, p.u. on the machine base.
struct MachineParams {
	double rs = 0.0025;
	double xd = 1.8;
	double xq = 1.7;
	double xd_p = 0.3;
	double xq_p = 0.55;
	double xd_pp = 0.25;
	double xq_pp = 0.25;
	double xl = 0.15;
	double tdo_p = 7.0;
	double tqo_p = 0.75;
	double tdo_pp = 0.035;
	double tqo_pp = 0.05;
	double h = 3.5;  ///< inertia constant, s
	double d = 2.0;  ///< damping, p.u. torque per p.u. speed deviation
	double omega_s = kSynchronousSpeed;
	double mva_base = 100.0;

	/// Throws ValidationError when the reactance ordering or the time
	/// constants are inconsistent.
	void validate() const;
};

/// Dynamic states. Flux states in p.u., delta in rad, omega in rad/s.
struct MachineState {
	double eq_p = 0.0;
	double ed_p = 0.0;
	double psi_1d = 0.0;
	double psi_2q = 0.0;
	double delta = 0.0;
	double omega = kSynchronousSpeed;

	static constexpr std::size_t kSize = 6;
	using Vector = std::array<double, kSize>;

	Vector to_vector() const { return {eq_p, ed_p, psi_1d, psi_2q, delta, omega}; }
	static MachineState from_vector(const Vector& x) { return {x[0], x[1], x[2], x[3], x[4], x[5]}; }
};

/// Held constant: no exciter or governor is modelled.
struct MachineInputs {
	double efd = 1.0;
	double pm = 0.0;
};

struct FluxLinkages {
	double psi_d = 0.0;
	double psi_q = 0.0;
};

/// Stator flux linkages from the subtransient flux states and the stator
/// currents (generator convention, currents leaving the machine).
FluxLinkages flux_linkages(const MachineState& st, const Dq0Vector& i, const MachineParams& p);

/// v_d = -R_s I_d - (w/w_s) psi_q, v_q = -R_s I_q + (w/w_s) psi_d, v_0 = -R_s I_0.
Dq0Vector stator_voltages(const FluxLinkages& psi, const Dq0Vector& i, double omega, const MachineParams& p);

/// T_e = psi_d I_q - psi_q I_d.
double electrical_torque(const FluxLinkages& psi, const Dq0Vector& i);

namespace detail {

/// Right-hand side of the six rotor equations. Templated on the scalar so the
/// same expressions can be evaluated with complex perturbations.
template <class T>
std::array<T, 6> genrou_rhs(const std::array<T, 6>& x, const Dq0Vector& i, const MachineInputs& u,
                            const MachineParams& p) {
	const T& eq_p = x[0];
	const T& ed_p = x[1];
	const T& psi_1d = x[2];
	const T& psi_2q = x[3];
	const T& omega = x[5];

	const double kd = (p.xd_p - p.xd_pp) / ((p.xd_p - p.xl) * (p.xd_p - p.xl));
	const double kq = (p.xq_p - p.xq_pp) / ((p.xq_p - p.xl) * (p.xq_p - p.xl));

	const T psi_d = (p.xd_pp - p.xl) / (p.xd_p - p.xl) * eq_p + (p.xd_p - p.xd_pp) / (p.xd_p - p.xl) * psi_1d
		- p.xd_pp * i.d;
	const T psi_q = -(p.xq_pp - p.xl) / (p.xq_p - p.xl) * ed_p + (p.xq_p - p.xq_pp) / (p.xq_p - p.xl) * psi_2q
		- p.xq_pp * i.q;
	const T te = psi_d * i.q - psi_q * i.d;

	std::array<T, 6> dx;
	dx[0] = (u.efd - eq_p - (p.xd - p.xd_p) * (i.d - kd * (psi_1d + (p.xd_p - p.xl) * i.d - eq_p))) / p.tdo_p;
	dx[1] = (-ed_p + (p.xq - p.xq_p) * (i.q - kq * (psi_2q + (p.xq_p - p.xl) * i.q + ed_p))) / p.tqo_p;
	dx[2] = (-psi_1d + eq_p - (p.xd_p - p.xl) * i.d) / p.tdo_pp;
	dx[3] = (-psi_2q - ed_p - (p.xq_p - p.xl) * i.q) / p.tqo_pp;
	dx[4] = omega - p.omega_s;
	dx[5] = p.omega_s / (2.0 * p.h) * (u.pm * p.omega_s / omega - te - p.d * (omega - p.omega_s) / p.omega_s);
	return dx;
}

} // namespace detail

/// d/dt of [E_q', E_d', psi_1d, psi_2q, delta, omega] with the stator
/// currents held at `i`.
MachineState::Vector derivatives(const MachineState& st, const Dq0Vector& i, const MachineInputs& u,
                                 const MachineParams& p);

/// Central-difference Jacobian of derivatives() with respect to the state.
Eigen::Matrix<double, 6, 6> numerical_jacobian(const MachineState& st, const Dq0Vector& i, const MachineInputs& u,
                                               const MachineParams& p, double rel_step = 1e-6);

struct MachineInitialization {
	MachineState state;
	MachineInputs inputs;
	/// Stator current in the rotor frame (RMS-scaled, machine base).
	Dq0Vector current;
};

/// Steady state that reproduces a balanced terminal condition. `p` and `q`
/// are three-phase output on the machine base. Throws ValidationError for
/// unbalanced terminal phasors and InfeasibleDispatch when the required
/// field voltage is not positive.
MachineInitialization initialize(const ThreePhasePhasor& terminal, double p, double q, const MachineParams& params);

/// Phase-coordinate Thevenin impedance behind which the machine's internal
/// voltage sits in the network, as the two-sample terminal voltage sees it:
/// R_s + jX'' positive sequence, R_s - jX'' negative sequence, R_s zero
/// sequence. System base.
Eigen::Matrix3cd machine_impedance_abc(const MachineParams& p, double system_mva_base);

} // namespace phasedyn
