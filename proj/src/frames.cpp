#include "phasedyn/frames.hpp"

#include <cmath>
#include <sstream>

#include "phasedyn/errors.hpp"

namespace phasedyn {

namespace {

constexpr double kTwoThirdsPi = 2.0 * kPi / 3.0;

} // namespace

double normalize_angle(double angle) {
	double wrapped = std::remainder(angle, 2.0 * kPi);
	// remainder() returns [-pi, pi]; -pi belongs to the upper end
	if (wrapped <= -kPi)
		wrapped += 2.0 * kPi;
	return wrapped;
}

Phasor::Phasor(double mag, double ang) {
	if (mag < 0.0) {
		mag = -mag;
		ang += kPi;
	}
	magnitude = mag;
	angle = normalize_angle(ang);
}

Phasor Phasor::from_complex(Complex value) {
	return Phasor(std::abs(value), std::atan2(value.imag(), value.real()));
}

Complex Phasor::to_complex() const { return std::polar(magnitude, angle); }

ThreePhasePhasor ThreePhasePhasor::balanced(double magnitude, double angle) {
	ThreePhasePhasor out;
	for (Phase p : kAllPhases)
		out[p] = Phasor(magnitude, angle + phase_shift(p));
	return out;
}

ThreePhasePhasor ThreePhasePhasor::from_complex(const PhaseValues& values, PhaseSet present) {
	ThreePhasePhasor out;
	for (Phase p : kAllPhases)
		if (present.contains(p))
			out[p] = Phasor::from_complex(values[static_cast<int>(p)]);
	return out;
}

PhaseValues ThreePhasePhasor::to_complex() const {
	PhaseValues out{};
	for (Phase p : kAllPhases)
		if (const auto& ph = (*this)[p])
			out[static_cast<int>(p)] = ph->to_complex();
	return out;
}

double shaft_angle(double t, double delta) { return kSynchronousSpeed * t + delta - 0.5 * kPi; }

Eigen::Matrix3d park_matrix(double angle) {
	Eigen::Matrix3d m;
	m << std::cos(angle), std::cos(angle - kTwoThirdsPi), std::cos(angle + kTwoThirdsPi),
		-std::sin(angle), -std::sin(angle - kTwoThirdsPi), -std::sin(angle + kTwoThirdsPi),
		0.5, 0.5, 0.5;
	return (2.0 / 3.0) * m;
}

Eigen::Matrix3d inverse_park_matrix(double angle) {
	Eigen::Matrix3d m;
	m << std::cos(angle), -std::sin(angle), 1.0,
		std::cos(angle - kTwoThirdsPi), -std::sin(angle - kTwoThirdsPi), 1.0,
		std::cos(angle + kTwoThirdsPi), -std::sin(angle + kTwoThirdsPi), 1.0;
	return m;
}

Dq0Vector park(const Eigen::Vector3d& abc, double angle) {
	const Eigen::Vector3d dq0 = park_matrix(angle) * abc;
	return {dq0(0), dq0(1), dq0(2)};
}

Eigen::Vector3d abc_instant_from_dq0(const Dq0Vector& v, double angle) {
	return inverse_park_matrix(angle) * Eigen::Vector3d(v.d, v.q, v.zero);
}

double phasor_to_instant(const Phasor& ph, double t) {
	return kSqrt2 * ph.magnitude * std::cos(kSynchronousSpeed * t + ph.angle);
}

Eigen::Vector3d phasors_to_instant(const PhaseValues& phasors, double t) {
	Eigen::Vector3d out;
	for (int k = 0; k < 3; ++k)
		out(k) = kSqrt2 * std::abs(phasors[k]) * std::cos(kSynchronousSpeed * t + std::arg(phasors[k]));
	return out;
}

Phasor recover_phasor(const SamplePair& s) {
	const double denom = std::sin(kSynchronousSpeed * (s.t2 - s.t1));
	if (!(std::abs(denom) >= kSingularityTolerance)) {
		std::ostringstream msg;
		msg << "sample instants t1=" << s.t1 << " s, t2=" << s.t2
			<< " s are a multiple of half a cycle apart (|sin(w_s dt)|=" << std::abs(denom) << ")";
		throw SingularSampling(msg.str());
	}
	const double w1 = kSynchronousSpeed * s.t1;
	const double w2 = kSynchronousSpeed * s.t2;
	// sqrt(2) V cos(theta) and sqrt(2) V sin(theta)
	const double c = (s.x1 * std::sin(w2) - s.x2 * std::sin(w1)) / denom;
	const double sn = (s.x1 * std::cos(w2) - s.x2 * std::cos(w1)) / denom;
	return Phasor(std::hypot(c, sn) / kSqrt2, std::atan2(sn, c));
}

} // namespace phasedyn
