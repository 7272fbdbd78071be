#include <cmath>

#include <doctest.h>

#include "phasedyn/errors.hpp"
#include "phasedyn/frames.hpp"
#include "support.hpp"

using namespace phasedyn;
using testsupport::uniform;

namespace {

// x(t) = sqrt(2) V cos(w t + theta), evaluated directly
double waveform(double v, double theta, double t) { return kSqrt2 * v * std::cos(kSynchronousSpeed * t + theta); }

double angle_error(double a, double b) { return std::abs(std::remainder(a - b, 2.0 * kPi)); }

} // namespace

TEST_CASE("phasor_to_instant at the reference points") {
	CHECK(phasor_to_instant({1.0, 0.0}, 0.0) == doctest::Approx(1.414214).epsilon(1e-6));
	CHECK(std::abs(phasor_to_instant({1.0, 0.0}, 1.0 / 240.0)) < 1e-12);
	CHECK(phasor_to_instant({0.0, 1.3}, 0.123) == 0.0);
}

TEST_CASE("recover_phasor from a quarter-cycle pair") {
	const Phasor p = recover_phasor({1.414214, 0.0, 0.0, 1.0 / 240.0});
	CHECK(p.magnitude == doctest::Approx(1.0).epsilon(1e-6));
	CHECK(std::abs(p.angle) < 1e-6);
}

TEST_CASE("recover_phasor rejects a half-cycle spacing") {
	CHECK_THROWS_AS(recover_phasor({1.0, -1.0, 0.0, 1.0 / 120.0}), SingularSampling);
	CHECK_THROWS_AS(recover_phasor({1.0, 1.0, 0.25, 0.25}), SingularSampling);
	CHECK_THROWS_AS(recover_phasor({1.0, 1.0, 0.0, 1.0 / 60.0}), SingularSampling);
}

TEST_CASE("recover_phasor round trip on random waveforms") {
	double worst_mag = 0.0;
	double worst_ang = 0.0;
	int done = 0;
	while (done < 10000) {
		const double v = uniform(1e-6, 10.0);
		const double theta = uniform(-kPi, kPi);
		const double t1 = uniform(0.0, 5.0);
		const double t2 = t1 + uniform(1e-5, 0.02);
		if (std::abs(std::sin(kSynchronousSpeed * (t2 - t1))) < 1e-3)
			continue;
		const Phasor p = recover_phasor({waveform(v, theta, t1), waveform(v, theta, t2), t1, t2});
		worst_mag = std::max(worst_mag, std::abs(p.magnitude - v));
		worst_ang = std::max(worst_ang, angle_error(p.angle, theta));
		++done;
	}
	CHECK(worst_mag < 1e-9);
	CHECK(worst_ang < 1e-9);
}

TEST_CASE("recovery does not depend on which pair is sampled") {
	for (int k = 0; k < 200; ++k) {
		const double v = uniform(0.1, 5.0);
		const double theta = uniform(-kPi, kPi);
		const double a1 = uniform(0.0, 1.0), a2 = a1 + 1.0 / 240.0;
		const double b1 = uniform(0.0, 1.0), b2 = b1 + 1.0 / 4800.0;
		const Phasor pa = recover_phasor({waveform(v, theta, a1), waveform(v, theta, a2), a1, a2});
		const Phasor pb = recover_phasor({waveform(v, theta, b1), waveform(v, theta, b2), b1, b2});
		CHECK(std::abs(pa.magnitude - pb.magnitude) < 1e-9);
		CHECK(angle_error(pa.angle, pb.angle) < 1e-9);
	}
}

TEST_CASE("recovered angles stay in (-pi, pi]") {
	const Phasor p = recover_phasor({waveform(1.0, kPi, 0.0), waveform(1.0, kPi, 0.001), 0.0, 0.001});
	CHECK(p.angle == doctest::Approx(kPi));
	CHECK(normalize_angle(-kPi) == doctest::Approx(kPi));
	CHECK(normalize_angle(3.0 * kPi) == doctest::Approx(kPi));
}

TEST_CASE("Park matrix and its inverse compose to the identity") {
	for (int k = 0; k < 100; ++k) {
		const double a = uniform(-20.0, 20.0);
		const Eigen::Matrix3d prod = park_matrix(a) * inverse_park_matrix(a);
		CHECK((prod - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-12);
	}
}

TEST_CASE("balanced sets have no zero-sequence component") {
	for (int k = 0; k < 100; ++k) {
		const double amp = uniform(0.1, 3.0), phase = uniform(-kPi, kPi), angle = uniform(-kPi, kPi);
		const Eigen::Vector3d abc(amp * std::cos(phase), amp * std::cos(phase - 2.0 * kPi / 3.0),
		                          amp * std::cos(phase + 2.0 * kPi / 3.0));
		CHECK(std::abs(park(abc, angle).zero) < 1e-12);
	}
}

TEST_CASE("matching shaft angle gives constant dq of RMS size") {
	// phasor V at angle theta seen by a rotor at delta = theta: all on the q axis
	const double v = 0.97, theta = 0.4;
	for (double t : {0.0, 0.0031, 0.017, 0.5}) {
		const Eigen::Vector3d abc(waveform(v, theta, t), waveform(v, theta - 2.0 * kPi / 3.0, t),
		                          waveform(v, theta + 2.0 * kPi / 3.0, t));
		const Dq0Vector dq = park(abc, shaft_angle(t, theta));
		CHECK(std::abs(dq.d) < 1e-12);
		CHECK(dq.q / kSqrt2 == doctest::Approx(v).epsilon(1e-12));
	}
}

TEST_CASE("equal phase values are pure zero sequence") {
	const Dq0Vector dq = park(Eigen::Vector3d(0.7, 0.7, 0.7), 1.234);
	CHECK(std::abs(dq.d) < 1e-12);
	CHECK(std::abs(dq.q) < 1e-12);
	CHECK(dq.zero == doctest::Approx(0.7));

	const Eigen::Vector3d abc = abc_instant_from_dq0({0.0, 0.0, -0.3}, 2.5);
	CHECK(abc(0) == doctest::Approx(-0.3));
	CHECK(abc(1) == doctest::Approx(-0.3));
	CHECK(abc(2) == doctest::Approx(-0.3));
}

TEST_CASE("forward then inverse transform is the identity") {
	for (int k = 0; k < 100; ++k) {
		const Dq0Vector v{uniform(-2, 2), uniform(-2, 2), uniform(-2, 2)};
		const double a = uniform(-10, 10);
		const Dq0Vector back = park(abc_instant_from_dq0(v, a), a);
		CHECK(std::abs(back.d - v.d) < 1e-12);
		CHECK(std::abs(back.q - v.q) < 1e-12);
		CHECK(std::abs(back.zero - v.zero) < 1e-12);
	}
}

TEST_CASE("inverse transform agrees with direct trigonometric evaluation") {
	const Dq0Vector v{0.3, 0.9, 0.0};
	for (double a : {0.2, 0.2 + kPi / 3.0}) {
		const Eigen::Vector3d abc = abc_instant_from_dq0(v, a);
		for (int k = 0; k < 3; ++k) {
			const double shift = -2.0 * kPi / 3.0 * k;
			const double direct = v.d * std::cos(a + shift) - v.q * std::sin(a + shift);
			CHECK(abc(k) == doctest::Approx(direct).epsilon(1e-12));
		}
	}
}
