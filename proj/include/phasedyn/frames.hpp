#pragma once

#include <array>
#include <optional>

#include <Eigen/Core>

#include "phasedyn/types.hpp"

namespace phasedyn {

/// Reject sample pairs with |sin(w_s (t2 - t1))| below this value.
inline constexpr double kSingularityTolerance = 1e-6;

/// Wraps an angle into (-pi, pi].
double normalize_angle(double angle);

/// RMS magnitude and angle (radians, normalized into (-pi, pi]).
struct Phasor {
	double magnitude = 0.0;
	double angle = 0.0;

	Phasor() = default;
	/// Negative magnitudes are folded into the angle.
	Phasor(double magnitude, double angle);

	static Phasor from_complex(Complex value);
	Complex to_complex() const;
};

/// One phasor per phase; phases not present on the bus are empty.
struct ThreePhasePhasor {
	std::array<std::optional<Phasor>, 3> phases;

	const std::optional<Phasor>& operator[](Phase p) const { return phases[static_cast<int>(p)]; }
	std::optional<Phasor>& operator[](Phase p) { return phases[static_cast<int>(p)]; }

	/// Phasors for a balanced positive-sequence set with phase A at `angle`.
	static ThreePhasePhasor balanced(double magnitude, double angle);
	static ThreePhasePhasor from_complex(const PhaseValues& values, PhaseSet present = PhaseSet::all());
	/// Missing phases map to zero.
	PhaseValues to_complex() const;
};

/// Instantaneous d, q and zero-sequence components.
struct Dq0Vector {
	double d = 0.0;
	double q = 0.0;
	double zero = 0.0;
};

/// Two instantaneous samples of one 60 Hz waveform.
struct SamplePair {
	double x1 = 0.0;
	double x2 = 0.0;
	double t1 = 0.0;
	double t2 = 0.0;
};

/// Transformation angle of the d axis for rotor angle `delta` at time `t`:
/// w_s t + delta - pi/2. With this choice the q axis sits at the rotor angle.
double shaft_angle(double t, double delta);

/// Amplitude-invariant Park matrix (2/3 scaling, cosine-referenced d axis).
Eigen::Matrix3d park_matrix(double angle);
Eigen::Matrix3d inverse_park_matrix(double angle);

Dq0Vector park(const Eigen::Vector3d& abc, double angle);
Eigen::Vector3d abc_instant_from_dq0(const Dq0Vector& v, double angle);

/// sqrt(2) |X| cos(w_s t + angle).
double phasor_to_instant(const Phasor& ph, double t);

/// Instantaneous values of all three phases at time `t`.
Eigen::Vector3d phasors_to_instant(const PhaseValues& phasors, double t);

/// Recovers the RMS phasor of x(t) = sqrt(2) V cos(w_s t + theta) from two
/// samples. Throws SingularSampling when the sample spacing is within
/// tolerance of a multiple of half a cycle.
Phasor recover_phasor(const SamplePair& s);

} // namespace phasedyn
