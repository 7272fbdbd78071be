#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>

namespace phasedyn {

using Complex = std::complex<double>;

/// Per-phase complex values indexed A, B, C. Absent phases hold zero.
using PhaseValues = std::array<Complex, 3>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kSqrt2 = std::numbers::sqrt2;
inline constexpr double kNominalFrequencyHz = 60.0;
inline constexpr double kSynchronousSpeed = 2.0 * kPi * kNominalFrequencyHz;

enum class Phase : std::uint8_t { A = 0, B = 1, C = 2 };

inline constexpr std::array<Phase, 3> kAllPhases{Phase::A, Phase::B, Phase::C};

constexpr char phase_letter(Phase p) { return "ABC"[static_cast<int>(p)]; }

/// Nominal angle of each phase in a positive-sequence set (0, -120, +120 deg).
constexpr double phase_shift(Phase p) {
	constexpr std::array<double, 3> shifts{0.0, -2.0 * kPi / 3.0, 2.0 * kPi / 3.0};
	return shifts[static_cast<int>(p)];
}

/// Subset of {A, B, C}.
class PhaseSet {
public:
	constexpr PhaseSet() = default;

	static constexpr PhaseSet all() { return PhaseSet(0b111); }
	static constexpr PhaseSet single(Phase p) { return PhaseSet(static_cast<std::uint8_t>(1u << static_cast<int>(p))); }

	/// Parses strings such as "ABC", "A", "bc". Throws ParseError on other letters.
	static PhaseSet parse(std::string_view text);

	constexpr bool contains(Phase p) const { return (bits_ >> static_cast<int>(p)) & 1u; }
	constexpr bool empty() const { return bits_ == 0; }
	constexpr int size() const { return (bits_ & 1) + ((bits_ >> 1) & 1) + ((bits_ >> 2) & 1); }
	constexpr bool is_subset_of(PhaseSet other) const { return (bits_ & ~other.bits_) == 0; }
	constexpr std::uint8_t bits() const { return bits_; }

	/// Position of `p` among the present phases (A before B before C).
	constexpr int index_of(Phase p) const {
		int idx = 0;
		for (int k = 0; k < static_cast<int>(p); ++k)
			idx += (bits_ >> k) & 1;
		return idx;
	}

	std::string to_string() const;

	constexpr bool operator==(const PhaseSet&) const = default;

private:
	constexpr explicit PhaseSet(std::uint8_t bits) : bits_(bits) {}
	std::uint8_t bits_ = 0;
};

} // namespace phasedyn
