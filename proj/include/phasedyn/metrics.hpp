#pragma once

#include <span>

namespace phasedyn {

/// Root mean square of the pointwise difference. Throws ValidationError on
/// empty or unequal-length input.
double rmse(std::span<const double> a, std::span<const double> b);

/// Pearson correlation coefficient. Throws ValidationError on unequal
/// lengths, fewer than two samples, or a constant sequence.
double correlation(std::span<const double> a, std::span<const double> b);

/// Frequency (Hz) of the largest non-DC DFT bin of the mean-removed sequence,
/// refined by fitting a parabola through the bin magnitude and its
/// neighbours. Needs at least 16 samples.
double dominant_frequency(std::span<const double> seq, double spacing);

struct SagStats {
	double minimum = 0.0;
	/// Longest run of consecutive samples below the threshold, in seconds.
	double longest_below = 0.0;
};

SagStats sag_stats(std::span<const double> seq, double spacing, double threshold);

} // namespace phasedyn
