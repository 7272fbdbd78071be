#include "phasedyn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <vector>

#include "phasedyn/errors.hpp"
#include "phasedyn/types.hpp"

namespace phasedyn {

namespace {

void require_pair(std::span<const double> a, std::span<const double> b, std::size_t min_len) {
	if (a.size() != b.size())
		throw ValidationError("sequences differ in length (" + std::to_string(a.size()) + " vs " +
		                      std::to_string(b.size()) + ")");
	if (a.size() < min_len)
		throw ValidationError("sequences need at least " + std::to_string(min_len) + " samples");
}

} // namespace

double rmse(std::span<const double> a, std::span<const double> b) {
	require_pair(a, b, 1);
	double acc = 0.0;
	for (std::size_t k = 0; k < a.size(); ++k) {
		const double d = a[k] - b[k];
		acc += d * d;
	}
	return std::sqrt(acc / static_cast<double>(a.size()));
}

double correlation(std::span<const double> a, std::span<const double> b) {
	require_pair(a, b, 2);
	const double n = static_cast<double>(a.size());
	const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
	const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
	double sab = 0.0;
	double saa = 0.0;
	double sbb = 0.0;
	for (std::size_t k = 0; k < a.size(); ++k) {
		const double da = a[k] - ma;
		const double db = b[k] - mb;
		sab += da * db;
		saa += da * da;
		sbb += db * db;
	}
	if (saa == 0.0 || sbb == 0.0)
		throw ValidationError("correlation is undefined for a constant sequence");
	return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double dominant_frequency(std::span<const double> seq, double spacing) {
	const std::size_t n = seq.size();
	if (n < 16)
		throw ValidationError("dominant_frequency needs at least 16 samples");
	if (!(spacing > 0.0))
		throw ValidationError("sample spacing must be positive");
	const double mean = std::accumulate(seq.begin(), seq.end(), 0.0) / static_cast<double>(n);

	const std::size_t half = n / 2;
	std::vector<double> mag(half + 1, 0.0);
	for (std::size_t k = 1; k <= half; ++k) {
		std::complex<double> acc(0.0);
		const double w = -2.0 * kPi / static_cast<double>(n);
		for (std::size_t j = 0; j < n; ++j) {
			// reduce the phase index first to keep the angle small
			const double ang = w * static_cast<double>((k * j) % n);
			acc += (seq[j] - mean) * std::polar(1.0, ang);
		}
		mag[k] = std::abs(acc);
	}
	const std::size_t peak = static_cast<std::size_t>(std::max_element(mag.begin() + 1, mag.end()) - mag.begin());

	auto at = [&](std::size_t k) {
		// bins past the Nyquist bin mirror the ones below it
		return k <= half ? mag[k] : mag[n - k];
	};
	double offset = 0.0;
	if (peak >= 2) {
		const double left = at(peak - 1);
		const double mid = at(peak);
		const double right = at(peak + 1);
		const double denom = left - 2.0 * mid + right;
		if (denom != 0.0)
			offset = std::clamp(0.5 * (left - right) / denom, -0.5, 0.5);
	}
	return (static_cast<double>(peak) + offset) / (static_cast<double>(n) * spacing);
}

SagStats sag_stats(std::span<const double> seq, double spacing, double threshold) {
	if (seq.empty())
		throw ValidationError("sag_stats needs a non-empty trajectory");
	SagStats out;
	out.minimum = *std::min_element(seq.begin(), seq.end());
	std::size_t run = 0;
	std::size_t longest = 0;
	for (double v : seq) {
		run = v < threshold ? run + 1 : 0;
		longest = std::max(longest, run);
	}
	out.longest_below = static_cast<double>(longest) * spacing;
	return out;
}

} // namespace phasedyn
