#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>

#include "phasedyn/cli.hpp"
#include "phasedyn/errors.hpp"

namespace phasedyn::cli {

namespace {

struct Group {
	const char* suffix;
	const char* file;
	const char* title;
};

constexpr Group kGroups[] = {
	{".speed_dev_hz", "speed_dev_hz.svg", "Rotor speed deviation (Hz)"},
	{".delta_rad", "delta_rad.svg", "Rotor angle (rad)"},
	{".te_pu", "te_pu.svg", "Electrical torque (p.u., machine base)"},
	{".vmag_pu", "vmag_pu.svg", "Voltage magnitude (p.u.)"},
	{".vang_rad", "vang_rad.svg", "Voltage angle (rad)"},
};

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

bool ends_with(const std::string& s, const char* suffix) {
	const std::string_view sv(suffix);
	return s.size() >= sv.size() && s.compare(s.size() - sv.size(), sv.size(), sv) == 0;
}

std::string fmt(double v) {
	char buf[32];
	std::snprintf(buf, sizeof buf, "%.4g", v);
	return buf;
}

std::string escape(const std::string& s) {
	std::string out;
	for (char c : s) {
		switch (c) {
		case '&': out += "&amp;"; break;
		case '<': out += "&lt;"; break;
		case '>': out += "&gt;"; break;
		default: out += c;
		}
	}
	return out;
}

void write_chart(const std::filesystem::path& path, const char* title, const TimeSeries& ts,
                 const std::vector<std::size_t>& cols) {
	constexpr double W = 900, H = 480, L = 70, R = 200, T = 40, B = 50;
	double tmin = ts.time.front();
	double tmax = ts.time.back();
	if (tmax <= tmin)
		tmax = tmin + 1.0;
	double ymin = INFINITY;
	double ymax = -INFINITY;
	for (auto c : cols)
		for (double v : ts.data[c])
			if (std::isfinite(v)) {
				ymin = std::min(ymin, v);
				ymax = std::max(ymax, v);
			}
	if (!std::isfinite(ymin)) {
		ymin = 0.0;
		ymax = 1.0;
	}
	if (ymax - ymin < 1e-12) {
		ymin -= 0.5;
		ymax += 0.5;
	}
	const double pad = 0.05 * (ymax - ymin);
	ymin -= pad;
	ymax += pad;
	auto X = [&](double t) { return L + (t - tmin) / (tmax - tmin) * (W - L - R); };
	auto Y = [&](double v) { return T + (ymax - v) / (ymax - ymin) * (H - T - B); };

	std::ofstream os(path);
	if (!os)
		throw Error("cannot write '" + path.string() + "'");
	os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
	   << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
	os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
	os << "<text x=\"" << L << "\" y=\"24\" font-size=\"15\">" << escape(title) << "</text>\n";
	os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
	   << "\" fill=\"none\" stroke=\"#444\"/>\n";
	for (int k = 0; k <= 4; ++k) {
		const double v = ymin + (ymax - ymin) * k / 4.0;
		const double t = tmin + (tmax - tmin) * k / 4.0;
		os << "<text x=\"" << L - 6 << "\" y=\"" << Y(v) + 4 << "\" text-anchor=\"end\">" << fmt(v) << "</text>\n";
		os << "<text x=\"" << X(t) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">" << fmt(t) << "</text>\n";
	}
	os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">time (s)</text>\n";

	const std::size_t n = ts.rows();
	const std::size_t stride = std::max<std::size_t>(1, n / 3000);
	for (std::size_t j = 0; j < cols.size(); ++j) {
		const auto& col = ts.data[cols[j]];
		const char* colour = kPalette[j % std::size(kPalette)];
		os << "<polyline fill=\"none\" stroke-width=\"1.2\" stroke=\"" << colour << "\" points=\"";
		for (std::size_t r = 0; r < n; r += stride)
			if (std::isfinite(col[r]))
				os << fmt(X(ts.time[r])) << ',' << fmt(Y(col[r])) << ' ';
		os << "\"/>\n";
		if (j < 24)
			os << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 12 + 14 * j << "\" fill=\"" << colour << "\">"
			   << escape(ts.columns[cols[j]]) << "</text>\n";
		else if (j == 24)
			os << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 12 + 14 * j << "\">+" << cols.size() - 24
			   << " more</text>\n";
	}
	os << "</svg>\n";
}

} // namespace

std::vector<std::filesystem::path> write_plots(const TimeSeries& ts, const std::filesystem::path& dir) {
	std::vector<std::filesystem::path> written;
	if (ts.rows() == 0)
		return written;
	for (const auto& g : kGroups) {
		std::vector<std::size_t> cols;
		for (std::size_t c = 0; c < ts.columns.size(); ++c)
			if (ends_with(ts.columns[c], g.suffix))
				cols.push_back(c);
		if (cols.empty())
			continue;
		const auto path = dir / g.file;
		write_chart(path, g.title, ts, cols);
		written.push_back(path);
	}
	return written;
}

} // namespace phasedyn::cli
