#include "phasedyn/csv.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "phasedyn/errors.hpp"
#include "phasedyn/metrics.hpp"

namespace phasedyn {

namespace {

void put(std::ostream& os, double v) {
	char buf[32];
	std::snprintf(buf, sizeof buf, "%.9g", v);
	os << buf;
}

std::vector<std::string> split(const std::string& line) {
	std::vector<std::string> out;
	std::string cell;
	std::istringstream in(line);
	while (std::getline(in, cell, ','))
		out.push_back(cell);
	if (!line.empty() && line.back() == ',')
		out.emplace_back();
	return out;
}

} // namespace

void write_csv(std::ostream& os, const TimeSeries& ts, const std::string& truncation_note) {
	os << "time_s";
	for (const auto& c : ts.columns)
		os << ',' << c;
	os << '\n';
	for (std::size_t r = 0; r < ts.rows(); ++r) {
		put(os, ts.time[r]);
		for (const auto& col : ts.data) {
			os << ',';
			put(os, col[r]);
		}
		os << '\n';
	}
	if (!truncation_note.empty()) {
		std::string note = truncation_note;
		for (char& ch : note)
			if (ch == '\n' || ch == '\r')
				ch = ' ';
		os << "# truncated: " << note << '\n';
	}
}

void write_csv(const std::filesystem::path& path, const TimeSeries& ts, const std::string& truncation_note) {
	std::ofstream out(path);
	if (!out)
		throw Error("cannot write '" + path.string() + "'");
	write_csv(out, ts, truncation_note);
	if (!out)
		throw Error("error while writing '" + path.string() + "'");
}

TimeSeries read_csv(std::istream& is) {
	TimeSeries ts;
	std::string line;
	if (!std::getline(is, line))
		throw ParseError("CSV is empty");
	if (!line.empty() && line.back() == '\r')
		line.pop_back();
	auto header = split(line);
	if (header.empty() || header.front() != "time_s")
		throw ParseError("CSV header must start with time_s");
	ts.columns.assign(header.begin() + 1, header.end());
	ts.data.resize(ts.columns.size());

	std::size_t row = 1;
	while (std::getline(is, line)) {
		++row;
		if (!line.empty() && line.back() == '\r')
			line.pop_back();
		if (line.empty())
			continue;
		if (line.front() == '#') {
			ts.truncated = true;
			continue;
		}
		const auto cells = split(line);
		if (cells.size() != header.size())
			throw ParseError("CSV row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
			                 " fields, expected " + std::to_string(header.size()));
		for (std::size_t k = 0; k < cells.size(); ++k) {
			char* end = nullptr;
			const double v = std::strtod(cells[k].c_str(), &end);
			if (end == cells[k].c_str() || *end != '\0')
				throw ParseError("CSV row " + std::to_string(row) + ": cannot parse \"" + cells[k] + "\"");
			if (k == 0)
				ts.time.push_back(v);
			else
				ts.data[k - 1].push_back(v);
		}
	}
	if (ts.time.size() >= 2)
		ts.spacing = ts.time[1] - ts.time[0];
	return ts;
}

TimeSeries read_csv(const std::filesystem::path& path) {
	std::ifstream in(path);
	if (!in)
		throw ParseError("cannot open CSV file '" + path.string() + "'");
	return read_csv(in);
}

Comparison compare(const TimeSeries& a, const TimeSeries& b, const std::vector<std::string>& columns) {
	std::vector<std::string> names = columns;
	if (names.empty()) {
		for (const auto& c : a.columns)
			if (b.find(c))
				names.push_back(c);
		if (names.empty())
			throw ValidationError("the two series share no columns");
	}
	for (const auto& c : names) {
		if (!a.find(c))
			throw UnknownReference("column '" + c + "' missing from the first series");
		if (!b.find(c))
			throw UnknownReference("column '" + c + "' missing from the second series");
	}

	// timestamps present in both series
	double step = std::numeric_limits<double>::infinity();
	for (const auto* s : {&a, &b})
		if (s->rows() >= 2)
			step = std::min(step, s->time[1] - s->time[0]);
	const double tol = std::isfinite(step) ? 1e-6 * step : 1e-9;
	std::vector<std::size_t> ia;
	std::vector<std::size_t> ib;
	for (std::size_t i = 0, j = 0; i < a.rows() && j < b.rows();) {
		const double d = a.time[i] - b.time[j];
		if (std::abs(d) <= tol) {
			ia.push_back(i++);
			ib.push_back(j++);
		} else if (d < 0) {
			++i;
		} else {
			++j;
		}
	}
	if (ia.size() < 2)
		throw ValidationError("the two series share fewer than two timestamps");

	Comparison out;
	out.samples = ia.size();
	for (const auto& name : names) {
		const auto& ca = a.column(name);
		const auto& cb = b.column(name);
		std::vector<double> xa;
		std::vector<double> xb;
		xa.reserve(ia.size());
		xb.reserve(ib.size());
		for (std::size_t k = 0; k < ia.size(); ++k) {
			xa.push_back(ca[ia[k]]);
			xb.push_back(cb[ib[k]]);
		}
		ColumnComparison cc;
		cc.column = name;
		cc.rmse = rmse(xa, xb);
		try {
			cc.correlation = correlation(xa, xb);
		} catch (const ValidationError&) {
			// constant traces: identical ones agree perfectly, otherwise undefined
			cc.correlation = xa == xb ? 1.0 : std::numeric_limits<double>::quiet_NaN();
		}
		out.columns.push_back(std::move(cc));
	}
	return out;
}

} // namespace phasedyn
