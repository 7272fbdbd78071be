#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "phasedyn/engine.hpp"

namespace phasedyn {

/// Header row `time_s,<columns...>`, values with 9 significant digits. When
/// `truncation_note` is non-empty a final row `# truncated: <note>` is added.
void write_csv(std::ostream& os, const TimeSeries& ts, const std::string& truncation_note = {});
void write_csv(const std::filesystem::path& path, const TimeSeries& ts, const std::string& truncation_note = {});

/// Reads a file written by write_csv. Rows starting with '#' mark the series
/// as truncated. Sample spacing is taken from the first two rows.
TimeSeries read_csv(std::istream& is);
TimeSeries read_csv(const std::filesystem::path& path);

struct ColumnComparison {
	std::string column;
	double rmse = 0.0;
	/// NaN when one of the sequences is constant and they differ.
	double correlation = 0.0;
};

struct Comparison {
	std::size_t samples = 0;
	std::vector<ColumnComparison> columns;
};

/// Compares columns over the timestamps both series share, so a run can be
/// compared with a run at an integer multiple of its sampling rate. An empty
/// `columns` list compares every shared column. Throws ValidationError when
/// the series share no timestamps or no columns, UnknownReference for a
/// requested column missing from either side.
Comparison compare(const TimeSeries& a, const TimeSeries& b, const std::vector<std::string>& columns = {});

} // namespace phasedyn
