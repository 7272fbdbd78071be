#pragma once

#include <ostream>
#include <sstream>
#include <string_view>

namespace phasedyn {

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

/// Read once from PHASEDYN_LOG (error, warn, info, debug); defaults to warn.
LogLevel log_level();
void set_log_level(LogLevel level);

void log_write(LogLevel level, std::string_view message);

/// Formats the message only when the level is enabled.
template <class Fn>
void log_at(LogLevel level, Fn&& fn) {
	if (static_cast<int>(level) > static_cast<int>(log_level()))
		return;
	std::ostringstream os;
	fn(os);
	log_write(level, os.str());
}

template <class Fn>
void log_debug(Fn&& fn) { log_at(LogLevel::Debug, std::forward<Fn>(fn)); }
template <class Fn>
void log_info(Fn&& fn) { log_at(LogLevel::Info, std::forward<Fn>(fn)); }
template <class Fn>
void log_warn(Fn&& fn) { log_at(LogLevel::Warn, std::forward<Fn>(fn)); }

} // namespace phasedyn
