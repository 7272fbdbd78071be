#include "phasedyn/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace phasedyn {

namespace {

LogLevel parse_env() {
	const char* env = std::getenv("PHASEDYN_LOG");
	if (!env)
		return LogLevel::Warn;
	const std::string v(env);
	if (v == "error") return LogLevel::Error;
	if (v == "info") return LogLevel::Info;
	if (v == "debug") return LogLevel::Debug;
	return LogLevel::Warn;
}

std::atomic<int>& level_slot() {
	static std::atomic<int> level{static_cast<int>(parse_env())};
	return level;
}

std::mutex g_write_mutex;

} // namespace

LogLevel log_level() { return static_cast<LogLevel>(level_slot().load(std::memory_order_relaxed)); }

void set_log_level(LogLevel level) { level_slot().store(static_cast<int>(level)); }

void log_write(LogLevel level, std::string_view message) {
	static constexpr const char* tags[] = {"error", "warn", "info", "debug"};
	std::lock_guard lock(g_write_mutex);
	std::cerr << "[phasedyn " << tags[static_cast<int>(level)] << "] " << message << '\n';
}

} // namespace phasedyn
