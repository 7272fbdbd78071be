#pragma once

#include <filesystem>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "phasedyn/netmodel.hpp"

namespace testsupport {

inline std::filesystem::path data_path(const std::string& name) { return std::filesystem::path(PHASEDYN_DATA_DIR) / name; }

// fixed seed so failures reproduce
inline std::mt19937_64& rng() {
	static std::mt19937_64 gen(20240611);
	return gen;
}

inline double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng()); }

// source bus S at 1 pu feeding bus L through a three-phase line
inline nlohmann::json two_bus(double r, double x) {
	return {
		{"mva_base", 100.0},
		{"buses", {{{"id", "S"}, {"base_kv", 12.47}}, {{"id", "L"}, {"base_kv", 12.47}}}},
		{"sources", {{{"bus", "S"}, {"v_pu", 1.0}, {"angle_deg", 0.0}}}},
		{"branches", {{{"id", "LN"}, {"from", "S"}, {"to", "L"}, {"z1", {r, x}}, {"z0", {r, x}}}}},
	};
}

inline phasedyn::Network network(const nlohmann::json& doc) { return phasedyn::parse_network(doc); }

} // namespace testsupport
