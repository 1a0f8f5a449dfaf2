#pragma once

#include <filesystem>

#include <nlohmann/json_fwd.hpp>

#include "anasizer/deploy.hpp"

namespace anasizer {

/// Hand-off file for manual tuning: one entry per deployment state plus the
/// parameters of the best-reward state.
nlohmann::json warm_start_json(const DeploymentReport& r, const Benchmark& bench);
void export_warm_start(const DeploymentReport& r, const Benchmark& bench, const std::filesystem::path& path);

/// Parameters recorded as "best" in a warm-start file, as a graph on `bench`.
CircuitGraph import_warm_start(const std::filesystem::path& path, const Benchmark& bench);

}  // namespace anasizer
