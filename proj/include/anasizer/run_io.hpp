#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace anasizer {

std::string_view code_version();

/// Written into every run directory before the long computation starts, and
/// rewritten at the end with outputs and wall-clock filled in.
struct RunManifest {
    std::string command;
    nlohmann::json config;
    std::uint64_t seed = 0;
    std::string benchmark;
    std::string started;  // ISO-8601 UTC
    double wall_seconds = 0.0;
    std::vector<std::string> outputs;  // relative to the run directory
    std::string status = "running";
};

nlohmann::json to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);

/// Creates <base>/<UTC timestamp>-<command>[-N]/ and its reports/ subdirectory.
std::filesystem::path create_run_dir(const std::filesystem::path& base, const std::string& command);

void write_manifest(const std::filesystem::path& run_dir, const RunManifest& m);
RunManifest read_manifest(const std::filesystem::path& run_dir);

/// Throws std::runtime_error when the file cannot be written.
void write_text(const std::filesystem::path& path, const std::string& content);
/// CSV with a header row; rows must match the header width and be nonempty.
void emit_metrics(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows,
                  const std::filesystem::path& path);

std::string utc_timestamp(bool compact);

}  // namespace anasizer
