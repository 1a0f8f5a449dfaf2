#include "anasizer/run_io.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

namespace anasizer {

#ifndef ANASIZER_VERSION
#define ANASIZER_VERSION "dev"
#endif

std::string_view code_version() { return ANASIZER_VERSION; }

nlohmann::json to_json(const RunManifest& m) {
    return {{"command", m.command},   {"config", m.config},       {"seed", m.seed},
            {"benchmark", m.benchmark}, {"code_version", code_version()}, {"started", m.started},
            {"wall_seconds", m.wall_seconds}, {"outputs", m.outputs}, {"status", m.status}};
}

RunManifest manifest_from_json(const nlohmann::json& j) {
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.config = j.at("config");
    m.seed = j.at("seed").get<std::uint64_t>();
    m.benchmark = j.at("benchmark").get<std::string>();
    m.started = j.value("started", "");
    m.wall_seconds = j.value("wall_seconds", 0.0);
    m.outputs = j.value("outputs", std::vector<std::string>{});
    m.status = j.value("status", "");
    return m;
}

std::string utc_timestamp(bool compact) {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, compact ? "%Y%m%dT%H%M%SZ" : "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::filesystem::path create_run_dir(const std::filesystem::path& base, const std::string& command) {
    namespace fs = std::filesystem;
    fs::create_directories(base);
    const std::string stem = utc_timestamp(true) + "-" + command;
    for (int n = 0;; ++n) {
        fs::path dir = base / (n == 0 ? stem : stem + "-" + std::to_string(n));
        if (fs::create_directory(dir)) {
            fs::create_directory(dir / "reports");
            return dir;
        }
    }
}

void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

void write_manifest(const std::filesystem::path& run_dir, const RunManifest& m) {
    write_text(run_dir / "manifest.json", to_json(m).dump(2) + "\n");
}

RunManifest read_manifest(const std::filesystem::path& run_dir) {
    std::ifstream in(run_dir / "manifest.json");
    if (!in) throw std::runtime_error("no manifest in " + run_dir.string());
    return manifest_from_json(nlohmann::json::parse(in));
}

void emit_metrics(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows,
                  const std::filesystem::path& path) {
    if (rows.empty()) throw std::invalid_argument("emit_metrics: empty series");
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << '\n';
    for (const auto& r : rows) {
        if (r.size() != header.size()) throw std::invalid_argument("emit_metrics: row width does not match header");
        for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
        os << '\n';
    }
    write_text(path, os.str());
}

}  // namespace anasizer
