#pragma once

#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "anasizer/nets.hpp"

namespace anasizer {

inline constexpr int kCheckpointVersion = 1;

/// Unreadable, malformed or wrong-version checkpoint file.
class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// {version, variant, benchmark, descriptor, policy, value, optimizer}; every
/// parameter tensor is stored as {name, rows, cols, data} with f64 values verbatim.
nlohmann::json checkpoint_to_json(const Agent& agent);
/// Throws CheckpointError or BenchmarkMismatch.
Agent agent_from_json(const nlohmann::json& j, std::shared_ptr<const Benchmark> bench);

void save_checkpoint(const Agent& agent, const std::filesystem::path& path);
Agent load_checkpoint(const std::filesystem::path& path, std::shared_ptr<const Benchmark> bench);

/// Benchmark and variant recorded in a checkpoint file, without building an agent.
struct CheckpointInfo {
    std::string benchmark;
    Variant variant;
    ArchDescriptor descriptor;
};
CheckpointInfo read_checkpoint_info(const std::filesystem::path& path);

}  // namespace anasizer
