#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "anasizer/circuit.hpp"
#include "anasizer/simulator.hpp"
#include "anasizer/specs.hpp"

namespace anasizer {

/// A netlist together with its goal sampling box, episode limit and model file.
struct Benchmark {
    std::string name;
    std::shared_ptr<const Topology> topology;
    GoalSpace goals;
    int max_steps = 50;
    ModelSpec model;
    NormalizationScheme normalization;

    CircuitGraph initial() const { return CircuitGraph(topology); }
    std::size_t num_params() const { return topology->num_params(); }
};

/// Directory searched for built-in benchmarks ("opamp2", "rfpa", "toy").
std::filesystem::path default_data_dir();

/// `name_or_path` is either a built-in name or a path to a netlist JSON file.
/// The netlist's "model" entry names the companion model file (same directory).
Benchmark load_benchmark(const std::string& name_or_path);
Benchmark load_benchmark(const nlohmann::json& netlist, const nlohmann::json& model);

}  // namespace anasizer
