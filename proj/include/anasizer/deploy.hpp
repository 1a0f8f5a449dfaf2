#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "anasizer/env.hpp"
#include "anasizer/nets.hpp"

namespace anasizer {

enum class DeployMode { Greedy, Sampled };
std::string_view to_string(DeployMode m);
DeployMode parse_deploy_mode(std::string_view s);

/// One deployment episode. trace[0] and parameters[0] describe the initial state;
/// entry t (t >= 1) is the state after step t, with rewards[t - 1] its reward.
struct DeploymentReport {
    SpecVector goal;
    std::vector<SpecVector> trace;
    std::vector<std::vector<double>> parameters;
    std::vector<double> rewards;
    bool success = false;
    int steps = 0;

    const std::vector<double>& final_parameters() const { return parameters.back(); }
    const SpecVector& final_specs() const { return trace.back(); }
};

/// Runs the policy from the benchmark's initial point until success or
/// `max_steps` (0: the environment's limit). Sampled mode draws from `rng`.
DeploymentReport deploy(const Agent& agent, const CircuitEnv& env, const SpecVector& goal,
                        DeployMode mode = DeployMode::Greedy, Rng* rng = nullptr, int max_steps = 0);

struct AccuracyResult {
    int goals = 0;
    int successes = 0;
    double accuracy = 0.0;
    double mean_steps = 0.0;  // over successful deployments; 0 when none
    std::vector<bool> success;
    std::vector<int> steps;
};

inline constexpr int kDefaultAccuracyGoals = 200;

AccuracyResult measure_accuracy(const Agent& agent, const CircuitEnv& env, std::span<const SpecVector> goals,
                                DeployMode mode = DeployMode::Greedy, std::uint64_t seed = 0);
/// Samples `n_goals` goals from the benchmark's box with `rng`.
AccuracyResult measure_accuracy(const Agent& agent, const CircuitEnv& env, int n_goals, Rng& rng,
                                DeployMode mode = DeployMode::Greedy);

struct GeneralizationReport {
    DeploymentReport report;
    std::vector<std::string> out_of_range;  // names of components outside the sampling box
    bool in_range = false;                  // warning: nothing here is unseen
};

std::vector<GeneralizationReport> generalize(const Agent& agent, const CircuitEnv& env,
                                             std::span<const SpecVector> goals,
                                             DeployMode mode = DeployMode::Greedy);

nlohmann::json to_json(const DeploymentReport& r);
/// step, one column per spec, then goal_<name> constants, then reward.
std::string trace_csv(const DeploymentReport& r);

}  // namespace anasizer
