#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "anasizer/classic.hpp"
#include "anasizer/ppo.hpp"

namespace anasizer {

/// FoM = e_weight * (E / e_ref) + p_weight * (P / p_ref).
struct FomConfig {
    double e_weight = 3.0;
    double e_ref = 75.0;
    double p_weight = 1.0;
    double p_ref = 4.0;
    int episode_length = 30;
    long budget = 60000;  // evaluator calls
};

/// Throws std::invalid_argument unless the specs carry efficiency "E" and output power "P".
double fom_value(const SpecVector& s, const FomConfig& cfg = {});

/// PPO settings for the FoM task: shorter horizon and faster learning than the
/// goal-reaching defaults, since each episode restarts and the reward is dense.
TrainConfig fom_train_config();

enum class FomMethod { Rl, Genetic, Annealing, Random };
std::string_view to_string(FomMethod m);
FomMethod parse_fom_method(std::string_view s);

struct FomPoint {
    int episode = 0;  // one episode = episode_length evaluator calls
    double mean_fom = 0.0;
    double best_fom = 0.0;
};

struct FomResult {
    FomMethod method = FomMethod::Random;
    double best_fom = 0.0;
    std::vector<double> best_parameters;
    SpecVector best_specs;
    long evaluations = 0;
    std::vector<FomPoint> curve;
};

/// Maximizes FoM on the benchmark's fine model within cfg.budget evaluator calls.
/// RL trains `variant` with per-step reward FoM over fixed-length episodes and
/// reports the best state visited; `train` supplies the PPO settings.
FomResult fom_optimize(FomMethod method, std::shared_ptr<const Benchmark> bench, const FomConfig& cfg,
                       std::uint64_t seed, Variant variant = Variant::GatFc, TrainConfig train_cfg = fom_train_config());

std::string fom_curve_csv(std::span<const FomPoint> curve);

}  // namespace anasizer
