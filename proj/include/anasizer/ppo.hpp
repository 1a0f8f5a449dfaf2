#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "anasizer/deploy.hpp"
#include "anasizer/env.hpp"
#include "anasizer/nets.hpp"

namespace anasizer {

struct TrainConfig {
    int episodes = 0;   // 0: benchmark default (opamp2 35000, rfpa 3500, otherwise 5000)
    int max_steps = 0;  // 0: benchmark limit
    double gamma = 0.99;
    double lambda = 0.95;
    double clip = 0.2;
    int epochs = 4;
    int minibatch = 64;  // transitions
    double entropy_coef = 0.01;
    bool entropy_decay = true;  // linear to zero over the run
    double value_coef = 0.5;
    double lr = 3e-4;
    double max_grad_norm = 0.5;  // <= 0 disables clipping
    std::uint64_t seed = 0;
    int rollout_episodes = 16;
    std::optional<Fidelity> fidelity;  // default: coarse for rfpa, fine otherwise
    int eval_interval = 1000;          // episodes between curve rows
    int eval_goals = 100;  // 0 skips deployment evaluation (accuracy column stays 0)
    int workers = 1;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

nlohmann::json to_json(const TrainConfig& c);
/// Fields absent from `j` keep their value in `base`; unknown keys throw.
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

int default_episodes(const Benchmark& b);
Fidelity default_training_fidelity(const Benchmark& b);
/// Environment at the configured (or default) fidelity and step limit, with
/// coarse-model noise seeded from cfg.seed.
CircuitEnv make_training_env(std::shared_ptr<const Benchmark> bench, const TrainConfig& cfg);

/// One environment step as seen by the learner.
struct RolloutStep {
    Observation obs;
    std::vector<int> action;
    double log_prob = 0.0;
    double value = 0.0;
    double reward = 0.0;
    bool done = false;
    SpecVector next_specs;            // evaluator output after the action
    std::vector<double> next_params;  // parameters after the action
};

struct RolloutEpisode {
    SpecVector goal;
    std::vector<RolloutStep> steps;
    double episode_return = 0.0;
    bool success = false;
};

/// `n_episodes` episodes from reset with goals drawn from `rng`, actions sampled
/// from the policy. Each episode gets its own action stream derived from `rng`
/// in episode order, so the result does not depend on `workers`.
std::vector<RolloutEpisode> collect_rollouts(const Agent& agent, const CircuitEnv& env, int n_episodes, Rng& rng,
                                             int workers = 1);

struct GaeResult {
    std::vector<double> advantages;
    std::vector<double> targets;  // advantages + values
};

/// delta_t = r_t + gamma V(s_{t+1}) (1 - done_t) - V(s_t); A_t = sum_k (gamma lambda)^k delta_{t+k}.
/// `bootstrap` is V of the state after the last step (ignored when it is done).
GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      const std::vector<bool>& dones, double bootstrap, double gamma, double lambda);
GaeResult compute_gae(const RolloutEpisode& ep, double gamma, double lambda);

/// Shifts and scales to mean 0, std 1 (population std). Leaves a constant batch at 0.
void normalize_advantages(std::vector<double>& a);

/// min(rho A, clip(rho, 1 - eps, 1 + eps) A)
double clipped_surrogate(double ratio, double advantage, double clip);

struct Sample {
    const Observation* obs = nullptr;
    const std::vector<int>* action = nullptr;
    double old_log_prob = 0.0;
    double advantage = 0.0;
    double target = 0.0;
};

struct PpoLoss {
    ad::Tensor total;
    ad::Tensor policy;   // -mean clipped surrogate
    ad::Tensor value;    // mean (V - target)^2
    ad::Tensor entropy;  // mean policy entropy
};

PpoLoss ppo_loss(const Agent& agent, std::span<const ad::Tensor> policy_params,
                 std::span<const ad::Tensor> value_params, std::span<const Sample> batch, double clip,
                 double value_coef, double entropy_coef);

struct UpdateStats {
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
    int minibatches = 0;
};

class NonFiniteLoss : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Epochs x shuffled minibatches of Adam steps; refreshes the agent afterwards.
UpdateStats ppo_update(Agent& agent, std::span<const Sample> batch, const TrainConfig& cfg, double entropy_coef,
                       Rng& rng);

struct CurvePoint {
    int episode = 0;
    double mean_reward = 0.0;
    double mean_length = 0.0;
    double deploy_accuracy = 0.0;
};

std::string curves_csv(std::span<const CurvePoint> curve);

struct TrainResult {
    std::vector<CurvePoint> curve;
    nlohmann::json best_checkpoint;  // parameters at the highest curve accuracy (earliest on ties)
    double best_accuracy = -1.0;
    int best_episode = 0;
};

using CurveCallback = std::function<void(const CurvePoint&)>;
using BatchCallback = std::function<void(const std::vector<RolloutEpisode>&)>;

/// Trains `agent` in place (final parameters) on `env`.
TrainResult train(Agent& agent, const CircuitEnv& env, const TrainConfig& cfg, const CurveCallback& on_point = {},
                  const BatchCallback& on_batch = {});

}  // namespace anasizer
