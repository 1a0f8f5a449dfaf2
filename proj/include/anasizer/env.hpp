#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "anasizer/benchmark.hpp"
#include "anasizer/circuit.hpp"
#include "anasizer/simulator.hpp"
#include "anasizer/specs.hpp"

namespace anasizer {

struct EnvState {
    CircuitGraph graph;
    SpecVector intermediate;  // evaluator output for `graph`
    SpecVector goal;
    int step_index = 0;
    bool done = false;
};

struct StepResult {
    EnvState state;
    double reward = 0.0;
    bool done = false;
};

struct Transition {
    EnvState state;
    std::vector<int> action;
    double reward = 0.0;
    EnvState next;
    bool done = false;
};

class Trajectory {
public:
    void push(Transition t) {
        episode_return_ += t.reward;
        steps_.push_back(std::move(t));
    }
    const std::vector<Transition>& steps() const { return steps_; }
    std::size_t size() const { return steps_.size(); }
    /// Sum of stored rewards, accumulated in step order.
    double episode_return() const { return episode_return_; }

private:
    std::vector<Transition> steps_;
    double episode_return_ = 0.0;
};

class EpisodeError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Episodic sizing environment. Stateless apart from its simulator: states are
/// values passed in and returned, so one instance can serve many episodes.
class CircuitEnv {
public:
    /// Per-step reward for objective mode (fixed-length episodes, no goal bonus).
    using Objective = std::function<double(const SpecVector&)>;

    CircuitEnv(std::shared_ptr<const Benchmark> bench, Fidelity fidelity, std::uint64_t noise_seed = 0,
               int max_steps = 0);

    const Benchmark& benchmark() const { return *bench_; }
    const std::shared_ptr<const Benchmark>& benchmark_ptr() const { return bench_; }
    const Simulator& simulator() const { return sim_; }
    Fidelity fidelity() const { return sim_.fidelity(); }
    int max_steps() const { return max_steps_; }
    std::size_t num_params() const { return bench_->num_params(); }

    void set_objective(Objective objective) { objective_ = std::move(objective); }
    bool has_objective() const { return static_cast<bool>(objective_); }

    SpecVector evaluate(const CircuitGraph& g) const { return sim_.evaluate(g); }
    SpecVector sample_goal(Rng& rng) const { return anasizer::sample_goal(bench_->goals, rng); }

    EnvState reset(const SpecVector& goal) const;
    EnvState reset(const SpecVector& goal, const CircuitGraph& start) const;

    /// Applies `action`, re-evaluates and scores the new state. When the current
    /// state already meets its goal the step is a terminal no-op paying the bonus.
    StepResult step(const EnvState& state, std::span<const int> action) const;

private:
    std::shared_ptr<const Benchmark> bench_;
    Simulator sim_;
    int max_steps_;
    Objective objective_;
};

}  // namespace anasizer
