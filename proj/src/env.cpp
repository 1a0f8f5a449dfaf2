#include "anasizer/env.hpp"

#include "anasizer/reward.hpp"

namespace anasizer {

CircuitEnv::CircuitEnv(std::shared_ptr<const Benchmark> bench, Fidelity fidelity, std::uint64_t noise_seed,
                       int max_steps)
    : bench_(std::move(bench)),
      sim_(bench_->model, fidelity, noise_seed),
      max_steps_(max_steps > 0 ? max_steps : bench_->max_steps) {}

EnvState CircuitEnv::reset(const SpecVector& goal) const { return reset(goal, bench_->initial()); }

EnvState CircuitEnv::reset(const SpecVector& goal, const CircuitGraph& start) const {
    for (std::size_t j = 0; j < goal.size(); ++j)
        if (!(goal.value(j) > 0.0)) throw std::invalid_argument("reset: goal specs must be positive");
    EnvState s{start, sim_.evaluate(start), goal, 0, false};
    if (!s.intermediate.same_layout(goal)) throw std::invalid_argument("reset: goal layout does not match benchmark");
    return s;
}

StepResult CircuitEnv::step(const EnvState& state, std::span<const int> action) const {
    if (state.done) throw EpisodeError("step: episode already finished");
    if (action.size() != num_params())
        throw std::invalid_argument("step: expected " + std::to_string(num_params()) + " action entries");

    const int next_index = state.step_index + 1;
    if (!objective_ && goal_met(state.intermediate, state.goal)) {
        EnvState same = state;
        same.step_index = next_index;
        same.done = true;
        return StepResult{std::move(same), kGoalReward, true};
    }

    CircuitGraph next = apply_action(state.graph, action);
    SpecVector specs = sim_.evaluate(next);
    double r;
    bool done;
    if (objective_) {
        r = objective_(specs);
        done = next_index >= max_steps_;
    } else {
        r = reward(specs, state.goal);
        done = r == kGoalReward || next_index >= max_steps_;
    }
    return StepResult{EnvState{std::move(next), std::move(specs), state.goal, next_index, done}, r, done};
}

}  // namespace anasizer
