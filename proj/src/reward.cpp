#include "anasizer/reward.hpp"

#include <algorithm>
#include <stdexcept>

namespace anasizer {

std::vector<double> reward_terms(const SpecVector& current, const SpecVector& goal) {
    if (!current.same_layout(goal)) throw std::invalid_argument("reward: specification sets differ");
    std::vector<double> terms(current.size());
    for (std::size_t j = 0; j < current.size(); ++j) {
        const double g = current.value(j);
        const double target = goal.value(j);
        if (!(g > 0.0) || !(target > 0.0))
            throw std::invalid_argument("reward: spec '" + current.name(j) + "' must be positive");
        const double sign = current.direction(j) == Direction::Maximize ? 1.0 : -1.0;
        terms[j] = std::min(sign * (g - target) / std::max(g + target, kRewardGuard), 0.0);
    }
    return terms;
}

double reward(const SpecVector& current, const SpecVector& goal) {
    double r = 0.0;
    for (double t : reward_terms(current, goal)) r += t;
    return r < 0.0 ? r : kGoalReward;
}

bool goal_met(const SpecVector& current, const SpecVector& goal) { return reward(current, goal) == kGoalReward; }

}  // namespace anasizer
