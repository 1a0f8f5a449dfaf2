#pragma once

#include <vector>

#include "anasizer/specs.hpp"

namespace anasizer {

/// Bonus paid when every specification is met.
inline constexpr double kGoalReward = 10.0;
/// Floor on each normalized-difference denominator.
inline constexpr double kRewardGuard = 1e-12;

/// term_j = min(s_j (g_j - g*_j) / (g_j + g*_j), 0), s_j = -1 for Minimize specs.
/// Throws std::invalid_argument on layout mismatch or a non-positive value.
std::vector<double> reward_terms(const SpecVector& current, const SpecVector& goal);

/// Sum of terms when negative, otherwise kGoalReward.
double reward(const SpecVector& current, const SpecVector& goal);

/// All terms zero: every spec met or exceeded in its direction.
bool goal_met(const SpecVector& current, const SpecVector& goal);

}  // namespace anasizer
