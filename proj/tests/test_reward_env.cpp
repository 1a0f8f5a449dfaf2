#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "anasizer/benchmark.hpp"
#include "anasizer/env.hpp"
#include "anasizer/reward.hpp"
#include "reward_cases.hpp"

using namespace anasizer;
using anasizer::testing::maxes;
using anasizer::testing::opamp;

namespace {

std::shared_ptr<const Benchmark> bench(const char* name) {
    return std::make_shared<const Benchmark>(load_benchmark(name));
}

// Goal the initial op-amp state misses on every spec.
SpecVector hard_goal(const CircuitEnv& env) {
    const SpecVector s = env.evaluate(env.benchmark().initial());
    return opamp(s.at("G") * 1e3, s.at("B") * 1e3, 89.9, s.at("P") * 1e-3);
}

}  // namespace

TEST(Reward, HandEvaluatedTable) {
    for (const auto& c : anasizer::testing::reward_table())
        EXPECT_NEAR(reward(c.current, c.goal), c.expected, 1e-12) << c.name;
}

TEST(Reward, TermsAreClippedAndSigned) {
    const auto t = reward_terms(opamp(400, 2e7, 50, 5e-3), opamp(450, 1e7, 60, 4e-3));
    ASSERT_EQ(t.size(), 4u);
    EXPECT_NEAR(t[0], -50.0 / 850.0, 1e-15);
    EXPECT_EQ(t[1], 0.0);
    EXPECT_NEAR(t[3], -1.0 / 9.0, 1e-15);
    EXPECT_TRUE(goal_met(opamp(450, 1e7, 60, 4e-3), opamp(450, 1e7, 60, 4e-3)));
    EXPECT_FALSE(goal_met(opamp(449, 1e7, 60, 4e-3), opamp(450, 1e7, 60, 4e-3)));
}

TEST(Reward, Errors) {
    EXPECT_THROW(reward(maxes({1, 2}), maxes({1})), std::invalid_argument);
    EXPECT_THROW(reward(maxes({0}), maxes({1})), std::invalid_argument);
    EXPECT_THROW(reward(maxes({1}), maxes({-1})), std::invalid_argument);
    EXPECT_THROW(reward(opamp(1, 1, 1, 1), maxes({1, 1, 1, 1})), std::invalid_argument);
}

TEST(RewardProperty, ScaleInvariantPerTerm) {
    Rng r(31);
    for (int i = 0; i < 1000; ++i) {
        const SpecVector cur = opamp(r.uniform(1, 1000), r.uniform(1e5, 1e8), r.uniform(1, 90), r.uniform(1e-4, 1e-2));
        const SpecVector goal = opamp(r.uniform(1, 1000), r.uniform(1e5, 1e8), r.uniform(1, 90), r.uniform(1e-4, 1e-2));
        const auto base = reward_terms(cur, goal);
        for (double lambda : {1e-3, 1e3}) {
            std::vector<double> c = cur.values(), g = goal.values();
            // Rescale one spec pair at a time.
            for (std::size_t j = 0; j < c.size(); ++j) {
                std::vector<double> cj = c, gj = g;
                cj[j] *= lambda;
                gj[j] *= lambda;
                const auto t = reward_terms(cur.with_values(cj), goal.with_values(gj));
                EXPECT_NEAR(t[j], base[j], 1e-12);
            }
        }
    }
}

TEST(RewardProperty, RangeIsNegativeBoundedOrBonus) {
    Rng r(32);
    for (int i = 0; i < 5000; ++i) {
        const SpecVector cur = opamp(r.uniform(1e-3, 1e3), r.uniform(1, 1e9), r.uniform(0.01, 90), r.uniform(1e-6, 1));
        const SpecVector goal = opamp(r.uniform(1e-3, 1e3), r.uniform(1, 1e9), r.uniform(0.01, 90), r.uniform(1e-6, 1));
        const double x = reward(cur, goal);
        EXPECT_TRUE(x == kGoalReward || (x > -4.0 && x < 0.0)) << x;
    }
}

TEST(Env, ResetIsDeterministicAndEvaluatesInitialGraph) {
    const CircuitEnv env(bench("opamp2"), Fidelity::Fine);
    const SpecVector goal = hard_goal(env);
    const EnvState a = env.reset(goal), b = env.reset(goal);
    EXPECT_EQ(a.graph, b.graph);
    EXPECT_EQ(a.intermediate, b.intermediate);
    EXPECT_EQ(a.step_index, 0);
    EXPECT_EQ(a.intermediate, env.evaluate(env.benchmark().initial()));
    EXPECT_EQ(a.graph, env.benchmark().initial());
}

TEST(Env, ResetAfterEpisodeStartsOver) {
    const CircuitEnv env(bench("opamp2"), Fidelity::Fine);
    const SpecVector goal = hard_goal(env);
    EnvState s = env.reset(goal);
    for (int i = 0; i < 5; ++i) s = env.step(s, std::vector<int>(15, 1)).state;
    EXPECT_EQ(s.step_index, 5);
    const EnvState t = env.reset(goal);
    EXPECT_EQ(t.step_index, 0);
    EXPECT_EQ(t.graph, env.benchmark().initial());
}

TEST(Env, GoalMetAtStartEndsWithBonus) {
    const CircuitEnv env(bench("opamp2"), Fidelity::Fine);
    const SpecVector s = env.evaluate(env.benchmark().initial());
    const SpecVector goal = opamp(s.at("G") / 2, s.at("B") / 2, s.at("PM") / 2, s.at("P") * 2);
    const StepResult r = env.step(env.reset(goal), std::vector<int>(15, 1));
    EXPECT_EQ(r.reward, 10.0);
    EXPECT_TRUE(r.done);
    EXPECT_EQ(r.state.graph, env.benchmark().initial());
}

TEST(Env, TruncatesAfterFiftyOpAmpSteps) {
    const CircuitEnv env(bench("opamp2"), Fidelity::Fine);
    EXPECT_EQ(env.max_steps(), 50);
    EnvState s = env.reset(hard_goal(env));
    Trajectory traj;
    Rng r(3);
    for (int i = 0; i < 50; ++i) {
        ASSERT_FALSE(s.done);
        std::vector<int> a(15);
        for (auto& x : a) x = static_cast<int>(r.below(3)) - 1;
        StepResult res = env.step(s, a);
        EXPECT_EQ(res.done, i == 49);
        traj.push(Transition{s, a, res.reward, res.state, res.done});
        s = res.state;
    }
    EXPECT_TRUE(s.done);
    EXPECT_THROW(env.step(s, std::vector<int>(15, 0)), EpisodeError);

    double sum = 0.0;
    for (const auto& t : traj.steps()) sum += t.reward;
    EXPECT_EQ(traj.episode_return(), sum);
    EXPECT_EQ(traj.size(), 50u);
}

TEST(Env, RfPaEpisodeLimitIsThirty) {
    const CircuitEnv env(bench("rfpa"), Fidelity::Fine);
    EXPECT_EQ(env.max_steps(), 30);
}

TEST(Env, StepRewardMatchesIndependentRecomputation) {
    const CircuitEnv env(bench("opamp2"), Fidelity::Fine);
    EnvState s = env.reset(hard_goal(env));
    Rng r(4);
    while (!s.done) {
        std::vector<int> a(15);
        for (auto& x : a) x = static_cast<int>(r.below(3)) - 1;
        const StepResult res = env.step(s, a);
        const CircuitGraph g = apply_action(s.graph, a);
        EXPECT_EQ(res.state.graph, g);
        EXPECT_EQ(res.state.intermediate, env.evaluate(g));
        EXPECT_EQ(res.reward, reward(env.evaluate(g), s.goal));
        EXPECT_EQ(res.state.step_index, s.step_index + 1);
        s = res.state;
    }
}

TEST(Env, DoneWhenGoalReached) {
    // A goal equal to the specs one +1 step away is reached on that step.
    const CircuitEnv env(bench("opamp2"), Fidelity::Fine);
    const std::vector<int> up(15, 1);
    const SpecVector target = env.evaluate(apply_action(env.benchmark().initial(), up));
    const StepResult res = env.step(env.reset(target), up);
    EXPECT_EQ(res.reward, 10.0);
    EXPECT_TRUE(res.done);
    EXPECT_EQ(res.state.step_index, 1);
}

TEST(Env, Errors) {
    const CircuitEnv env(bench("opamp2"), Fidelity::Fine);
    const EnvState s = env.reset(hard_goal(env));
    EXPECT_THROW(env.step(s, std::vector<int>(3, 0)), std::invalid_argument);
    EXPECT_THROW(env.reset(opamp(-1, 1, 1, 1)), std::invalid_argument);
    EXPECT_THROW(env.reset(maxes({1, 1})), std::invalid_argument);
}

TEST(Env, CoarseInstancesWithSameSeedAgree) {
    const auto b = bench("rfpa");
    const CircuitEnv a(b, Fidelity::Coarse, 9), c(b, Fidelity::Coarse, 9);
    Rng r(1);
    const SpecVector goal = a.sample_goal(r);
    EXPECT_EQ(a.reset(goal).intermediate, c.reset(goal).intermediate);
}

TEST(Env, ObjectiveModeRunsFixedLength) {
    CircuitEnv env(bench("rfpa"), Fidelity::Fine, 0, 30);
    env.set_objective([](const SpecVector& s) { return s.at("E"); });
    Rng r(2);
    EnvState s = env.reset(env.sample_goal(r));
    int steps = 0;
    while (!s.done) {
        const StepResult res = env.step(s, std::vector<int>(14, 0));
        EXPECT_EQ(res.reward, res.state.intermediate.at("E"));
        s = res.state;
        ++steps;
    }
    EXPECT_EQ(steps, 30);
}
