#include <gtest/gtest.h>

#include <algorithm>

#include "anasizer/classic.hpp"
#include "anasizer/fom.hpp"
#include "anasizer/reward.hpp"

using namespace anasizer;

namespace {

std::shared_ptr<const Benchmark> bench(const char* name) {
    return std::make_shared<const Benchmark>(load_benchmark(name));
}

SpecVector pa_specs(double e, double p) {
    return SpecVector({{"E", e, Direction::Maximize}, {"P", p, Direction::Maximize}});
}

void expect_in_bounds(const Benchmark& b, const std::vector<double>& p) {
    ASSERT_EQ(p.size(), b.num_params());
    for (std::size_t k = 0; k < p.size(); ++k) {
        EXPECT_GE(p[k], b.topology->tunable(k).min);
        EXPECT_LE(p[k], b.topology->tunable(k).max);
    }
}

}  // namespace

TEST(Fom, SurrogateMaximum) { EXPECT_DOUBLE_EQ(fom_value(pa_specs(75, 4)), 4.0); }

TEST(Fom, LowerBoundFromEvaluatorClamp) {
    const Benchmark b = load_benchmark("rfpa");
    Rng r(1);
    const double floor = 3.0 * (5.0 / 75.0) + 0.05 / 4.0;
    for (int i = 0; i < 2000; ++i) {
        std::vector<double> p(b.num_params());
        for (std::size_t k = 0; k < p.size(); ++k) p[k] = r.uniform(b.topology->tunable(k).min, b.topology->tunable(k).max);
        EXPECT_GE(fom_value(evaluate_rfpa(b.initial().with_parameters(p), Fidelity::Fine)), floor);
    }
}

TEST(Fom, MonotoneInEachSpec) {
    Rng r(2);
    for (int i = 0; i < 1000; ++i) {
        const double e = r.uniform(5, 75), p = r.uniform(0.05, 4), de = r.uniform(0, 5), dp = r.uniform(0, 1);
        EXPECT_GE(fom_value(pa_specs(e + de, p)), fom_value(pa_specs(e, p)));
        EXPECT_GE(fom_value(pa_specs(e, p + dp)), fom_value(pa_specs(e, p)));
    }
}

TEST(Fom, NonPaSpecsRejected) {
    const SpecVector opamp({{"G", 1, Direction::Maximize}, {"P", 1, Direction::Minimize}});
    EXPECT_THROW(fom_value(opamp), std::invalid_argument);
    FomConfig cfg;
    cfg.budget = 100;
    EXPECT_THROW(fom_optimize(FomMethod::Random, bench("opamp2"), cfg, 0), std::invalid_argument);
}

TEST(Fom, ClassicMethodsRespectBudgetAndReplay) {
    FomConfig cfg;
    cfg.budget = 900;
    for (FomMethod m : {FomMethod::Genetic, FomMethod::Annealing, FomMethod::Random}) {
        const FomResult a = fom_optimize(m, bench("rfpa"), cfg, 4), c = fom_optimize(m, bench("rfpa"), cfg, 4);
        EXPECT_EQ(a.evaluations, 900) << to_string(m);
        EXPECT_EQ(a.best_fom, c.best_fom);
        EXPECT_EQ(a.best_parameters, c.best_parameters);
        EXPECT_EQ(a.curve.size(), 30u);
        EXPECT_NEAR(fom_value(a.best_specs), a.best_fom, 1e-15);
        for (std::size_t i = 1; i < a.curve.size(); ++i) EXPECT_GE(a.curve[i].best_fom, a.curve[i - 1].best_fom);
        expect_in_bounds(load_benchmark("rfpa"), a.best_parameters);
    }
}

TEST(Fom, RlStaysWithinBudget) {
    FomConfig cfg;
    cfg.budget = 1200;
    const FomResult r = fom_optimize(FomMethod::Rl, bench("rfpa"), cfg, 1);
    EXPECT_LE(r.evaluations, 1200);
    EXPECT_GT(r.evaluations, 0);
    EXPECT_FALSE(r.curve.empty());
    EXPECT_NEAR(fom_value(r.best_specs), r.best_fom, 1e-15);
    const CircuitEnv fine(bench("rfpa"), Fidelity::Fine);
    EXPECT_EQ(fom_value(fine.evaluate(fine.benchmark().initial().with_parameters(r.best_parameters))), r.best_fom);
}

TEST(Fom, CurveCsvColumns) {
    const std::vector<FomPoint> curve{{1, 2.5, 2.75}, {2, 2.6, 2.8}};
    const std::string csv = fom_curve_csv(curve);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "episode,mean_fom,best_fom");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST(Classic, InitialPointSatisfyingGoalNeedsOneCall) {
    const auto b = bench("toy");
    const CircuitEnv env(b, Fidelity::Fine);
    const SpecVector s = env.evaluate(b->initial());
    std::vector<double> v = s.values();
    for (std::size_t j = 0; j < v.size(); ++j) v[j] *= s.direction(j) == Direction::Maximize ? 0.9 : 1.1;
    for (ClassicMethod m : {ClassicMethod::Genetic, ClassicMethod::Annealing, ClassicMethod::Random}) {
        Rng r(1);
        const ClassicReport rep = classic_optimize(m, env, s.with_values(v), 1, r);
        EXPECT_TRUE(rep.success);
        EXPECT_EQ(rep.evaluations, 1);
        EXPECT_EQ(rep.best_parameters, b->initial().parameters());
    }
}

TEST(Classic, ZeroBudgetIsAnError) {
    const CircuitEnv env(bench("toy"), Fidelity::Fine);
    Rng r(1);
    EXPECT_THROW(classic_optimize(ClassicMethod::Random, env, env.sample_goal(r), 0, r), std::invalid_argument);
}

TEST(Classic, RandomSearchReplays) {
    const CircuitEnv env(bench("opamp2"), Fidelity::Fine);
    Rng g(2);
    const SpecVector goal = env.sample_goal(g);
    Rng a(3), c(3);
    const ClassicReport x = classic_optimize(ClassicMethod::Random, env, goal, 300, a);
    const ClassicReport y = classic_optimize(ClassicMethod::Random, env, goal, 300, c);
    EXPECT_EQ(x.scores, y.scores);
    EXPECT_EQ(x.best_parameters, y.best_parameters);
    EXPECT_EQ(x.evaluations, static_cast<long>(x.scores.size()));
}

TEST(Classic, ScoresAreRewardsAndBestIsMax) {
    const CircuitEnv env(bench("opamp2"), Fidelity::Fine);
    Rng g(4);
    const SpecVector goal = env.sample_goal(g);
    for (ClassicMethod m : {ClassicMethod::Genetic, ClassicMethod::Annealing, ClassicMethod::Random}) {
        Rng r(5);
        const ClassicReport rep = classic_optimize(m, env, goal, 500, r);
        EXPECT_LE(rep.evaluations, 500);
        EXPECT_EQ(rep.best_score, *std::max_element(rep.scores.begin(), rep.scores.end()));
        EXPECT_EQ(rep.best_score, reward(rep.best_specs, goal));
        EXPECT_EQ(rep.success, rep.best_score == kGoalReward);
        EXPECT_EQ(env.evaluate(env.benchmark().initial().with_parameters(rep.best_parameters)), rep.best_specs);
    }
}

TEST(ClassicProperty, NeverLeavesBounds) {
    const auto b = bench("opamp2");
    const CircuitEnv env(b, Fidelity::Fine);
    Rng g(6);
    for (int i = 0; i < 5; ++i) {
        const SpecVector goal = env.sample_goal(g);
        for (ClassicMethod m : {ClassicMethod::Genetic, ClassicMethod::Annealing, ClassicMethod::Random}) {
            Rng r(static_cast<std::uint64_t>(i));
            expect_in_bounds(*b, classic_optimize(m, env, goal, 400, r).best_parameters);
        }
    }
}

TEST(Lattice, PointsAreReachableByActions) {
    const Benchmark b = load_benchmark("opamp2");
    const ParamLattice lat(b.initial());
    EXPECT_EQ(lat.graph(lat.origin()), b.initial());
    std::vector<int> idx(lat.size());
    for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = lat.hi(k);
    const CircuitGraph top = lat.graph(idx);
    CircuitGraph walk = b.initial();
    for (int i = 0; i < 200; ++i) walk = apply_action(walk, std::vector<int>(lat.size(), 1));
    EXPECT_EQ(top, walk);
}

TEST(Classic, GeneticSolvesHalfOfToyGoals) {
    const CircuitEnv env(bench("toy"), Fidelity::Fine);
    Rng goals(7), r(8);
    int successes = 0;
    for (int i = 0; i < 100; ++i) successes += classic_optimize(ClassicMethod::Genetic, env, env.sample_goal(goals), 5000, r).success;
    EXPECT_GE(successes, 50);
}
