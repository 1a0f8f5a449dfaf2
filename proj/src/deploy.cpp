#include "anasizer/deploy.hpp"

#include <sstream>

#include <nlohmann/json.hpp>

#include "anasizer/reward.hpp"

namespace anasizer {

std::string_view to_string(DeployMode m) { return m == DeployMode::Greedy ? "greedy" : "sampled"; }

DeployMode parse_deploy_mode(std::string_view s) {
    if (s == "greedy") return DeployMode::Greedy;
    if (s == "sampled") return DeployMode::Sampled;
    throw std::invalid_argument("unknown deploy mode '" + std::string(s) + "'");
}

DeploymentReport deploy(const Agent& agent, const CircuitEnv& env, const SpecVector& goal, DeployMode mode,
                        Rng* rng, int max_steps) {
    agent.check_benchmark(env.benchmark());
    if (mode == DeployMode::Sampled && !rng) throw std::invalid_argument("deploy: sampled mode needs an rng");
    const int limit = max_steps > 0 ? max_steps : env.max_steps();

    DeploymentReport rep;
    rep.goal = goal;
    EnvState s = env.reset(goal);
    rep.trace.push_back(s.intermediate);
    rep.parameters.push_back(s.graph.parameters());
    while (!s.done) {
        const Matrix probs = agent.policy_probs(s);
        const ActionMatrix am = mode == DeployMode::Greedy ? greedy_action(probs) : sample_action(probs, *rng);
        StepResult r = env.step(s, am.action);
        s = std::move(r.state);
        rep.trace.push_back(s.intermediate);
        rep.parameters.push_back(s.graph.parameters());
        rep.rewards.push_back(r.reward);
        if (r.reward == kGoalReward) rep.success = true;
        if (s.step_index >= limit) break;
    }
    rep.steps = s.step_index;
    return rep;
}

AccuracyResult measure_accuracy(const Agent& agent, const CircuitEnv& env, std::span<const SpecVector> goals,
                                DeployMode mode, std::uint64_t seed) {
    AccuracyResult res;
    res.goals = static_cast<int>(goals.size());
    long step_sum = 0;
    for (std::size_t i = 0; i < goals.size(); ++i) {
        Rng rng = Rng::stream(seed, "deploy-actions", i);
        const DeploymentReport r = deploy(agent, env, goals[i], mode, &rng);
        res.success.push_back(r.success);
        res.steps.push_back(r.steps);
        if (r.success) {
            ++res.successes;
            step_sum += r.steps;
        }
    }
    if (res.goals > 0) res.accuracy = static_cast<double>(res.successes) / res.goals;
    if (res.successes > 0) res.mean_steps = static_cast<double>(step_sum) / res.successes;
    return res;
}

AccuracyResult measure_accuracy(const Agent& agent, const CircuitEnv& env, int n_goals, Rng& rng, DeployMode mode) {
    std::vector<SpecVector> goals;
    for (int i = 0; i < n_goals; ++i) goals.push_back(env.sample_goal(rng));
    return measure_accuracy(agent, env, goals, mode, rng.derive_seed());
}

std::vector<GeneralizationReport> generalize(const Agent& agent, const CircuitEnv& env,
                                             std::span<const SpecVector> goals, DeployMode mode) {
    std::vector<GeneralizationReport> out;
    const GoalSpace& box = env.benchmark().goals;
    for (std::size_t i = 0; i < goals.size(); ++i) {
        GeneralizationReport g;
        Rng rng = Rng::stream(0, "generalize", i);
        g.report = deploy(agent, env, goals[i], mode, &rng);
        const auto flags = box.out_of_range(goals[i]);
        for (std::size_t j = 0; j < flags.size(); ++j)
            if (flags[j]) g.out_of_range.push_back(goals[i].name(j));
        g.in_range = g.out_of_range.empty();
        out.push_back(std::move(g));
    }
    return out;
}

nlohmann::json to_json(const DeploymentReport& r) {
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& s : r.trace) trace.push_back(to_json(s));
    return {{"goal", to_json(r.goal)}, {"success", r.success}, {"steps", r.steps},   {"trace", trace},
            {"parameters", r.parameters}, {"rewards", r.rewards}, {"final_parameters", r.final_parameters()}};
}

std::string trace_csv(const DeploymentReport& r) {
    std::ostringstream os;
    os.precision(17);
    os << "step";
    for (std::size_t j = 0; j < r.goal.size(); ++j) os << ',' << r.goal.name(j);
    for (std::size_t j = 0; j < r.goal.size(); ++j) os << ",goal_" << r.goal.name(j);
    os << ",reward\n";
    for (std::size_t t = 0; t < r.trace.size(); ++t) {
        os << t;
        for (std::size_t j = 0; j < r.goal.size(); ++j) os << ',' << r.trace[t].value(j);
        for (std::size_t j = 0; j < r.goal.size(); ++j) os << ',' << r.goal.value(j);
        os << ',';
        if (t > 0) os << r.rewards[t - 1];
        os << '\n';
    }
    return os.str();
}

}  // namespace anasizer
