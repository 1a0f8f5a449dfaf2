#include "anasizer/fom.hpp"

#include <sstream>

namespace anasizer {

double fom_value(const SpecVector& s, const FomConfig& cfg) {
    const auto e = s.find("E"), p = s.find("P");
    if (!e || !p || s.size() != 2) throw std::invalid_argument("FoM needs an RF PA spec vector (E, P)");
    return cfg.e_weight * s.value(*e) / cfg.e_ref + cfg.p_weight * s.value(*p) / cfg.p_ref;
}

std::string_view to_string(FomMethod m) {
    switch (m) {
        case FomMethod::Rl: return "rl";
        case FomMethod::Genetic: return "genetic";
        case FomMethod::Annealing: return "annealing";
        case FomMethod::Random: return "random";
    }
    return "?";
}

FomMethod parse_fom_method(std::string_view s) {
    if (s == "rl") return FomMethod::Rl;
    switch (parse_classic_method(s)) {
        case ClassicMethod::Genetic: return FomMethod::Genetic;
        case ClassicMethod::Annealing: return FomMethod::Annealing;
        case ClassicMethod::Random: return FomMethod::Random;
    }
    return FomMethod::Random;
}

namespace {

void check_pa(const Benchmark& b) {
    if (b.goals.size() != 2 || b.goals[0].name != "E" || b.goals[1].name != "P")
        throw std::invalid_argument("FoM optimization needs the RF PA benchmark, got '" + b.name + "'");
}

/// Curve in chunks of `per_episode` evaluations.
std::vector<FomPoint> chunk_curve(std::span<const double> foms, int per_episode) {
    std::vector<FomPoint> out;
    double best = -1e300;
    for (std::size_t start = 0; start < foms.size(); start += static_cast<std::size_t>(per_episode)) {
        const std::size_t end = std::min(foms.size(), start + static_cast<std::size_t>(per_episode));
        double sum = 0.0;
        for (std::size_t i = start; i < end; ++i) {
            sum += foms[i];
            best = std::max(best, foms[i]);
        }
        out.push_back({static_cast<int>(out.size()) + 1, sum / static_cast<double>(end - start), best});
    }
    return out;
}

}  // namespace

TrainConfig fom_train_config() {
    TrainConfig c;
    c.gamma = 0.9;
    c.lr = 1e-3;
    return c;
}

FomResult fom_optimize(FomMethod method, std::shared_ptr<const Benchmark> bench, const FomConfig& cfg,
                       std::uint64_t seed, Variant variant, TrainConfig train_cfg) {
    check_pa(*bench);
    if (cfg.budget <= 0 || cfg.episode_length <= 0) throw std::invalid_argument("FoM budget must be positive");
    auto score = [cfg](const SpecVector& s) { return fom_value(s, cfg); };

    FomResult res;
    res.method = method;
    if (method != FomMethod::Rl) {
        const ClassicMethod cm = method == FomMethod::Genetic     ? ClassicMethod::Genetic
                                 : method == FomMethod::Annealing ? ClassicMethod::Annealing
                                                                  : ClassicMethod::Random;
        CircuitEnv env(bench, Fidelity::Fine);
        Rng rng = Rng::stream(seed, "fom-search");
        const ClassicReport rep = classic_maximize(cm, env, score, cfg.budget, rng);
        res.best_fom = rep.best_score;
        res.best_parameters = rep.best_parameters;
        res.best_specs = rep.best_specs;
        res.evaluations = rep.evaluations;
        res.curve = chunk_curve(rep.scores, cfg.episode_length);
        return res;
    }

    CircuitEnv env(bench, Fidelity::Fine, 0, cfg.episode_length);
    env.set_objective(score);
    // Each PPO update costs one rollout batch plus one greedy probe episode of
    // the updated policy; both count against the budget.
    const long per_cycle = static_cast<long>(train_cfg.rollout_episodes + 1) * cfg.episode_length;
    const long cycles = cfg.budget / per_cycle;
    if (cycles <= 0) throw std::invalid_argument("FoM budget is smaller than one RL update cycle");
    train_cfg.seed = seed;
    train_cfg.episodes = static_cast<int>(cycles) * train_cfg.rollout_episodes;
    train_cfg.max_steps = cfg.episode_length;
    train_cfg.eval_goals = 0;
    train_cfg.eval_interval = train_cfg.rollout_episodes;

    Agent agent(bench, variant, seed);
    std::vector<double> foms;
    res.best_fom = -1e300;
    auto visit = [&](double fom, const std::vector<double>& params, const SpecVector& specs) {
        foms.push_back(fom);
        if (fom > res.best_fom) {
            res.best_fom = fom;
            res.best_parameters = params;
            res.best_specs = specs;
        }
    };
    Rng probe_goals = Rng::stream(seed, "fom-probe-goals");
    auto probe = [&](const CurvePoint&) {
        const DeploymentReport r = deploy(agent, env, env.sample_goal(probe_goals), DeployMode::Greedy);
        for (std::size_t t = 1; t < r.trace.size(); ++t) visit(r.rewards[t - 1], r.parameters[t], r.trace[t]);
    };
    train(agent, env, train_cfg, probe, [&](const std::vector<RolloutEpisode>& batch) {
        for (const auto& ep : batch)
            for (const auto& st : ep.steps) visit(st.reward, st.next_params, st.next_specs);
    });
    res.evaluations = static_cast<long>(foms.size());
    res.curve = chunk_curve(foms, cfg.episode_length);
    return res;
}

std::string fom_curve_csv(std::span<const FomPoint> curve) {
    std::ostringstream os;
    os.precision(17);
    os << "episode,mean_fom,best_fom\n";
    for (const auto& p : curve) os << p.episode << ',' << p.mean_fom << ',' << p.best_fom << '\n';
    return os.str();
}

}  // namespace anasizer
