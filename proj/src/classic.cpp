#include "anasizer/classic.hpp"

#include <algorithm>
#include <cmath>

#include "anasizer/reward.hpp"

namespace anasizer {

std::string_view to_string(ClassicMethod m) {
    switch (m) {
        case ClassicMethod::Genetic: return "genetic";
        case ClassicMethod::Annealing: return "annealing";
        case ClassicMethod::Random: return "random";
    }
    return "?";
}

ClassicMethod parse_classic_method(std::string_view s) {
    if (s == "genetic" || s == "ga") return ClassicMethod::Genetic;
    if (s == "annealing" || s == "sa") return ClassicMethod::Annealing;
    if (s == "random") return ClassicMethod::Random;
    throw std::invalid_argument("unknown optimizer '" + std::string(s) + "'");
}

ParamLattice::ParamLattice(const CircuitGraph& initial) : initial_(initial) {
    const Topology& t = initial.topology();
    for (std::size_t k = 0; k < initial.num_params(); ++k) {
        const TunableSpec& spec = t.tunable(k);
        const double x = initial.param(k);
        lo_.push_back(-static_cast<int>(std::ceil((x - spec.min) / spec.step - 1e-9)));
        hi_.push_back(static_cast<int>(std::ceil((spec.max - x) / spec.step - 1e-9)));
    }
}

CircuitGraph ParamLattice::graph(const std::vector<int>& index) const {
    const Topology& t = initial_.topology();
    std::vector<double> v(size());
    for (std::size_t k = 0; k < size(); ++k) {
        const TunableSpec& spec = t.tunable(k);
        v[k] = std::clamp(initial_.param(k) + index[k] * spec.step, spec.min, spec.max);
    }
    return initial_.with_parameters(v);
}

namespace {

struct Search {
    const CircuitEnv& env;
    const ParamLattice& lattice;
    const ScoreFn& score;
    const SuccessFn& is_success;
    long budget;
    ClassicReport& rep;

    bool exhausted() const { return rep.evaluations >= budget || rep.success; }

    double eval(const std::vector<int>& x) {
        const CircuitGraph g = lattice.graph(x);
        const SpecVector s = env.evaluate(g);
        const double v = score(s);
        ++rep.evaluations;
        rep.scores.push_back(v);
        if (rep.evaluations == 1 || v > rep.best_score) {
            rep.best_score = v;
            rep.best_parameters = g.parameters();
            rep.best_specs = s;
        }
        if (is_success && is_success(s)) {
            rep.success = true;
            rep.best_score = v;
            rep.best_parameters = g.parameters();
            rep.best_specs = s;
        }
        return v;
    }
};

std::vector<int> random_point(const ParamLattice& lat, Rng& rng) {
    std::vector<int> x(lat.size());
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = static_cast<int>(rng.between(lat.lo(k), lat.hi(k)));
    return x;
}

void one_step(const ParamLattice& lat, std::vector<int>& x, std::size_t k, Rng& rng) {
    const int d = rng.below(2) == 0 ? -1 : 1;
    x[k] = std::clamp(x[k] + d, lat.lo(k), lat.hi(k));
}

void run_random(Search& s, Rng& rng) {
    s.eval(s.lattice.origin());
    while (!s.exhausted()) s.eval(random_point(s.lattice, rng));
}

void run_annealing(Search& s, Rng& rng, const ClassicConfig& cfg) {
    std::vector<int> cur = s.lattice.origin();
    double cur_v = s.eval(cur);
    double temp = cfg.t0;
    while (!s.exhausted()) {
        std::vector<int> cand = cur;
        one_step(s.lattice, cand, rng.below(cand.size()), rng);
        const double v = s.eval(cand);
        if (v >= cur_v || rng.uniform() < std::exp((v - cur_v) / temp)) {
            cur = std::move(cand);
            cur_v = v;
        }
        temp *= cfg.cooling;
    }
}

void run_genetic(Search& s, Rng& rng, const ClassicConfig& cfg) {
    const std::size_t pop_size = static_cast<std::size_t>(std::max(2, cfg.population));
    std::vector<std::vector<int>> pop;
    std::vector<double> fit;
    pop.push_back(s.lattice.origin());
    fit.push_back(s.eval(pop.back()));
    while (pop.size() < pop_size && !s.exhausted()) {
        pop.push_back(random_point(s.lattice, rng));
        fit.push_back(s.eval(pop.back()));
    }
    auto tournament = [&]() -> std::size_t {
        const std::size_t a = rng.below(pop.size()), b = rng.below(pop.size());
        return fit[b] > fit[a] ? b : a;
    };
    while (!s.exhausted()) {
        // Elitism of one: the best individual survives unchanged.
        const std::size_t elite = static_cast<std::size_t>(std::max_element(fit.begin(), fit.end()) - fit.begin());
        std::vector<std::vector<int>> next{pop[elite]};
        std::vector<double> next_fit{fit[elite]};
        while (next.size() < pop_size && !s.exhausted()) {
            const auto& p1 = pop[tournament()];
            const auto& p2 = pop[tournament()];
            std::vector<int> child(p1.size());
            for (std::size_t k = 0; k < child.size(); ++k) {
                child[k] = rng.uniform() < cfg.crossover ? p2[k] : p1[k];
                if (rng.uniform() < cfg.mutation) one_step(s.lattice, child, k, rng);
            }
            next_fit.push_back(s.eval(child));
            next.push_back(std::move(child));
        }
        pop = std::move(next);
        fit = std::move(next_fit);
    }
}

}  // namespace

ClassicReport classic_maximize(ClassicMethod method, const CircuitEnv& env, const ScoreFn& score, long budget,
                               Rng& rng, const ClassicConfig& cfg, const SuccessFn& is_success) {
    if (budget <= 0) throw std::invalid_argument("classic optimizer: budget must be positive");
    ClassicReport rep;
    rep.method = method;
    const ParamLattice lattice(env.benchmark().initial());
    Search s{env, lattice, score, is_success, budget, rep};
    switch (method) {
        case ClassicMethod::Random: run_random(s, rng); break;
        case ClassicMethod::Annealing: run_annealing(s, rng, cfg); break;
        case ClassicMethod::Genetic: run_genetic(s, rng, cfg); break;
    }
    return rep;
}

ClassicReport classic_optimize(ClassicMethod method, const CircuitEnv& env, const SpecVector& goal, long budget,
                               Rng& rng, const ClassicConfig& cfg) {
    return classic_maximize(
        method, env, [&](const SpecVector& s) { return reward(s, goal); }, budget, rng, cfg,
        [&](const SpecVector& s) { return goal_met(s, goal); });
}

}  // namespace anasizer
