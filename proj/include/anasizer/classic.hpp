#pragma once

#include <functional>
#include <string>
#include <vector>

#include "anasizer/env.hpp"
#include "anasizer/rng.hpp"

namespace anasizer {

enum class ClassicMethod { Genetic, Annealing, Random };
std::string_view to_string(ClassicMethod m);
ClassicMethod parse_classic_method(std::string_view s);

struct ClassicConfig {
    int population = 40;
    double crossover = 0.5;  // per-gene probability of taking the second parent
    double mutation = 0.1;   // per-gene probability of a one-step move
    double t0 = 1.0;
    double cooling = 0.95;
};

/// Search points are restricted to the lattice an agent can reach:
/// clamp(initial_k + i * step_k, min_k, max_k).
class ParamLattice {
public:
    explicit ParamLattice(const CircuitGraph& initial);

    std::size_t size() const { return lo_.size(); }
    int lo(std::size_t k) const { return lo_[k]; }
    int hi(std::size_t k) const { return hi_[k]; }
    std::vector<int> origin() const { return std::vector<int>(size(), 0); }
    CircuitGraph graph(const std::vector<int>& index) const;

private:
    CircuitGraph initial_;
    std::vector<int> lo_, hi_;
};

struct ClassicReport {
    ClassicMethod method = ClassicMethod::Random;
    bool success = false;
    long evaluations = 0;
    double best_score = 0.0;
    std::vector<double> best_parameters;
    SpecVector best_specs;
    std::vector<double> scores;  // score of every evaluation, in call order
};

/// Higher is better. `is_success` (optional) stops the search early.
using ScoreFn = std::function<double(const SpecVector&)>;
using SuccessFn = std::function<bool(const SpecVector&)>;

/// Generic black-box maximization over the lattice; the first call always
/// evaluates the benchmark's initial point. Throws std::invalid_argument for a
/// zero budget.
ClassicReport classic_maximize(ClassicMethod method, const CircuitEnv& env, const ScoreFn& score, long budget,
                               Rng& rng, const ClassicConfig& cfg = {}, const SuccessFn& is_success = {});

/// Goal mode: maximizes the reward for `goal` and stops once every spec is met.
ClassicReport classic_optimize(ClassicMethod method, const CircuitEnv& env, const SpecVector& goal, long budget,
                               Rng& rng, const ClassicConfig& cfg = {});

}  // namespace anasizer
