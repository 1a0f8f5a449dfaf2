#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "anasizer/env.hpp"
#include "anasizer/nets.hpp"

namespace anasizer::testing {

/// Largest |p(s)[k] - p(relabeled s)[k']| over `relabelings` random node orders,
/// where k' is the parameter index that k maps to under the relabeling. Each
/// relabeling uses a fresh random state reached by random actions.
inline double equivariance_deviation(const std::shared_ptr<const Benchmark>& bench, Variant variant,
                                     int relabelings, std::uint64_t seed) {
    const Agent agent(bench, variant, seed);
    const CircuitEnv env(bench, Fidelity::Fine);
    Rng rng(seed);
    const std::size_t n = bench->topology->num_nodes(), m = bench->num_params();
    double worst = 0.0;
    for (int t = 0; t < relabelings; ++t) {
        EnvState s = env.reset(env.sample_goal(rng));
        const int walk = static_cast<int>(rng.below(10));
        for (int i = 0; i < walk; ++i) {
            std::vector<int> a(m);
            for (auto& x : a) x = static_cast<int>(rng.below(3)) - 1;
            s.graph = apply_action(s.graph, a);
        }
        s.intermediate = env.evaluate(s.graph);

        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
        std::vector<std::size_t> where(n);
        for (std::size_t i = 0; i < n; ++i) where[order[i]] = i;

        auto permuted = std::make_shared<Benchmark>(*bench);
        permuted->topology = permute_topology(*bench->topology, order);
        const std::shared_ptr<const Benchmark> pb = permuted;
        const Agent twin(pb, variant, seed);
        EnvState ps = s;
        ps.graph = permute_graph(s.graph, pb->topology, order);

        const Matrix p = agent.policy_probs(s), q = twin.policy_probs(ps);
        const auto& idx = pb->topology->param_index();
        for (std::size_t k = 0; k < m; ++k) {
            const auto ref = bench->topology->param_index()[k];
            const auto it = std::find(idx.begin(), idx.end(), ParamRef{where[ref.node], ref.entry});
            const auto kk = static_cast<Eigen::Index>(it - idx.begin());
            for (Eigen::Index c = 0; c < 3; ++c)
                worst = std::max(worst, std::abs(p(static_cast<Eigen::Index>(k), c) - q(kk, c)));
        }
        worst = std::max(worst, std::abs(agent.value_estimate(s) - twin.value_estimate(ps)));
    }
    return worst;
}

}  // namespace anasizer::testing
