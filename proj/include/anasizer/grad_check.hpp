#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "anasizer/benchmark.hpp"
#include "anasizer/rng.hpp"
#include "anasizer/tensor.hpp"

namespace anasizer {

inline constexpr double kGradTolerance = 1e-4;

struct GradCheckResult {
    std::string name;
    int trials = 0;
    int resampled = 0;  // draws discarded because the difference straddled a kink
    double max_rel_error = 0.0;
    bool passed() const { return max_rel_error < kGradTolerance; }
};

using TensorFn = std::function<ad::Tensor(std::span<const ad::Tensor>)>;

/// Relative error between the reverse-mode directional derivative of
/// sum(w * f(x)) along a random direction and its central finite difference.
/// Random weights w make every output entry count.
double directional_grad_error(const TensorFn& f, const std::vector<Matrix>& inputs, Rng& rng, double h = 1e-6);

struct GradProbe {
    double rel_error = 0.0;
    // Forward and backward one-sided differences disagree beyond smooth
    // curvature, i.e. the +/-h segment crosses a ReLU-type kink.
    bool kinked = false;
};
GradProbe directional_grad_probe(const TensorFn& f, const std::vector<Matrix>& inputs, Rng& rng, double h = 1e-6);

/// `trials` random draws per differentiable op.
std::vector<GradCheckResult> check_ops(int trials, std::uint64_t seed);
/// Policy and value networks of every variant on `bench`, random states and weights.
std::vector<GradCheckResult> check_networks(const std::shared_ptr<const Benchmark>& bench, int trials,
                                            std::uint64_t seed);

}  // namespace anasizer
