#pragma once

#include <memory>
#include <string>
#include <vector>

#include "anasizer/benchmark.hpp"
#include "anasizer/env.hpp"

namespace anasizer {

enum class Variant { GcnFc, GatFc, BaselineA, BaselineBGcn, BaselineBGat };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view s);
bool uses_graph(Variant v);
bool uses_gat(Variant v);

/// Per-benchmark constants shared by all observations of one encoder.
struct ObservationLayout {
    Matrix adjacency;             // normalized, graph variants
    Matrix mask;                  // A + I as 0/1, for attention
    std::vector<int> param_node;  // graph row holding parameter k
    Matrix param_slot;            // M x kMaxNodeParams one-hot of the entry index
    Matrix static_features;       // partial-graph baseline only
    std::vector<std::size_t> nodes;  // benchmark node index of each graph row
};

/// Network input for one state.
struct Observation {
    std::shared_ptr<const ObservationLayout> layout;
    Matrix features;  // n x d node features (graph variants)
    Matrix specs;     // 1 x s vector input
};

/// Maps a spec value to [-1, 1] over its sampling interval (log10 for log axes),
/// clipped to +-kSpecClip.
inline constexpr double kSpecClip = 5.0;
double normalize_spec(double value, const SpecDef& def);

/// Builds network inputs for one benchmark and variant:
///  - GCN-FC / GAT-FC: full graph with dynamic node features; specs =
///    [goal, intermediate, per-spec reward terms].
///  - BaselineA: no graph; specs = [normalized parameters, intermediate, goal].
///  - BaselineB-*: device-only subgraph with static per-kind features; specs = goal.
class ObservationEncoder {
public:
    ObservationEncoder(std::shared_ptr<const Benchmark> bench, Variant variant);

    Observation encode(const EnvState& s) const;

    Variant variant() const { return variant_; }
    const Benchmark& benchmark() const { return *bench_; }
    std::size_t feature_dim() const;
    std::size_t spec_dim() const;
    std::size_t num_params() const { return bench_->num_params(); }
    const std::shared_ptr<const ObservationLayout>& layout() const { return layout_; }

private:
    std::shared_ptr<const Benchmark> bench_;
    Variant variant_;
    std::shared_ptr<const ObservationLayout> layout_;
};

}  // namespace anasizer
