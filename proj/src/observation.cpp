#include "anasizer/observation.hpp"

#include <algorithm>
#include <cmath>

#include "anasizer/reward.hpp"

namespace anasizer {

std::string_view to_string(Variant v) {
    switch (v) {
        case Variant::GcnFc: return "gcn-fc";
        case Variant::GatFc: return "gat-fc";
        case Variant::BaselineA: return "baseline-a";
        case Variant::BaselineBGcn: return "baseline-b-gcn";
        case Variant::BaselineBGat: return "baseline-b-gat";
    }
    return "?";
}

Variant parse_variant(std::string_view s) {
    for (Variant v : {Variant::GcnFc, Variant::GatFc, Variant::BaselineA, Variant::BaselineBGcn, Variant::BaselineBGat})
        if (to_string(v) == s) return v;
    throw std::invalid_argument("unknown variant '" + std::string(s) + "'");
}

bool uses_graph(Variant v) { return v != Variant::BaselineA; }
bool uses_gat(Variant v) { return v == Variant::GatFc || v == Variant::BaselineBGat; }

double normalize_spec(double value, const SpecDef& def) {
    double x;
    if (def.log_scale) {
        const double lo = std::log10(def.low), hi = std::log10(def.high);
        x = (std::log10(std::max(value, 1e-300)) - lo) / (hi - lo);
    } else {
        x = (value - def.low) / (def.high - def.low);
    }
    return std::clamp(2.0 * x - 1.0, -kSpecClip, kSpecClip);
}

ObservationEncoder::ObservationEncoder(std::shared_ptr<const Benchmark> bench, Variant variant)
    : bench_(std::move(bench)), variant_(variant) {
    const Topology& topo = *bench_->topology;
    auto layout = std::make_shared<ObservationLayout>();

    const bool partial = variant_ == Variant::BaselineBGcn || variant_ == Variant::BaselineBGat;
    std::vector<int> row_of(topo.num_nodes(), -1);
    for (std::size_t i = 0; i < topo.num_nodes(); ++i) {
        if (partial && is_source(topo.node(i).kind)) continue;
        row_of[i] = static_cast<int>(layout->nodes.size());
        layout->nodes.push_back(i);
    }
    const auto n = static_cast<Eigen::Index>(layout->nodes.size());

    Matrix a = Matrix::Zero(n, n);
    for (auto [u, v] : topo.edges()) {
        if (row_of[u] < 0 || row_of[v] < 0) continue;
        a(row_of[u], row_of[v]) = 1.0;
        a(row_of[v], row_of[u]) = 1.0;
    }
    layout->mask = a + Matrix::Identity(n, n);
    layout->adjacency = layout->mask;
    {
        Eigen::VectorXd dinv(n);
        for (Eigen::Index i = 0; i < n; ++i) dinv(i) = 1.0 / std::sqrt(layout->mask.row(i).sum());
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) layout->adjacency(i, j) *= dinv(i) * dinv(j);
    }

    const std::size_t m = topo.num_params();
    layout->param_slot = Matrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(kMaxNodeParams));
    for (std::size_t k = 0; k < m; ++k) {
        const auto& r = topo.param_index()[k];
        layout->param_node.push_back(row_of[r.node]);
        layout->param_slot(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(r.entry)) = 1.0;
    }

    if (partial) {
        layout->static_features = Matrix::Zero(n, static_cast<Eigen::Index>(kNumKinds + 2));
        for (Eigen::Index r = 0; r < n; ++r) {
            const DeviceKind kind = topo.node(layout->nodes[static_cast<std::size_t>(r)]).kind;
            layout->static_features(r, static_cast<Eigen::Index>(kind_slot(kind))) = 1.0;
            auto it = bench_->model.static_features.find(kind);
            if (it != bench_->model.static_features.end()) {
                layout->static_features(r, kNumKinds) = it->second[0];
                layout->static_features(r, kNumKinds + 1) = it->second[1];
            }
        }
    }
    layout_ = std::move(layout);
}

std::size_t ObservationEncoder::feature_dim() const { return kNumKinds + kMaxNodeParams; }

std::size_t ObservationEncoder::spec_dim() const {
    const std::size_t n = bench_->goals.size();
    switch (variant_) {
        case Variant::GcnFc:
        case Variant::GatFc: return 3 * n;
        case Variant::BaselineA: return num_params() + 2 * n;
        default: return n;
    }
}

Observation ObservationEncoder::encode(const EnvState& s) const {
    const GoalSpace& goals = bench_->goals;
    const std::size_t n = goals.size();
    Observation obs;
    obs.layout = layout_;
    obs.specs.resize(1, static_cast<Eigen::Index>(spec_dim()));
    Eigen::Index c = 0;
    auto put_goal = [&] {
        for (std::size_t j = 0; j < n; ++j) obs.specs(0, c++) = normalize_spec(s.goal.value(j), goals[j]);
    };
    auto put_current = [&] {
        for (std::size_t j = 0; j < n; ++j) obs.specs(0, c++) = normalize_spec(s.intermediate.value(j), goals[j]);
    };

    switch (variant_) {
        case Variant::GcnFc:
        case Variant::GatFc: {
            obs.features = node_features(s.graph, bench_->normalization);
            put_goal();
            put_current();
            for (double t : reward_terms(s.intermediate, s.goal)) obs.specs(0, c++) = t;
            break;
        }
        case Variant::BaselineA: {
            const Topology& topo = *bench_->topology;
            for (std::size_t k = 0; k < topo.num_params(); ++k) {
                const auto& t = topo.tunable(k);
                obs.specs(0, c++) = t.max > t.min ? (s.graph.param(k) - t.min) / (t.max - t.min) : 0.0;
            }
            put_current();
            put_goal();
            break;
        }
        default:
            obs.features = layout_->static_features;
            put_goal();
            break;
    }
    return obs;
}

}  // namespace anasizer
