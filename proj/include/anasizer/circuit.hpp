#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

namespace anasizer {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class NetlistError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class DeviceKind { Nmos, Pmos, Capacitor, Resistor, Inductor, Supply, Ground, Bias };

/// Width of the kind one-hot. Fixed across benchmarks so checkpoints transfer.
inline constexpr std::size_t kNumKinds = 8;
/// Widest per-node parameter vector (transistors: width, fingers).
inline constexpr std::size_t kMaxNodeParams = 2;

std::string_view to_string(DeviceKind k);
DeviceKind parse_kind(std::string_view s);
bool is_transistor(DeviceKind k);
bool is_source(DeviceKind k);  // Supply, Ground or Bias
/// Position of the kind in the one-hot encoding.
std::size_t kind_slot(DeviceKind k);

struct TunableSpec {
    double min = 0.0;
    double max = 0.0;
    double step = 0.0;
    bool integer = false;
};

struct DeviceNode {
    std::string id;
    DeviceKind kind = DeviceKind::Ground;
    std::vector<std::string> param_names;
    std::vector<double> initial;                   // value at episode start
    std::vector<std::optional<TunableSpec>> tunable;  // per entry
};

struct ParamRef {
    std::size_t node = 0;
    std::size_t entry = 0;
    friend bool operator==(const ParamRef&, const ParamRef&) = default;
};

/// Immutable topology shared by every graph state of one benchmark.
class Topology {
public:
    Topology(std::string name, std::vector<DeviceNode> nodes, std::vector<std::pair<std::size_t, std::size_t>> edges);

    const std::string& name() const { return name_; }
    const std::vector<DeviceNode>& nodes() const { return nodes_; }
    const DeviceNode& node(std::size_t i) const { return nodes_[i]; }
    std::size_t num_nodes() const { return nodes_.size(); }
    /// Undirected edges with first < second, sorted, no duplicates or self-loops.
    const std::vector<std::pair<std::size_t, std::size_t>>& edges() const { return edges_; }
    const std::vector<ParamRef>& param_index() const { return param_index_; }
    std::size_t num_params() const { return param_index_.size(); }
    const TunableSpec& tunable(std::size_t k) const;

    std::size_t slot_offset(std::size_t node) const { return offsets_[node]; }
    std::size_t num_slots() const { return offsets_.back(); }

    std::optional<std::size_t> find(std::string_view id) const;
    std::size_t index_of(std::string_view id) const;
    /// "M1.w" style label of flat parameter k.
    std::string param_label(std::size_t k) const;

    /// Symmetric 0/1 adjacency without self-loops.
    const Matrix& adjacency() const { return adjacency_; }

private:
    std::string name_;
    std::vector<DeviceNode> nodes_;
    std::vector<std::pair<std::size_t, std::size_t>> edges_;
    std::vector<ParamRef> param_index_;
    std::vector<std::size_t> offsets_;
    Matrix adjacency_;
};

/// A circuit state: shared topology plus the current value of every parameter slot.
class CircuitGraph {
public:
    explicit CircuitGraph(std::shared_ptr<const Topology> topology);

    const Topology& topology() const { return *topology_; }
    const std::shared_ptr<const Topology>& topology_ptr() const { return topology_; }
    const std::string& name() const { return topology_->name(); }
    std::size_t num_nodes() const { return topology_->num_nodes(); }
    std::size_t num_params() const { return topology_->num_params(); }

    double value(std::size_t node, std::size_t entry) const { return values_[topology_->slot_offset(node) + entry]; }
    double value(std::string_view id, std::string_view entry) const;
    std::span<const double> node_values(std::size_t node) const;

    /// Flat tunable parameter k (param_index order).
    double param(std::size_t k) const;
    std::vector<double> parameters() const;
    /// Copy with all M tunable parameters replaced; values must lie in bounds.
    CircuitGraph with_parameters(std::span<const double> values) const;

    friend bool operator==(const CircuitGraph& a, const CircuitGraph& b) {
        return a.topology_ == b.topology_ && a.values_ == b.values_;
    }

private:
    std::shared_ptr<const Topology> topology_;
    std::vector<double> values_;
};

CircuitGraph load_netlist(const nlohmann::json& doc);
CircuitGraph load_netlist_file(const std::filesystem::path& path);

/// Fixed-value scale constants for node feature normalization.
struct NormalizationScheme {
    double voltage_scale = 5.0;
    std::map<DeviceKind, double> fixed_scale{
        {DeviceKind::Capacitor, 10.0}, {DeviceKind::Resistor, 100.0}, {DeviceKind::Inductor, 10.0}};
};

/// Row k: one-hot(kind) followed by the node's normalized parameters, zero padded
/// to kNumKinds + kMaxNodeParams columns. Tunables map to [0, 1] by their bounds.
Matrix node_features(const CircuitGraph& g, const NormalizationScheme& norm = {});

/// D^{-1/2} (A + I) D^{-1/2}.
Matrix normalized_adjacency(const Topology& t);
inline Matrix normalized_adjacency(const CircuitGraph& g) { return normalized_adjacency(g.topology()); }

/// x_k <- clamp(x_k + a_k * step_k, min_k, max_k) for every tunable k.
CircuitGraph apply_action(const CircuitGraph& g, std::span<const int> action);

/// Same circuit with node i of the result equal to node order[i] of the input.
std::shared_ptr<const Topology> permute_topology(const Topology& t, std::span<const std::size_t> order);
CircuitGraph permute_graph(const CircuitGraph& g, const std::shared_ptr<const Topology>& permuted,
                           std::span<const std::size_t> order);

}  // namespace anasizer
