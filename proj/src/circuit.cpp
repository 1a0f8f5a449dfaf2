#include "anasizer/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

namespace anasizer {

namespace {

struct KindInfo {
    DeviceKind kind;
    std::string_view name;
    std::size_t slot;  // one-hot position; power nodes first
    std::vector<std::string> params;
};

const std::array<KindInfo, kNumKinds>& kind_table() {
    static const std::array<KindInfo, kNumKinds> table{{
        {DeviceKind::Nmos, "nmos", 2, {"w", "f"}},
        {DeviceKind::Pmos, "pmos", 3, {"w", "f"}},
        {DeviceKind::Capacitor, "capacitor", 4, {"value"}},
        {DeviceKind::Resistor, "resistor", 5, {"value"}},
        {DeviceKind::Inductor, "inductor", 6, {"value"}},
        {DeviceKind::Supply, "supply", 0, {"v"}},
        {DeviceKind::Ground, "ground", 1, {}},
        {DeviceKind::Bias, "bias", 7, {"v"}},
    }};
    return table;
}

const KindInfo& info(DeviceKind k) { return kind_table()[static_cast<std::size_t>(k)]; }

}  // namespace

std::string_view to_string(DeviceKind k) { return info(k).name; }

DeviceKind parse_kind(std::string_view s) {
    for (const auto& i : kind_table())
        if (i.name == s) return i.kind;
    throw NetlistError("unknown device kind '" + std::string(s) + "'");
}

bool is_transistor(DeviceKind k) { return k == DeviceKind::Nmos || k == DeviceKind::Pmos; }

bool is_source(DeviceKind k) {
    return k == DeviceKind::Supply || k == DeviceKind::Ground || k == DeviceKind::Bias;
}

std::size_t kind_slot(DeviceKind k) { return info(k).slot; }

// ---------------------------------------------------------------------------

Topology::Topology(std::string name, std::vector<DeviceNode> nodes,
                   std::vector<std::pair<std::size_t, std::size_t>> edges)
    : name_(std::move(name)), nodes_(std::move(nodes)) {
    const std::size_t n = nodes_.size();
    if (n == 0) throw NetlistError("netlist has no devices");

    std::set<std::string> ids;
    std::size_t grounds = 0;
    offsets_.reserve(n + 1);
    offsets_.push_back(0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& d = nodes_[i];
        if (!ids.insert(d.id).second) throw NetlistError("duplicate device id '" + d.id + "'");
        if (d.kind == DeviceKind::Ground) ++grounds;
        if (d.param_names.size() != d.initial.size() || d.tunable.size() != d.initial.size())
            throw NetlistError("device '" + d.id + "': inconsistent parameter arrays");
        for (std::size_t e = 0; e < d.initial.size(); ++e) {
            if (!d.tunable[e]) continue;
            const auto& t = *d.tunable[e];
            if (t.min > t.max) throw NetlistError("device '" + d.id + "': bounds with min > max");
            if (!(t.step > 0.0)) throw NetlistError("device '" + d.id + "': step must be positive");
            if (d.initial[e] < t.min || d.initial[e] > t.max)
                throw NetlistError("device '" + d.id + "': initial value outside bounds");
            param_index_.push_back({i, e});
        }
        offsets_.push_back(offsets_.back() + d.initial.size());
    }
    if (grounds != 1) throw NetlistError("netlist must contain exactly one ground node");

    std::set<std::pair<std::size_t, std::size_t>> uniq;
    for (auto [a, b] : edges) {
        if (a >= n || b >= n) throw NetlistError("edge references a missing device");
        if (a == b) throw NetlistError("self-loop on device '" + nodes_[a].id + "'");
        uniq.insert({std::min(a, b), std::max(a, b)});
    }
    edges_.assign(uniq.begin(), uniq.end());

    adjacency_ = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (auto [a, b] : edges_) {
        adjacency_(a, b) = 1.0;
        adjacency_(b, a) = 1.0;
    }

    // Connectivity by BFS from node 0.
    std::vector<bool> seen(n, false);
    std::vector<std::size_t> queue{0};
    seen[0] = true;
    for (std::size_t q = 0; q < queue.size(); ++q) {
        const std::size_t u = queue[q];
        for (std::size_t v = 0; v < n; ++v)
            if (adjacency_(u, v) != 0.0 && !seen[v]) {
                seen[v] = true;
                queue.push_back(v);
            }
    }
    if (queue.size() != n) throw NetlistError("circuit graph is disconnected");
}

const TunableSpec& Topology::tunable(std::size_t k) const {
    const auto& r = param_index_.at(k);
    return *nodes_[r.node].tunable[r.entry];
}

std::optional<std::size_t> Topology::find(std::string_view id) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].id == id) return i;
    return std::nullopt;
}

std::size_t Topology::index_of(std::string_view id) const {
    auto i = find(id);
    if (!i) throw NetlistError("no device '" + std::string(id) + "' in " + name_);
    return *i;
}

std::string Topology::param_label(std::size_t k) const {
    const auto& r = param_index_.at(k);
    return nodes_[r.node].id + "." + nodes_[r.node].param_names[r.entry];
}

// ---------------------------------------------------------------------------

CircuitGraph::CircuitGraph(std::shared_ptr<const Topology> topology) : topology_(std::move(topology)) {
    values_.reserve(topology_->num_slots());
    for (const auto& d : topology_->nodes()) values_.insert(values_.end(), d.initial.begin(), d.initial.end());
}

double CircuitGraph::value(std::string_view id, std::string_view entry) const {
    const std::size_t i = topology_->index_of(id);
    const auto& names = topology_->node(i).param_names;
    auto it = std::find(names.begin(), names.end(), entry);
    if (it == names.end())
        throw NetlistError("device '" + std::string(id) + "' has no parameter '" + std::string(entry) + "'");
    return value(i, static_cast<std::size_t>(it - names.begin()));
}

std::span<const double> CircuitGraph::node_values(std::size_t node) const {
    const std::size_t off = topology_->slot_offset(node);
    return {values_.data() + off, topology_->slot_offset(node + 1) - off};
}

double CircuitGraph::param(std::size_t k) const {
    const auto& r = topology_->param_index().at(k);
    return values_[topology_->slot_offset(r.node) + r.entry];
}

std::vector<double> CircuitGraph::parameters() const {
    std::vector<double> p(num_params());
    for (std::size_t k = 0; k < p.size(); ++k) p[k] = param(k);
    return p;
}

CircuitGraph CircuitGraph::with_parameters(std::span<const double> values) const {
    if (values.size() != num_params()) throw std::invalid_argument("with_parameters: expected " +
                                                                  std::to_string(num_params()) + " values");
    CircuitGraph out = *this;
    for (std::size_t k = 0; k < values.size(); ++k) {
        const auto& t = topology_->tunable(k);
        if (!(values[k] >= t.min && values[k] <= t.max))
            throw std::invalid_argument("with_parameters: " + topology_->param_label(k) + " out of bounds");
        const auto& r = topology_->param_index()[k];
        out.values_[topology_->slot_offset(r.node) + r.entry] = values[k];
    }
    return out;
}

// ---------------------------------------------------------------------------

CircuitGraph load_netlist(const nlohmann::json& doc) {
    try {
        if (!doc.is_object()) throw NetlistError("netlist must be a JSON object");
        const auto name = doc.at("name").get<std::string>();
        std::vector<DeviceNode> nodes;
        for (const auto& dj : doc.at("devices")) {
            DeviceNode d;
            d.id = dj.at("id").get<std::string>();
            d.kind = parse_kind(dj.at("kind").get<std::string>());
            d.param_names = info(d.kind).params;
            d.initial.assign(d.param_names.size(), 0.0);
            d.tunable.assign(d.param_names.size(), std::nullopt);
            std::vector<bool> given(d.param_names.size(), false);

            auto slot_of = [&](const std::string& pname) {
                auto it = std::find(d.param_names.begin(), d.param_names.end(), pname);
                if (it == d.param_names.end())
                    throw NetlistError("device '" + d.id + "' (" + std::string(to_string(d.kind)) +
                                       ") has no parameter '" + pname + "'");
                return static_cast<std::size_t>(it - d.param_names.begin());
            };

            if (dj.contains("params")) {
                for (const auto& [pname, pv] : dj.at("params").items()) {
                    const std::size_t e = slot_of(pname);
                    d.initial[e] = pv.get<double>();
                    given[e] = true;
                }
            }
            if (dj.contains("tunable")) {
                for (const auto& tj : dj.at("tunable")) {
                    const std::size_t e = slot_of(tj.at("name").get<std::string>());
                    TunableSpec t;
                    t.min = tj.at("min").get<double>();
                    t.max = tj.at("max").get<double>();
                    t.step = tj.at("step").get<double>();
                    t.integer = tj.value("integer", d.param_names[e] == "f");
                    if (t.min > t.max) throw NetlistError("device '" + d.id + "': bounds with min > max");
                    if (tj.contains("init")) {
                        d.initial[e] = tj.at("init").get<double>();
                    } else {
                        // Midpoint start; integer parameters round down.
                        double mid = 0.5 * (t.min + t.max);
                        d.initial[e] = t.integer ? std::floor(mid) : mid;
                    }
                    d.tunable[e] = t;
                    given[e] = true;
                }
            }
            for (std::size_t e = 0; e < given.size(); ++e)
                if (!given[e])
                    throw NetlistError("device '" + d.id + "': parameter '" + d.param_names[e] + "' not set");
            nodes.push_back(std::move(d));
        }

        std::vector<std::pair<std::size_t, std::size_t>> edges;
        auto index = [&](const std::string& id) {
            for (std::size_t i = 0; i < nodes.size(); ++i)
                if (nodes[i].id == id) return i;
            throw NetlistError("edge references unknown device '" + id + "'");
        };
        for (const auto& ej : doc.at("edges")) {
            if (!ej.is_array() || ej.size() != 2) throw NetlistError("edge must be a pair of device ids");
            edges.emplace_back(index(ej[0].get<std::string>()), index(ej[1].get<std::string>()));
        }
        return CircuitGraph(std::make_shared<const Topology>(name, std::move(nodes), std::move(edges)));
    } catch (const nlohmann::json::exception& e) {
        throw NetlistError(std::string("malformed netlist: ") + e.what());
    }
}

CircuitGraph load_netlist_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw NetlistError("cannot open netlist " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw NetlistError("malformed netlist " + path.string() + ": " + e.what());
    }
    return load_netlist(doc);
}

// ---------------------------------------------------------------------------

Matrix node_features(const CircuitGraph& g, const NormalizationScheme& norm) {
    const auto& topo = g.topology();
    const std::size_t n = topo.num_nodes();
    Matrix x = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(kNumKinds + kMaxNodeParams));
    for (std::size_t i = 0; i < n; ++i) {
        const auto& d = topo.node(i);
        const auto row = static_cast<Eigen::Index>(i);
        x(row, static_cast<Eigen::Index>(kind_slot(d.kind))) = 1.0;
        const auto vals = g.node_values(i);
        for (std::size_t e = 0; e < vals.size(); ++e) {
            double v;
            if (d.tunable[e]) {
                const auto& t = *d.tunable[e];
                v = t.max > t.min ? (vals[e] - t.min) / (t.max - t.min) : 0.0;
            } else if (d.kind == DeviceKind::Supply || d.kind == DeviceKind::Bias) {
                v = vals[e] / norm.voltage_scale;
            } else if (is_transistor(d.kind)) {
                v = vals[e] / (d.param_names[e] == "w" ? 100.0 : 32.0);
            } else {
                auto it = norm.fixed_scale.find(d.kind);
                v = it == norm.fixed_scale.end() ? vals[e] : vals[e] / it->second;
            }
            x(row, static_cast<Eigen::Index>(kNumKinds + e)) = v;
        }
    }
    return x;
}

Matrix normalized_adjacency(const Topology& t) {
    const auto n = static_cast<Eigen::Index>(t.num_nodes());
    Matrix a = t.adjacency() + Matrix::Identity(n, n);
    Eigen::VectorXd dinv(n);
    for (Eigen::Index i = 0; i < n; ++i) dinv(i) = 1.0 / std::sqrt(a.row(i).sum());
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) a(i, j) *= dinv(i) * dinv(j);
    return a;
}

CircuitGraph apply_action(const CircuitGraph& g, std::span<const int> action) {
    const std::size_t m = g.num_params();
    if (action.size() != m)
        throw std::invalid_argument("apply_action: expected " + std::to_string(m) + " entries, got " +
                                    std::to_string(action.size()));
    std::vector<double> p = g.parameters();
    for (std::size_t k = 0; k < m; ++k) {
        const int a = action[k];
        if (a < -1 || a > 1) throw std::invalid_argument("apply_action: entries must be in {-1, 0, +1}");
        if (a == 0) continue;
        const auto& t = g.topology().tunable(k);
        p[k] = std::clamp(p[k] + a * t.step, t.min, t.max);
    }
    return g.with_parameters(p);
}

std::shared_ptr<const Topology> permute_topology(const Topology& t, std::span<const std::size_t> order) {
    const std::size_t n = t.num_nodes();
    if (order.size() != n) throw std::invalid_argument("permute_topology: order size mismatch");
    std::vector<std::size_t> where(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        if (order[i] >= n || where[order[i]] != n) throw std::invalid_argument("permute_topology: not a permutation");
        where[order[i]] = i;
    }
    std::vector<DeviceNode> nodes;
    nodes.reserve(n);
    for (std::size_t i = 0; i < n; ++i) nodes.push_back(t.node(order[i]));
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (auto [a, b] : t.edges()) edges.emplace_back(where[a], where[b]);
    return std::make_shared<const Topology>(t.name(), std::move(nodes), std::move(edges));
}

CircuitGraph permute_graph(const CircuitGraph& g, const std::shared_ptr<const Topology>& permuted,
                           std::span<const std::size_t> order) {
    CircuitGraph out(permuted);
    std::vector<double> p(permuted->num_params());
    for (std::size_t k = 0; k < p.size(); ++k) {
        const auto& r = permuted->param_index()[k];
        p[k] = g.value(order[r.node], r.entry);
    }
    return out.with_parameters(p);
}

}  // namespace anasizer
