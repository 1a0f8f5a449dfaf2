#include "anasizer/nets.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

namespace anasizer {

using ad::Tensor;

nlohmann::json to_json(const ArchDescriptor& d) {
    return {{"graph_layers", d.graph_layers}, {"graph_width", d.graph_width}, {"gat_heads", d.gat_heads},
            {"fc_layers", d.fc_layers},       {"fc_hidden", d.fc_hidden},     {"head_hidden", d.head_hidden},
            {"baseline_hidden", d.baseline_hidden}, {"feature_dim", d.feature_dim}, {"spec_dim", d.spec_dim},
            {"num_params", d.num_params}};
}

ArchDescriptor descriptor_from_json(const nlohmann::json& j) {
    ArchDescriptor d;
    d.graph_layers = j.at("graph_layers").get<int>();
    d.graph_width = j.at("graph_width").get<int>();
    d.gat_heads = j.at("gat_heads").get<int>();
    d.fc_layers = j.at("fc_layers").get<int>();
    d.fc_hidden = j.at("fc_hidden").get<int>();
    d.head_hidden = j.at("head_hidden").get<int>();
    d.baseline_hidden = j.at("baseline_hidden").get<int>();
    d.feature_dim = j.at("feature_dim").get<int>();
    d.spec_dim = j.at("spec_dim").get<int>();
    d.num_params = j.at("num_params").get<int>();
    return d;
}

Tensor gcn_layer(const Tensor& h, const Tensor& adjacency, const Tensor& w) {
    return ad::relu(ad::matmul(adjacency, ad::matmul(h, w)));
}

Tensor gat_layer(const Tensor& h, const Matrix& mask, std::span<const GatHead> heads, double alpha,
                 std::vector<Matrix>* attention_out) {
    std::vector<Tensor> outs;
    outs.reserve(heads.size());
    for (const auto& head : heads) {
        Tensor wh = ad::matmul(h, head.w);
        Tensor att = ad::attention(ad::matmul(wh, head.att_src), ad::matmul(wh, head.att_dst), mask, alpha);
        if (attention_out) attention_out->push_back(att.value());
        outs.push_back(ad::elu(ad::matmul(att, wh)));
    }
    return outs.size() == 1 ? outs[0] : ad::concat_cols(outs);
}

// ---------------------------------------------------------------------------

std::size_t Network::add(std::string name, Eigen::Index rows, Eigen::Index cols, Rng& init, bool zero) {
    Matrix m(rows, cols);
    const double bound = std::sqrt(1.0 / static_cast<double>(rows));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = zero ? 0.0 : init.uniform(-bound, bound);
    names_.push_back(std::move(name));
    params_.push_back(std::move(m));
    return params_.size() - 1;
}

Network::Network(Variant variant, NetRole role, const ArchDescriptor& arch, Rng& init)
    : variant_(variant), role_(role), arch_(arch) {
    const bool policy = role == NetRole::Policy;
    if (variant == Variant::BaselineA) {
        Eigen::Index in = arch.spec_dim;
        for (int i = 0; i < arch.fc_layers; ++i) {
            add("mlp" + std::to_string(i) + ".w", in, arch.baseline_hidden, init);
            add("mlp" + std::to_string(i) + ".b", 1, arch.baseline_hidden, init, true);
            in = arch.baseline_hidden;
        }
        add("out.w", in, policy ? 3 * arch.num_params : 1, init);
        add("out.b", 1, policy ? 3 * arch.num_params : 1, init, true);
        return;
    }

    Eigen::Index in = arch.feature_dim;
    for (int l = 0; l < arch.graph_layers; ++l) {
        const std::string p = "g" + std::to_string(l);
        if (uses_gat(variant)) {
            if (arch.graph_width % arch.gat_heads != 0) throw std::invalid_argument("graph_width must divide by gat_heads");
            const Eigen::Index hw = arch.graph_width / arch.gat_heads;
            for (int h = 0; h < arch.gat_heads; ++h) {
                const std::string q = p + ".h" + std::to_string(h);
                add(q + ".w", in, hw, init);
                add(q + ".a_src", hw, 1, init);
                add(q + ".a_dst", hw, 1, init);
            }
        } else {
            add(p + ".w", in, arch.graph_width, init);
        }
        in = arch.graph_width;
    }

    Eigen::Index z = arch.graph_width;
    if (variant == Variant::GcnFc || variant == Variant::GatFc) {
        Eigen::Index fin = arch.spec_dim;
        for (int i = 0; i < arch.fc_layers; ++i) {
            add("fc" + std::to_string(i) + ".w", fin, arch.fc_hidden, init);
            add("fc" + std::to_string(i) + ".b", 1, arch.fc_hidden, init, true);
            fin = arch.fc_hidden;
        }
        z += fin;
    } else {
        z += arch.spec_dim;  // goal specs appended after pooling
    }

    add("head.wz", z, arch.head_hidden, init);
    add("head.b", 1, arch.head_hidden, init, true);
    if (policy) {
        add("head.wn", arch.graph_width, arch.head_hidden, init);
        add("head.ws", static_cast<Eigen::Index>(kMaxNodeParams), arch.head_hidden, init);
    }
    add("out.w", arch.head_hidden, policy ? 3 : 1, init);
    add("out.b", 1, policy ? 3 : 1, init, true);
}

std::size_t Network::count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += static_cast<std::size_t>(p.size());
    return n;
}

std::vector<std::pair<Eigen::Index, Eigen::Index>> Network::trunk_shapes() const {
    std::vector<std::pair<Eigen::Index, Eigen::Index>> out;
    for (std::size_t i = 0; i < params_.size(); ++i) {
        const auto& n = names_[i];
        if (n.starts_with("head.") || n.starts_with("out.")) continue;
        out.emplace_back(params_[i].rows(), params_[i].cols());
    }
    return out;
}

std::vector<Tensor> Network::bind(bool trainable) const {
    std::vector<Tensor> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(trainable ? Tensor::variable(p) : Tensor::constant(p));
    return out;
}

Tensor Network::forward(const Observation& obs, std::span<const Tensor> p) const {
    if (p.size() != params_.size()) throw std::invalid_argument("Network::forward: wrong number of bound parameters");
    const bool policy = role_ == NetRole::Policy;
    std::size_t i = 0;
    auto next = [&]() -> const Tensor& { return p[i++]; };

    if (variant_ == Variant::BaselineA) {
        Tensor x = Tensor::constant(obs.specs);
        for (int l = 0; l < arch_.fc_layers; ++l) {
            const Tensor& w = next();
            const Tensor& b = next();
            x = ad::relu(ad::add(ad::matmul(x, w), b));
        }
        const Tensor& w = next();
        const Tensor& b = next();
        Tensor out = ad::add(ad::matmul(x, w), b);
        return policy ? ad::reshape(out, arch_.num_params, 3) : out;
    }

    const ObservationLayout& layout = *obs.layout;
    Tensor h = Tensor::constant(obs.features);
    const Tensor adjacency = uses_gat(variant_) ? Tensor() : Tensor::constant(layout.adjacency);
    for (int l = 0; l < arch_.graph_layers; ++l) {
        if (uses_gat(variant_)) {
            std::vector<GatHead> heads;
            for (int k = 0; k < arch_.gat_heads; ++k) {
                const Tensor& w = next();
                const Tensor& a = next();
                const Tensor& d = next();
                heads.push_back({w, a, d});
            }
            h = gat_layer(h, layout.mask, heads);
        } else {
            h = gcn_layer(h, adjacency, next());
        }
    }
    Tensor pooled = ad::mean_rows(h);

    Tensor z;
    if (variant_ == Variant::GcnFc || variant_ == Variant::GatFc) {
        Tensor f = Tensor::constant(obs.specs);
        for (int l = 0; l < arch_.fc_layers; ++l) {
            const Tensor& w = next();
            const Tensor& b = next();
            f = ad::relu(ad::add(ad::matmul(f, w), b));
        }
        z = ad::concat_cols({pooled, f});
    } else {
        z = ad::concat_cols({pooled, Tensor::constant(obs.specs)});
    }

    const Tensor& wz = next();
    const Tensor& bz = next();
    Tensor global = ad::add(ad::matmul(z, wz), bz);
    if (!policy) {
        const Tensor& w = next();
        const Tensor& b = next();
        return ad::add(ad::matmul(ad::relu(global), w), b);
    }
    const Tensor& wn = next();
    const Tensor& ws = next();
    const Tensor& w = next();
    const Tensor& b = next();
    // One row per tunable parameter: its device's embedding, its entry slot and
    // the shared graph/spec context.
    Tensor per_node = ad::gather_rows(ad::matmul(h, wn), layout.param_node);
    Tensor per_slot = ad::matmul(Tensor::constant(layout.param_slot), ws);
    Tensor hidden = ad::relu(ad::add_row(ad::add(per_node, per_slot), global));
    return ad::add_row(ad::matmul(hidden, w), b);
}

// ---------------------------------------------------------------------------

namespace {

void check_rows(const Matrix& probs) {
    if (probs.cols() != 3) throw std::invalid_argument("action matrix must have 3 columns");
    for (Eigen::Index r = 0; r < probs.rows(); ++r)
        if (std::abs(probs.row(r).sum() - 1.0) > 1e-9 || probs.row(r).minCoeff() < 0.0)
            throw std::invalid_argument("action matrix row " + std::to_string(r) + " is not a distribution");
}

}  // namespace

ActionMatrix sample_action(const Matrix& probs, Rng& rng) {
    check_rows(probs);
    ActionMatrix am;
    am.probs = probs;
    am.action.resize(static_cast<std::size_t>(probs.rows()));
    for (Eigen::Index r = 0; r < probs.rows(); ++r) {
        const double u = rng.uniform();
        int c = 2;
        double acc = 0.0;
        for (int k = 0; k < 2; ++k) {
            acc += probs(r, k);
            if (u < acc) {
                c = k;
                break;
            }
        }
        // Never pick a zero-probability column through rounding at the top end.
        while (probs(r, c) == 0.0 && c > 0) --c;
        am.action[static_cast<std::size_t>(r)] = column_to_step(c);
    }
    am.log_prob = action_log_prob(probs, am.action);
    return am;
}

ActionMatrix greedy_action(const Matrix& probs) {
    check_rows(probs);
    ActionMatrix am;
    am.probs = probs;
    am.action.resize(static_cast<std::size_t>(probs.rows()));
    for (Eigen::Index r = 0; r < probs.rows(); ++r) {
        int best = kKeep;
        for (int c : {kDecrease, kIncrease})
            if (probs(r, c) > probs(r, best)) best = c;
        am.action[static_cast<std::size_t>(r)] = column_to_step(best);
    }
    am.log_prob = action_log_prob(probs, am.action);
    return am;
}

double action_log_prob(const Matrix& probs, std::span<const int> action) {
    if (static_cast<Eigen::Index>(action.size()) != probs.rows())
        throw std::invalid_argument("action_log_prob: action length mismatch");
    double lp = 0.0;
    for (std::size_t k = 0; k < action.size(); ++k)
        lp += std::log(probs(static_cast<Eigen::Index>(k), step_to_column(action[k])));
    return lp;
}

double entropy(const Matrix& probs) {
    double h = 0.0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
        const double p = probs.data()[i];
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

// ---------------------------------------------------------------------------

namespace {

ArchDescriptor complete(ArchDescriptor arch, const ObservationEncoder& enc) {
    arch.feature_dim = static_cast<int>(enc.feature_dim());
    arch.spec_dim = static_cast<int>(enc.spec_dim());
    arch.num_params = static_cast<int>(enc.num_params());
    return arch;
}

Rng init_stream(std::uint64_t seed, const char* name) { return Rng::stream(seed, name); }

}  // namespace

Agent::Agent(std::shared_ptr<const Benchmark> bench, Variant variant, std::uint64_t seed, ArchDescriptor arch)
    : encoder_(std::move(bench), variant),
      policy_([&] {
          Rng r = init_stream(seed, "init-policy");
          return Network(variant, NetRole::Policy, complete(arch, encoder_), r);
      }()),
      value_([&] {
          Rng r = init_stream(seed, "init-value");
          return Network(variant, NetRole::Value, complete(arch, encoder_), r);
      }()) {
    refresh();
}

void Agent::refresh() {
    policy_const_ = policy_.bind(false);
    value_const_ = value_.bind(false);
}

Matrix Agent::policy_probs(const Observation& obs) const {
    return ad::row_softmax(policy_.forward(obs, policy_const_)).value();
}

double Agent::value_estimate(const Observation& obs) const { return value_.forward(obs, value_const_).item(); }

double Agent::log_prob(const EnvState& s, std::span<const int> action) const {
    return action_log_prob(policy_probs(s), action);
}

std::vector<Matrix*> Agent::parameter_refs() {
    std::vector<Matrix*> out;
    for (auto& p : policy_.params()) out.push_back(&p);
    for (auto& p : value_.params()) out.push_back(&p);
    return out;
}

void Agent::check_benchmark(const Benchmark& b) const {
    if (b.name != benchmark().name || b.num_params() != encoder_.num_params())
        throw BenchmarkMismatch("agent was built for '" + benchmark().name + "' (M=" +
                                std::to_string(encoder_.num_params()) + "), environment is '" + b.name +
                                "' (M=" + std::to_string(b.num_params()) + ")");
}

}  // namespace anasizer
