#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "anasizer/adam.hpp"
#include "anasizer/observation.hpp"
#include "anasizer/rng.hpp"
#include "anasizer/tensor.hpp"

namespace anasizer {

/// Layer sizes shared by the policy and value networks of one agent.
struct ArchDescriptor {
    int graph_layers = 2;
    int graph_width = 32;  // GCN output width; GAT: heads * head_width
    int gat_heads = 4;
    int fc_layers = 2;
    int fc_hidden = 64;
    int head_hidden = 128;
    int baseline_hidden = 128;  // feed-forward baseline

    int feature_dim = 0;
    int spec_dim = 0;
    int num_params = 0;

    friend bool operator==(const ArchDescriptor&, const ArchDescriptor&) = default;
};

nlohmann::json to_json(const ArchDescriptor& d);
ArchDescriptor descriptor_from_json(const nlohmann::json& j);

enum class NetRole { Policy, Value };

// Graph layers on their own, so tests can check them directly.
/// relu(adjacency * h * w)
ad::Tensor gcn_layer(const ad::Tensor& h, const ad::Tensor& adjacency, const ad::Tensor& w);

struct GatHead {
    ad::Tensor w;        // d x d'
    ad::Tensor att_src;  // d' x 1
    ad::Tensor att_dst;  // d' x 1
};
/// Multi-head attention layer; heads are concatenated column-wise.
ad::Tensor gat_layer(const ad::Tensor& h, const Matrix& mask, std::span<const GatHead> heads,
                     double alpha = 0.2, std::vector<Matrix>* attention_out = nullptr);

/// Learnable parameters of one network plus its forward pass.
class Network {
public:
    Network(Variant variant, NetRole role, const ArchDescriptor& arch, Rng& init);

    Variant variant() const { return variant_; }
    NetRole role() const { return role_; }
    const ArchDescriptor& arch() const { return arch_; }

    const std::vector<std::string>& names() const { return names_; }
    const std::vector<Matrix>& params() const { return params_; }
    std::vector<Matrix>& params() { return params_; }
    std::size_t count() const;  // scalar parameter count
    /// Shapes of everything except the final output layer.
    std::vector<std::pair<Eigen::Index, Eigen::Index>> trunk_shapes() const;

    /// Binds parameters as graph leaves (variables) or constants.
    std::vector<ad::Tensor> bind(bool trainable) const;

    /// Policy: M x 3 logits. Value: 1 x 1.
    ad::Tensor forward(const Observation& obs, std::span<const ad::Tensor> bound) const;

private:
    std::size_t add(std::string name, Eigen::Index rows, Eigen::Index cols, Rng& init, bool zero = false);

    Variant variant_;
    NetRole role_;
    ArchDescriptor arch_;
    std::vector<std::string> names_;
    std::vector<Matrix> params_;
};

/// Column 0: decrease, 1: keep, 2: increase.
inline constexpr int kDecrease = 0, kKeep = 1, kIncrease = 2;
inline int column_to_step(int c) { return c - 1; }
inline int step_to_column(int a) { return a + 1; }

struct ActionMatrix {
    Matrix probs;             // M x 3, rows sum to 1
    std::vector<int> action;  // entries in {-1, 0, +1}
    double log_prob = 0.0;    // sum over rows of log p_k[a_k]
};

/// Independent categorical draw per row. Throws std::invalid_argument if a row
/// does not sum to 1 within 1e-9.
ActionMatrix sample_action(const Matrix& probs, Rng& rng);
/// Per-row argmax, ties resolved toward "keep".
ActionMatrix greedy_action(const Matrix& probs);
double action_log_prob(const Matrix& probs, std::span<const int> action);
/// Sum over rows of the categorical entropy.
double entropy(const Matrix& probs);

class BenchmarkMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Policy and value networks for one benchmark; separate parameters, equal trunks.
class Agent {
public:
    Agent(std::shared_ptr<const Benchmark> bench, Variant variant, std::uint64_t seed, ArchDescriptor arch = {});

    Variant variant() const { return encoder_.variant(); }
    const Benchmark& benchmark() const { return encoder_.benchmark(); }
    const ObservationEncoder& encoder() const { return encoder_; }
    const ArchDescriptor& arch() const { return policy_.arch(); }

    Network& policy() { return policy_; }
    const Network& policy() const { return policy_; }
    Network& value() { return value_; }
    const Network& value() const { return value_; }
    Adam& optimizer() { return adam_; }
    const Adam& optimizer() const { return adam_; }

    /// Must be called after parameters change so inference sees new values.
    void refresh();

    Observation observe(const EnvState& s) const { return encoder_.encode(s); }
    Matrix policy_probs(const Observation& obs) const;
    Matrix policy_probs(const EnvState& s) const { return policy_probs(observe(s)); }
    double value_estimate(const Observation& obs) const;
    double value_estimate(const EnvState& s) const { return value_estimate(observe(s)); }
    double log_prob(const EnvState& s, std::span<const int> action) const;

    /// All parameters, policy first.
    std::vector<Matrix*> parameter_refs();

    /// Throws BenchmarkMismatch unless the agent was built for `name` with matching M.
    void check_benchmark(const Benchmark& b) const;

private:
    ObservationEncoder encoder_;
    Network policy_;
    Network value_;
    Adam adam_;
    std::vector<ad::Tensor> policy_const_;
    std::vector<ad::Tensor> value_const_;
};

}  // namespace anasizer
