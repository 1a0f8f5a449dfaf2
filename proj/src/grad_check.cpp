#include "anasizer/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "anasizer/nets.hpp"

namespace anasizer {

using ad::Tensor;

namespace {

// Smooth functions bend by ~h |f''| / |f'| ~ 1e-6 over the step; a crossed kink
// bends by roughly the relative error it causes.
constexpr double kKinkRatio = 0.5 * kGradTolerance;
constexpr int kMaxRedraws = 20;


Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
    return m;
}

double weighted_sum(const TensorFn& f, const std::vector<Matrix>& inputs, const Matrix& w) {
    std::vector<Tensor> xs;
    for (const auto& m : inputs) xs.push_back(Tensor::constant(m));
    const Matrix out = f(xs).value();
    return (out.array() * w.array()).sum();
}

}  // namespace

GradProbe directional_grad_probe(const TensorFn& f, const std::vector<Matrix>& inputs, Rng& rng, double h) {
    std::vector<Tensor> xs;
    for (const auto& m : inputs) xs.push_back(Tensor::variable(m));
    const Tensor out = f(xs);
    const Matrix w = random_matrix(out.value().rows(), out.value().cols(), rng);
    ad::backward(ad::sum(ad::mul(out, Tensor::constant(w))));

    std::vector<Matrix> dirs;
    double analytic = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        dirs.push_back(random_matrix(inputs[i].rows(), inputs[i].cols(), rng));
        if (xs[i].grad().size()) analytic += (xs[i].grad().array() * dirs[i].array()).sum();
    }
    std::vector<Matrix> plus = inputs, minus = inputs;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        plus[i] += h * dirs[i];
        minus[i] -= h * dirs[i];
    }
    const double fp = weighted_sum(f, plus, w), f0 = weighted_sum(f, inputs, w), fm = weighted_sum(f, minus, w);
    const double numeric = (fp - fm) / (2.0 * h);
    GradProbe p;
    p.rel_error = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    const double bend = std::abs((fp - f0) - (f0 - fm));
    p.kinked = bend > kKinkRatio * std::max(std::abs(fp - f0) + std::abs(f0 - fm), 1e-300);
    return p;
}

double directional_grad_error(const TensorFn& f, const std::vector<Matrix>& inputs, Rng& rng, double h) {
    return directional_grad_probe(f, inputs, rng, h).rel_error;
}

namespace {

struct OpCase {
    std::string name;
    std::function<std::pair<TensorFn, std::vector<Matrix>>(Rng&)> make;
};

Eigen::Index dim(Rng& rng) { return static_cast<Eigen::Index>(rng.between(1, 5)); }

// Keeps samples away from kinks so the finite difference sees one branch.
Matrix away_from(Matrix m, double kink, double gap) {
    for (Eigen::Index i = 0; i < m.size(); ++i)
        if (std::abs(m.data()[i] - kink) < gap) m.data()[i] = kink + (m.data()[i] < kink ? -gap : gap);
    return m;
}

std::vector<OpCase> op_cases() {
    auto unary = [](std::string name, std::function<Tensor(const Tensor&)> op, double lo = -2.0, double hi = 2.0,
                    std::vector<double> kinks = {}) {
        return OpCase{name, [=](Rng& rng) {
                          Matrix x = random_matrix(dim(rng), dim(rng), rng, lo, hi);
                          for (double k : kinks) x = away_from(x, k, 1e-3);
                          return std::pair{TensorFn([=](std::span<const Tensor> v) { return op(v[0]); }),
                                           std::vector<Matrix>{x}};
                      }};
    };
    auto binary = [](std::string name, std::function<Tensor(const Tensor&, const Tensor&)> op) {
        return OpCase{name, [=](Rng& rng) {
                          const auto r = dim(rng), c = dim(rng);
                          return std::pair{TensorFn([=](std::span<const Tensor> v) { return op(v[0], v[1]); }),
                                           std::vector<Matrix>{random_matrix(r, c, rng), random_matrix(r, c, rng)}};
                      }};
    };

    std::vector<OpCase> cases;
    cases.push_back({"matmul", [](Rng& rng) {
                         const auto a = dim(rng), b = dim(rng), c = dim(rng);
                         return std::pair{TensorFn([](std::span<const Tensor> v) { return ad::matmul(v[0], v[1]); }),
                                          std::vector<Matrix>{random_matrix(a, b, rng), random_matrix(b, c, rng)}};
                     }});
    cases.push_back(binary("add", [](const Tensor& a, const Tensor& b) { return ad::add(a, b); }));
    cases.push_back(binary("sub", [](const Tensor& a, const Tensor& b) { return ad::sub(a, b); }));
    cases.push_back(binary("mul", [](const Tensor& a, const Tensor& b) { return ad::mul(a, b); }));
    cases.push_back({"minimum", [](Rng& rng) {
                         const auto r = dim(rng), c = dim(rng);
                         Matrix a = random_matrix(r, c, rng);
                         Matrix b = a + away_from(random_matrix(r, c, rng), 0.0, 1e-3);
                         return std::pair{TensorFn([](std::span<const Tensor> v) { return ad::minimum(v[0], v[1]); }),
                                          std::vector<Matrix>{a, b}};
                     }});
    cases.push_back(unary("scale", [](const Tensor& a) { return ad::scale(a, -1.7); }));
    cases.push_back(unary("add_scalar", [](const Tensor& a) { return ad::add_scalar(a, 0.3); }));
    cases.push_back({"add_row", [](Rng& rng) {
                         const auto r = dim(rng), c = dim(rng);
                         return std::pair{TensorFn([](std::span<const Tensor> v) { return ad::add_row(v[0], v[1]); }),
                                          std::vector<Matrix>{random_matrix(r, c, rng), random_matrix(1, c, rng)}};
                     }});
    cases.push_back({"repeat_rows", [](Rng& rng) {
                         const auto n = dim(rng);
                         return std::pair{
                             TensorFn([n](std::span<const Tensor> v) { return ad::repeat_rows(v[0], n); }),
                             std::vector<Matrix>{random_matrix(1, dim(rng), rng)}};
                     }});
    cases.push_back({"concat_rows", [](Rng& rng) {
                         const auto c = dim(rng);
                         return std::pair{
                             TensorFn([](std::span<const Tensor> v) { return ad::concat_rows({v[0], v[1]}); }),
                             std::vector<Matrix>{random_matrix(dim(rng), c, rng), random_matrix(dim(rng), c, rng)}};
                     }});
    cases.push_back({"concat_cols", [](Rng& rng) {
                         const auto r = dim(rng);
                         return std::pair{
                             TensorFn([](std::span<const Tensor> v) { return ad::concat_cols({v[0], v[1]}); }),
                             std::vector<Matrix>{random_matrix(r, dim(rng), rng), random_matrix(r, dim(rng), rng)}};
                     }});
    cases.push_back(unary("relu", [](const Tensor& a) { return ad::relu(a); }, -2, 2, {0.0}));
    cases.push_back(unary("tanh", [](const Tensor& a) { return ad::tanh(a); }));
    cases.push_back(unary("leaky_relu", [](const Tensor& a) { return ad::leaky_relu(a, 0.2); }, -2, 2, {0.0}));
    cases.push_back(unary("elu", [](const Tensor& a) { return ad::elu(a); }, -2, 2, {0.0}));
    cases.push_back(unary("exp", [](const Tensor& a) { return ad::exp(a); }));
    cases.push_back(unary("log", [](const Tensor& a) { return ad::log(a); }, 0.2, 3.0));
    cases.push_back(unary("clamp", [](const Tensor& a) { return ad::clamp(a, -0.8, 0.9); }, -2, 2, {-0.8, 0.9}));
    cases.push_back(unary("row_softmax", [](const Tensor& a) { return ad::row_softmax(a); }));
    cases.push_back(unary("row_log_softmax", [](const Tensor& a) { return ad::row_log_softmax(a); }));
    cases.push_back(unary("mean_rows", [](const Tensor& a) { return ad::mean_rows(a); }));
    cases.push_back(unary("sum", [](const Tensor& a) { return ad::sum(a); }));
    cases.push_back(unary("mean", [](const Tensor& a) { return ad::mean(a); }));
    cases.push_back({"gather_rows", [](Rng& rng) {
                         const auto r = dim(rng);
                         std::vector<int> rows;
                         for (int i = 0; i < 6; ++i) rows.push_back(static_cast<int>(rng.below(static_cast<std::size_t>(r))));
                         return std::pair{
                             TensorFn([rows](std::span<const Tensor> v) { return ad::gather_rows(v[0], rows); }),
                             std::vector<Matrix>{random_matrix(r, dim(rng), rng)}};
                     }});
    cases.push_back({"reshape", [](Rng& rng) {
                         const auto r = dim(rng), c = dim(rng);
                         return std::pair{TensorFn([r, c](std::span<const Tensor> v) { return ad::reshape(v[0], c, r); }),
                                          std::vector<Matrix>{random_matrix(r, c, rng)}};
                     }});
    cases.push_back({"pick", [](Rng& rng) {
                         const auto r = dim(rng), c = dim(rng);
                         std::vector<int> cols;
                         for (Eigen::Index i = 0; i < r; ++i) cols.push_back(static_cast<int>(rng.below(static_cast<std::size_t>(c))));
                         return std::pair{TensorFn([cols](std::span<const Tensor> v) { return ad::pick(v[0], cols); }),
                                          std::vector<Matrix>{random_matrix(r, c, rng)}};
                     }});
    cases.push_back({"attention", [](Rng& rng) {
                         const auto n = dim(rng) + 1;
                         Matrix mask = Matrix::Identity(n, n);
                         for (Eigen::Index i = 0; i < n; ++i)
                             for (Eigen::Index j = i + 1; j < n; ++j)
                                 if (rng.uniform() < 0.5) mask(i, j) = mask(j, i) = 1.0;
                         // Keep src_i + dst_j off the leaky-relu kink.
                         Matrix src = away_from(random_matrix(n, 1, rng, 0.0, 1.0), 0.0, 1e-3);
                         Matrix dst = random_matrix(n, 1, rng, 0.0, 1.0);
                         return std::pair{TensorFn([mask](std::span<const Tensor> v) {
                                              return ad::attention(v[0], v[1], mask, 0.2);
                                          }),
                                          std::vector<Matrix>{src, dst}};
                     }});
    cases.push_back({"gcn_layer", [](Rng& rng) {
                         const auto n = dim(rng), d = dim(rng), e = dim(rng);
                         Matrix adj = random_matrix(n, n, rng, 0.0, 1.0);
                         adj = 0.5 * (adj + adj.transpose()).eval();
                         return std::pair{TensorFn([adj](std::span<const Tensor> v) {
                                              return gcn_layer(v[0], Tensor::constant(adj), v[1]);
                                          }),
                                          std::vector<Matrix>{random_matrix(n, d, rng), random_matrix(d, e, rng)}};
                     }});
    cases.push_back({"gat_layer", [](Rng& rng) {
                         const auto n = dim(rng) + 1, d = dim(rng), e = dim(rng);
                         Matrix mask = Matrix::Identity(n, n);
                         for (Eigen::Index i = 0; i + 1 < n; ++i) mask(i, i + 1) = mask(i + 1, i) = 1.0;
                         std::vector<Matrix> in{random_matrix(n, d, rng)};
                         for (int k = 0; k < 2; ++k) {
                             in.push_back(random_matrix(d, e, rng));
                             in.push_back(random_matrix(e, 1, rng));
                             in.push_back(random_matrix(e, 1, rng));
                         }
                         return std::pair{TensorFn([mask](std::span<const Tensor> v) {
                                              const GatHead heads[] = {{v[1], v[2], v[3]}, {v[4], v[5], v[6]}};
                                              return gat_layer(v[0], mask, heads);
                                          }),
                                          in};
                     }});
    return cases;
}

}  // namespace

std::vector<GradCheckResult> check_ops(int trials, std::uint64_t seed) {
    std::vector<GradCheckResult> out;
    for (const auto& c : op_cases()) {
        Rng rng = Rng::stream(seed, "grad-check/" + c.name);
        GradCheckResult r{c.name, trials, 0, 0.0};
        for (int t = 0; t < trials; ++t) {
            auto [f, inputs] = c.make(rng);
            r.max_rel_error = std::max(r.max_rel_error, directional_grad_error(f, inputs, rng));
        }
        out.push_back(r);
    }
    return out;
}

std::vector<GradCheckResult> check_networks(const std::shared_ptr<const Benchmark>& bench, int trials,
                                            std::uint64_t seed) {
    std::vector<GradCheckResult> out;
    const CircuitEnv env(bench, Fidelity::Fine);
    for (Variant v : {Variant::GcnFc, Variant::GatFc, Variant::BaselineA, Variant::BaselineBGcn, Variant::BaselineBGat}) {
        for (NetRole role : {NetRole::Policy, NetRole::Value}) {
            const std::string name =
                std::string(to_string(v)) + (role == NetRole::Policy ? "/policy" : "/value");
            Rng rng = Rng::stream(seed, "grad-check/" + name);
            GradCheckResult r{name, trials, 0, 0.0};
            for (int t = 0; t < trials; ++t) {
                const Agent agent(bench, v, rng.derive_seed());
                const Topology& topo = *bench->topology;
                std::vector<double> p(topo.num_params());
                for (std::size_t k = 0; k < p.size(); ++k)
                    p[k] = rng.uniform(topo.tunable(k).min, topo.tunable(k).max);
                const EnvState s = env.reset(env.sample_goal(rng), bench->initial().with_parameters(p));
                const Observation obs = agent.observe(s);
                const Network& net = role == NetRole::Policy ? agent.policy() : agent.value();
                const TensorFn f = [&](std::span<const Tensor> params) {
                    Tensor y = net.forward(obs, params);
                    return role == NetRole::Policy ? ad::row_log_softmax(y) : y;
                };
                GradProbe probe = directional_grad_probe(f, net.params(), rng);
                for (int k = 0; probe.kinked && k < kMaxRedraws; ++k) {
                    ++r.resampled;
                    probe = directional_grad_probe(f, net.params(), rng);
                }
                r.max_rel_error = std::max(r.max_rel_error, probe.rel_error);
            }
            out.push_back(r);
        }
    }
    return out;
}

}  // namespace anasizer
