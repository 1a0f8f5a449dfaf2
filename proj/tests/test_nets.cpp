#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "anasizer/env.hpp"
#include "anasizer/nets.hpp"
#include "equivariance.hpp"

using namespace anasizer;
using ad::Tensor;

namespace {

std::shared_ptr<const Benchmark> bench(const char* name) {
    return std::make_shared<const Benchmark>(load_benchmark(name));
}

const Variant kAll[] = {Variant::GcnFc, Variant::GatFc, Variant::BaselineA, Variant::BaselineBGcn,
                        Variant::BaselineBGat};

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.uniform(-1, 1);
    return m;
}

EnvState random_state(const CircuitEnv& env, Rng& rng) {
    EnvState s = env.reset(env.sample_goal(rng));
    for (int i = 0; i < 5; ++i) {
        std::vector<int> a(env.num_params());
        for (auto& x : a) x = static_cast<int>(rng.below(3)) - 1;
        s.graph = apply_action(s.graph, a);
    }
    s.intermediate = env.evaluate(s.graph);
    return s;
}

}  // namespace

TEST(GcnLayer, SingleNodeIdentityWeight) {
    const Matrix h = (Matrix(1, 3) << 1.0, -2.0, 0.5).finished();
    const Tensor out = gcn_layer(Tensor::constant(h), Tensor::constant(Matrix::Identity(1, 1)),
                                 Tensor::constant(Matrix::Identity(3, 3)));
    EXPECT_EQ(out.value(), (Matrix(1, 3) << 1.0, 0.0, 0.5).finished());
}

TEST(GcnLayer, TwoNodePathEqualFeaturesGiveEqualRows) {
    Rng r(1);
    const Matrix row = random_matrix(1, 4, r);
    Matrix h(2, 4);
    h << row, row;
    const Matrix a = Matrix::Constant(2, 2, 0.5);
    const Matrix w = random_matrix(4, 3, r);
    const Matrix out = gcn_layer(Tensor::constant(h), Tensor::constant(a), Tensor::constant(w)).value();
    EXPECT_EQ(out.row(0), out.row(1));
    EXPECT_LT((out.row(0) - (row * w).cwiseMax(0.0)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(GcnLayer, PermutationEquivariant) {
    Rng r(2);
    const Matrix h = random_matrix(5, 4, r), w = random_matrix(4, 3, r);
    Matrix a = random_matrix(5, 5, r);
    a = (a + a.transpose()).eval();
    Eigen::PermutationMatrix<Eigen::Dynamic> p(5);
    p.indices() << 3, 0, 4, 1, 2;
    const Matrix ph = p * h, pa = p * a * p.transpose();
    const Matrix lhs = gcn_layer(Tensor::constant(ph), Tensor::constant(pa), Tensor::constant(w)).value();
    const Matrix rhs = p * gcn_layer(Tensor::constant(h), Tensor::constant(a), Tensor::constant(w)).value();
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(GatLayer, SingleNodeAttendsToItself) {
    Rng r(3);
    const Matrix h = random_matrix(1, 4, r);
    const GatHead head{Tensor::constant(random_matrix(4, 2, r)), Tensor::constant(random_matrix(2, 1, r)),
                       Tensor::constant(random_matrix(2, 1, r))};
    std::vector<Matrix> att;
    const Matrix out = gat_layer(Tensor::constant(h), Matrix::Ones(1, 1), std::span(&head, 1), 0.2, &att).value();
    ASSERT_EQ(att.size(), 1u);
    EXPECT_DOUBLE_EQ(att[0](0, 0), 1.0);
    const Matrix wh = h * head.w.value();
    for (Eigen::Index j = 0; j < 2; ++j) {
        const double x = wh(0, j);
        EXPECT_NEAR(out(0, j), x > 0 ? x : std::exp(x) - 1.0, 1e-15);
    }
}

TEST(GatLayer, IdenticalNeighborsGetUniformAttention) {
    Rng r(4);
    const Matrix row = random_matrix(1, 3, r);
    Matrix h(4, 3);
    for (int i = 0; i < 4; ++i) h.row(i) = row;
    Matrix mask = Matrix::Ones(4, 4);
    mask(0, 3) = mask(3, 0) = 0.0;
    std::vector<GatHead> heads;
    for (int k = 0; k < 4; ++k)
        heads.push_back({Tensor::constant(random_matrix(3, 2, r)), Tensor::constant(random_matrix(2, 1, r)),
                         Tensor::constant(random_matrix(2, 1, r))});
    std::vector<Matrix> att;
    const Matrix out = gat_layer(Tensor::constant(h), mask, heads, 0.2, &att).value();
    EXPECT_EQ(out.cols(), 8);
    for (const Matrix& a : att)
        for (Eigen::Index i = 0; i < 4; ++i) {
            const double deg = mask.row(i).sum();
            EXPECT_NEAR(a.row(i).sum(), 1.0, 1e-12);
            for (Eigen::Index j = 0; j < 4; ++j) EXPECT_NEAR(a(i, j), mask(i, j) / deg, 1e-12);
        }
}

TEST(GatLayer, AttentionRowsSumToOne) {
    Rng r(5);
    const Matrix h = random_matrix(6, 3, r);
    Matrix mask = Matrix::Identity(6, 6);
    for (int i = 0; i + 1 < 6; ++i) mask(i, i + 1) = mask(i + 1, i) = 1.0;
    const GatHead head{Tensor::constant(random_matrix(3, 8, r) * 3), Tensor::constant(random_matrix(8, 1, r)),
                       Tensor::constant(random_matrix(8, 1, r))};
    std::vector<Matrix> att;
    gat_layer(Tensor::constant(h), mask, std::span(&head, 1), 0.2, &att);
    for (Eigen::Index i = 0; i < 6; ++i) {
        EXPECT_NEAR(att[0].row(i).sum(), 1.0, 1e-12);
        for (Eigen::Index j = 0; j < 6; ++j)
            if (mask(i, j) == 0.0) EXPECT_EQ(att[0](i, j), 0.0);
    }
}

TEST(PolicyForward, OutputShapes) {
    const auto op = bench("opamp2"), pa = bench("rfpa");
    Rng r(6);
    for (Variant v : kAll) {
        const Agent a(op, v, 1), b(pa, v, 1);
        const CircuitEnv eo(op, Fidelity::Fine), ep(pa, Fidelity::Fine);
        const Matrix po = a.policy_probs(eo.reset(eo.sample_goal(r)));
        const Matrix pp = b.policy_probs(ep.reset(ep.sample_goal(r)));
        EXPECT_EQ(po.rows(), 15) << to_string(v);
        EXPECT_EQ(po.cols(), 3);
        EXPECT_EQ(pp.rows(), 14) << to_string(v);
        EXPECT_EQ(pp.cols(), 3);
    }
}

TEST(PolicyForward, RowsAreStochastic) {
    const auto op = bench("opamp2");
    const CircuitEnv env(op, Fidelity::Fine);
    Rng r(7);
    for (Variant v : kAll) {
        const Agent agent(op, v, 2);
        for (int i = 0; i < 20; ++i) {
            const Matrix p = agent.policy_probs(random_state(env, r));
            for (Eigen::Index k = 0; k < p.rows(); ++k) {
                EXPECT_NEAR(p.row(k).sum(), 1.0, 1e-12);
                EXPECT_GT(p.row(k).minCoeff(), 0.0);
            }
            EXPECT_TRUE(std::isfinite(agent.value_estimate(random_state(env, r))));
        }
    }
}

TEST(PolicyForward, PermutationEquivariance) {
    const auto op = bench("opamp2");
    EXPECT_LT(anasizer::testing::equivariance_deviation(op, Variant::GcnFc, 10, 3), 1e-9);
    EXPECT_LT(anasizer::testing::equivariance_deviation(op, Variant::GatFc, 10, 4), 1e-9);
}

TEST(PolicyForward, BenchmarkMismatch) {
    const Agent a(bench("rfpa"), Variant::GatFc, 1);
    EXPECT_THROW(a.check_benchmark(load_benchmark("opamp2")), BenchmarkMismatch);
    EXPECT_NO_THROW(a.check_benchmark(load_benchmark("rfpa")));
}

TEST(PolicyForward, SameSeedSameWeightsDifferentSeedDifferent) {
    const auto op = bench("opamp2");
    const Agent a(op, Variant::GatFc, 5), b(op, Variant::GatFc, 5), c(op, Variant::GatFc, 6);
    EXPECT_EQ(a.policy().params(), b.policy().params());
    EXPECT_NE(a.policy().params(), c.policy().params());
    EXPECT_NE(a.policy().params().front(), a.value().params().front());
}

TEST(Networks, TrunkShapesMatchBetweenPolicyAndValue) {
    const auto op = bench("opamp2");
    for (Variant v : kAll) {
        const Agent a(op, v, 1);
        EXPECT_EQ(a.policy().trunk_shapes(), a.value().trunk_shapes()) << to_string(v);
        EXPECT_FALSE(a.policy().trunk_shapes().empty());
    }
}

TEST(Networks, InitWithinFanInBounds) {
    const Agent a(bench("toy"), Variant::GatFc, 9);
    for (std::size_t i = 0; i < a.policy().params().size(); ++i) {
        const Matrix& w = a.policy().params()[i];
        const double bound = std::sqrt(1.0 / static_cast<double>(w.rows()));
        EXPECT_LE(w.cwiseAbs().maxCoeff(), bound) << a.policy().names()[i];
    }
}

TEST(Networks, GatAndGcnHaveComparableSize) {
    const auto op = bench("opamp2");
    const double gcn = static_cast<double>(Agent(op, Variant::GcnFc, 1).policy().count());
    const double gat = static_cast<double>(Agent(op, Variant::GatFc, 1).policy().count());
    EXPECT_LT(std::abs(gat - gcn) / gcn, 0.1);
}

TEST(Networks, GradientReachesEveryParameter) {
    const auto op = bench("opamp2");
    const CircuitEnv env(op, Fidelity::Fine);
    Rng r(10);
    for (Variant v : kAll) {
        const Agent agent(op, v, 3);
        const Observation obs = agent.observe(random_state(env, r));
        const ActionMatrix am = sample_action(agent.policy_probs(obs), r);
        std::vector<int> cols;
        for (int a : am.action) cols.push_back(step_to_column(a));
        const auto bound = agent.policy().bind(true);
        const Tensor loss = ad::scale(ad::sum(ad::pick(ad::row_log_softmax(agent.policy().forward(obs, bound)), cols)), -1.0);
        ad::backward(loss);
        for (std::size_t i = 0; i < bound.size(); ++i) {
            ASSERT_EQ(bound[i].grad().rows(), bound[i].rows()) << to_string(v) << " " << agent.policy().names()[i];
            EXPECT_TRUE(bound[i].grad().allFinite());
        }
        const auto vb = agent.value().bind(true);
        ad::backward(agent.value().forward(obs, vb));
        for (std::size_t i = 0; i < vb.size(); ++i) {
            ASSERT_EQ(vb[i].grad().rows(), vb[i].rows()) << to_string(v) << " " << agent.value().names()[i];
            EXPECT_TRUE(vb[i].grad().allFinite());
        }
    }
}

TEST(SampleAction, DeterministicRow) {
    Matrix p(2, 3);
    p << 1, 0, 0, 0, 0, 1;
    Rng r(1);
    const ActionMatrix am = sample_action(p, r);
    EXPECT_EQ(am.action, (std::vector<int>{-1, +1}));
    EXPECT_EQ(am.log_prob, 0.0);
}

TEST(SampleAction, UniformRowsJointLogProb) {
    const Matrix p = Matrix::Constant(15, 3, 1.0 / 3.0);
    Rng r(2);
    const ActionMatrix am = sample_action(p, r);
    EXPECT_NEAR(am.log_prob, 15.0 * std::log(1.0 / 3.0), 1e-12);
    EXPECT_NEAR(action_log_prob(p, am.action), am.log_prob, 1e-15);
}

TEST(SampleAction, FixedSeedSameSample) {
    Rng r(3);
    Matrix p = random_matrix(15, 3, r).array().exp().matrix();
    for (Eigen::Index i = 0; i < p.rows(); ++i) p.row(i) /= p.row(i).sum();
    Rng a(11), b(11);
    EXPECT_EQ(sample_action(p, a).action, sample_action(p, b).action);
}

TEST(SampleAction, RowsNotSummingToOneRejected) {
    Matrix p = Matrix::Constant(2, 3, 0.3);
    Rng r(4);
    EXPECT_THROW(sample_action(p, r), std::invalid_argument);
}

TEST(SampleAction, EmpiricalFrequencies) {
    Matrix p(1, 3);
    p << 0.2, 0.5, 0.3;
    Rng r(5);
    std::array<int, 3> counts{};
    const int n = 30000;
    for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(step_to_column(sample_action(p, r).action[0]))];
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(counts[static_cast<std::size_t>(c)] / double(n), p(0, c), 0.01);
}

TEST(SampleAction, LogProbRecomputedFromStoredState) {
    const auto op = bench("opamp2");
    const Agent agent(op, Variant::GatFc, 4);
    const CircuitEnv env(op, Fidelity::Fine);
    Rng r(6);
    const EnvState s = random_state(env, r);
    const ActionMatrix am = sample_action(agent.policy_probs(s), r);
    EXPECT_EQ(agent.log_prob(s, am.action), am.log_prob);
    EXPECT_TRUE(std::isfinite(am.log_prob));
}

TEST(GreedyAction, ArgmaxWithTiesToKeep) {
    Matrix p(3, 3);
    p << 0.6, 0.2, 0.2, 0.4, 0.2, 0.4, 1.0 / 3, 1.0 / 3, 1.0 / 3;
    EXPECT_EQ(greedy_action(p).action, (std::vector<int>{-1, -1, 0}));
}

TEST(Entropy, BoundsProperty) {
    Rng r(7);
    for (int t = 0; t < 200; ++t) {
        Matrix p = (random_matrix(15, 3, r) * 5).array().exp().matrix();
        for (Eigen::Index i = 0; i < p.rows(); ++i) p.row(i) /= p.row(i).sum();
        const double h = entropy(p);
        EXPECT_GE(h, 0.0);
        EXPECT_LE(h, 15 * std::log(3.0) + 1e-12);
    }
    EXPECT_NEAR(entropy(Matrix::Constant(15, 3, 1.0 / 3)), 15 * std::log(3.0), 1e-12);
}
