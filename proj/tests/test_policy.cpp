#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "reachgym/mlp_policy.hpp"

using namespace reachgym;

namespace {

PolicyParams golden_params() {
    PolicyParams p;
    for (Eigen::Index i = 0; i < p.flat().size(); ++i) p.flat()[i] = 0.3 * std::sin(0.37 * static_cast<double>(i) + 0.1);
    return p;
}

Eigen::VectorXd golden_obs() {
    Eigen::VectorXd o(19);
    for (int k = 0; k < 19; ++k) o[k] = 0.8 * std::cos(0.5 * k);
    return o;
}

LossBatch random_batch(const PolicyParams& behaviour, int n, Rng& rng) {
    const int obs = behaviour.shape().obs_dim, act = behaviour.shape().act_dim;
    std::normal_distribution<double> n01;
    LossBatch b;
    b.obs.resize(obs, n);
    for (Eigen::Index i = 0; i < b.obs.size(); ++i) b.obs.data()[i] = n01(rng);
    b.actions.resize(act, n);
    b.old_log_prob.resize(n);
    b.advantages.resize(n);
    b.returns.resize(n);
    for (int j = 0; j < n; ++j) {
        const ActionSample s = sample_action(behaviour, b.obs.col(j), rng);
        b.actions.col(j) = s.action;
        b.old_log_prob[j] = s.log_prob;
        b.advantages[j] = n01(rng);
        b.returns[j] = n01(rng);
    }
    return b;
}

}  // namespace

TEST(Policy, ShapeAndParameterCount) {
    const PolicyShape s;
    EXPECT_EQ(s.param_count(), 11341);
    const auto l = s.layout();
    EXPECT_EQ(l[static_cast<std::size_t>(Tensor::PiW1)].rows, 64);
    EXPECT_EQ(l[static_cast<std::size_t>(Tensor::PiW1)].cols, 19);
    EXPECT_EQ(l[static_cast<std::size_t>(Tensor::PiW3)].rows, 6);
    EXPECT_EQ(l[static_cast<std::size_t>(Tensor::VfW3)].rows, 1);
}

TEST(Policy, TensorViewsAreRowMajor) {
    PolicyParams p;
    p[Tensor::PiW1](0, 1) = 7.0;
    EXPECT_EQ(p.flat()[1], 7.0);
    p[Tensor::PiW1](1, 0) = 8.0;
    EXPECT_EQ(p.flat()[19], 8.0);
}

TEST(Policy, ZeroWeightsGiveBiases) {
    PolicyParams p;
    for (int i = 0; i < 6; ++i) p[Tensor::PiB3](i, 0) = 0.1 * (i + 1);
    p[Tensor::VfB3](0, 0) = -2.5;
    const PolicyOutput out = policy_forward(p, Eigen::VectorXd::Zero(19));
    for (int i = 0; i < 6; ++i) EXPECT_EQ(out.action_mean[i], 0.1 * (i + 1));
    EXPECT_EQ(out.value, -2.5);
}

TEST(Policy, ShapeMismatchThrows) {
    PolicyParams p;
    EXPECT_THROW(policy_forward(p, Eigen::VectorXd::Zero(18)), ContractViolation);
}

TEST(Policy, GoldenOutputs) {
    const PolicyParams p = golden_params();
    const PolicyOutput out = policy_forward(p, golden_obs());
    const double mean[6] = {-0.02387323483366184, -1.4202595995769884, -0.20525277840542985,
                            1.6427782347552338,   0.9918718215053389,  -0.9348035792662084};
    for (int i = 0; i < 6; ++i) EXPECT_NEAR(out.action_mean[i], mean[i], 1e-12) << i;
    EXPECT_NEAR(out.value, 0.15917729326146884, 1e-12);
    Eigen::VectorXd a(6);
    for (int i = 0; i < 6; ++i) a[i] = 0.1 * i - 0.2;
    EXPECT_NEAR(gaussian_log_prob(a, out.action_mean, p.log_std()), -9.12197524488507, 1e-11);
}

TEST(Policy, BatchForwardMatchesSingle) {
    Rng rng(3);
    const PolicyParams p = init_policy(PolicyShape{}, rng);
    Eigen::MatrixXd obs = Eigen::MatrixXd::Random(19, 5);
    const ForwardCache c = forward_batch(p, obs);
    for (int j = 0; j < 5; ++j) {
        const PolicyOutput o = policy_forward(p, obs.col(j));
        EXPECT_LT((o.action_mean - c.mean.col(j)).norm(), 1e-14);
        EXPECT_NEAR(o.value, c.value[j], 1e-14);
    }
}

TEST(Policy, OrthogonalInit) {
    Rng rng(11);
    const RowMatrix w = orthogonal_matrix(64, 19, std::sqrt(2.0), rng);
    EXPECT_LT(((w.transpose() * w) - 2.0 * Eigen::MatrixXd::Identity(19, 19)).norm(), 1e-12);
    const RowMatrix h = orthogonal_matrix(6, 64, 0.01, rng);
    EXPECT_LT(((h * h.transpose()) - 1e-4 * Eigen::MatrixXd::Identity(6, 6)).norm(), 1e-15);
    Rng r1(5), r2(5);
    EXPECT_EQ(init_policy(PolicyShape{}, r1).flat(), init_policy(PolicyShape{}, r2).flat());
    Rng r3(5);
    const PolicyParams p = init_policy(PolicyShape{}, r3);
    EXPECT_TRUE(p.log_std().isZero());
    EXPECT_TRUE(p[Tensor::PiB1].isZero());
}

TEST(Policy, LogProbMatchesDensityOracle) {
    Rng rng(7);
    PolicyParams p = init_policy(PolicyShape{}, rng);
    std::uniform_real_distribution<double> u(-1.5, 0.5);
    for (int i = 0; i < 6; ++i) p.log_std()[i] = u(rng);
    for (int trial = 0; trial < 200; ++trial) {
        const Eigen::VectorXd obs = Eigen::VectorXd::Random(19);
        const ActionSample s = sample_action(p, obs, rng);
        const Eigen::VectorXd mean = policy_forward(p, obs).action_mean;
        EXPECT_NEAR(s.log_prob, oracle::gaussian_log_density(s.action, mean, p.log_std()), 1e-10);
    }
}

TEST(Policy, LogProbComputedBeforeClamp) {
    PolicyParams p;
    p[Tensor::PiB3].setConstant(3.0);  // mean far outside [-1, 1]
    p.log_std().setConstant(-3.0);
    Rng rng(1);
    const ActionSample s = sample_action(p, Eigen::VectorXd::Zero(19), rng);
    EXPECT_GT(s.action.minCoeff(), 2.0);
    EXPECT_NEAR(s.log_prob, oracle::gaussian_log_density(s.action, Eigen::VectorXd::Constant(6, 3.0), p.log_std()),
                1e-10);
}

TEST(Policy, DegenerateGaussianReturnsMean) {
    Rng rng(2);
    PolicyParams p = init_policy(PolicyShape{}, rng);
    p.log_std().setConstant(-20.0);
    const Eigen::VectorXd obs = Eigen::VectorXd::Random(19);
    const ActionSample s = sample_action(p, obs, rng);
    EXPECT_LT((s.action - policy_forward(p, obs).action_mean).cwiseAbs().maxCoeff(), 1e-7);
    const ActionSample d = sample_action(p, obs, rng, true);
    EXPECT_EQ(d.action, policy_forward(p, obs).action_mean);
}

TEST(Policy, SampleStatistics) {
    PolicyParams p;
    const double means[6] = {0.3, -0.7, 0.0, 1.2, -0.1, 0.5};
    const double log_stds[6] = {0.0, -1.0, 0.5, -0.3, -2.0, 0.2};
    for (int i = 0; i < 6; ++i) {
        p[Tensor::PiB3](i, 0) = means[i];
        p.log_std()[i] = log_stds[i];
    }
    Rng rng(2024);
    const int n = 100000;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(6), sum2 = Eigen::VectorXd::Zero(6);
    const Eigen::VectorXd obs = Eigen::VectorXd::Zero(19);
    for (int k = 0; k < n; ++k) {
        const Eigen::VectorXd a = sample_action(p, obs, rng).action;
        sum += a;
        sum2 += a.cwiseProduct(a);
    }
    for (int i = 0; i < 6; ++i) {
        const double sigma = std::exp(log_stds[i]);
        const double m = sum[i] / n;
        const double sd = std::sqrt(sum2[i] / n - m * m);
        EXPECT_LT(std::abs(m - means[i]), 3.0 * sigma / std::sqrt(n)) << i;
        // standard error of the sample std is ~ σ/√(2n)
        EXPECT_LT(std::abs(sd - sigma), 3.0 * sigma / std::sqrt(2.0 * n)) << i;
    }
}

TEST(Policy, EntropyClosedForm) {
    Eigen::VectorXd ls(6);
    ls << 0.0, -1.0, 0.5, -0.3, -2.0, 0.2;
    double expect = 0.0;
    for (int i = 0; i < 6; ++i) expect += ls[i] + 0.5 * std::log(2.0 * M_PI * M_E);
    EXPECT_NEAR(gaussian_entropy(ls), expect, 1e-10);
    EXPECT_NEAR(gaussian_entropy(Eigen::VectorXd::Zero(6)), 6 * 1.4189385332046727, 1e-12);
}

TEST(PpoLoss, RatioOneMakesClippedEqualUnclipped) {
    Rng rng(4);
    const PolicyParams p = init_policy(PolicyShape{}, rng);
    const LossBatch b = random_batch(p, 64, rng);
    const LossTerms t = ppo_loss(p, b, {});
    EXPECT_NEAR(t.policy_loss, -b.advantages.mean(), 1e-12);
    EXPECT_EQ(t.clip_frac, 0.0);
    EXPECT_NEAR(t.approx_kl, 0.0, 1e-24);
}

TEST(PpoLoss, ZeroAdvantagesLeavePolicyGradientZero) {
    Rng rng(5);
    const PolicyParams p = init_policy(PolicyShape{}, rng);
    LossBatch b = random_batch(p, 32, rng);
    b.advantages.setZero();
    Eigen::VectorXd g;
    const LossTerms t = ppo_loss(p, b, {}, &g);
    EXPECT_EQ(t.policy_loss, 0.0);
    const auto layout = p.shape().layout();
    const auto vf_start = layout[static_cast<std::size_t>(Tensor::VfW1)].offset;
    EXPECT_TRUE(g.head(vf_start).isZero());
    EXPECT_GT(g.tail(g.size() - vf_start).norm(), 0.0);
}

TEST(PpoLoss, GradientMatchesCentralDifferences) {
    Rng rng(6);
    const PolicyShape shape;
    PolicyParams behaviour = init_policy(shape, rng);
    std::normal_distribution<double> n01;
    // a policy head that is not tiny, so mean gradients are exercised
    for (Eigen::Index i = 0; i < behaviour.flat().size(); ++i) behaviour.flat()[i] += 0.05 * n01(rng);
    for (int i = 0; i < 6; ++i) behaviour.log_std()[i] = -0.5 + 0.1 * i;
    const LossBatch b = random_batch(behaviour, 64, rng);
    PolicyParams p = behaviour;
    for (Eigen::Index i = 0; i < p.flat().size(); ++i) p.flat()[i] += 0.02 * n01(rng);
    const LossCoefficients k{0.2, 0.5, 0.01};

    Eigen::VectorXd g;
    const LossTerms t = ppo_loss(p, b, k, &g);
    EXPECT_GT(t.clip_frac, 0.0);  // both branches of the clip are exercised
    EXPECT_LT(t.clip_frac, 1.0);

    const double h = 1e-6;
    double max_rel = 0.0;
    int checked = 0;
    for (Eigen::Index i = 0; i < p.flat().size(); ++i) {
        const double saved = p.flat()[i];
        p.flat()[i] = saved + h;
        const double up = ppo_loss(p, b, k).total;
        p.flat()[i] = saved - h;
        const double down = ppo_loss(p, b, k).total;
        p.flat()[i] = saved;
        const double fd = (up - down) / (2 * h);
        const double scale = std::max({std::abs(fd), std::abs(g[i]), 1e-6});
        max_rel = std::max(max_rel, std::abs(fd - g[i]) / scale);
        ++checked;
    }
    EXPECT_EQ(checked, 11341);
    EXPECT_LT(max_rel, 1e-4);
}
