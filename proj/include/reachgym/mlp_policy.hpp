#pragma once

// Diagonal-Gaussian MLP policy with a separate value network of the same
// hidden architecture. All parameters live in one flat vector; tensors are
// row-major views into it so the vector can be written to disk as is.
//
// Both nets: in -> 64 tanh -> 64 tanh -> linear out. log_std is a free,
// state-independent vector.

#include <Eigen/Core>
#include <Eigen/QR>

#include <array>
#include <cmath>
#include <random>
#include <string>

#include "reachgym/error.hpp"
#include "reachgym/math.hpp"
#include "reachgym/rng.hpp"

namespace reachgym {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

enum class Tensor { PiW1, PiB1, PiW2, PiB2, PiW3, PiB3, LogStd, VfW1, VfB1, VfW2, VfB2, VfW3, VfB3, Count };

inline constexpr std::size_t kTensorCount = static_cast<std::size_t>(Tensor::Count);

inline const char* tensor_name(Tensor t) {
    static constexpr std::array<const char*, kTensorCount> names{
        "pi.w1", "pi.b1", "pi.w2", "pi.b2", "pi.w3", "pi.b3", "log_std",
        "vf.w1", "vf.b1", "vf.w2", "vf.b2", "vf.w3", "vf.b3"};
    return names[static_cast<std::size_t>(t)];
}

struct PolicyShape {
    int obs_dim = 19;
    int act_dim = 6;
    int hidden = 64;

    friend bool operator==(const PolicyShape&, const PolicyShape&) = default;

    struct Slot {
        Eigen::Index offset = 0, rows = 0, cols = 0;
    };

    /// Tensor order as in `Tensor`; biases are rows x 1.
    std::array<Slot, kTensorCount> layout() const {
        const std::array<std::pair<int, int>, kTensorCount> dims{{
            {hidden, obs_dim}, {hidden, 1}, {hidden, hidden}, {hidden, 1}, {act_dim, hidden}, {act_dim, 1},
            {act_dim, 1},
            {hidden, obs_dim}, {hidden, 1}, {hidden, hidden}, {hidden, 1}, {1, hidden}, {1, 1}}};
        std::array<Slot, kTensorCount> out{};
        Eigen::Index off = 0;
        for (std::size_t i = 0; i < kTensorCount; ++i) {
            out[i] = {off, dims[i].first, dims[i].second};
            off += static_cast<Eigen::Index>(dims[i].first) * dims[i].second;
        }
        return out;
    }

    Eigen::Index param_count() const {
        const auto l = layout();
        return l.back().offset + l.back().rows * l.back().cols;
    }

    void validate() const {
        if (obs_dim < 1 || act_dim < 1 || hidden < 1)
            throw ConfigError("policy shape dimensions must be positive");
    }
};

class PolicyParams {
public:
    PolicyParams() : PolicyParams(PolicyShape{}) {}
    explicit PolicyParams(PolicyShape shape)
        : shape_(shape), layout_((shape.validate(), shape.layout())),
          theta_(Eigen::VectorXd::Zero(shape.param_count())) {}

    const PolicyShape& shape() const { return shape_; }
    Eigen::VectorXd& flat() { return theta_; }
    const Eigen::VectorXd& flat() const { return theta_; }

    MatrixMap operator[](Tensor t) {
        const auto& s = layout_[static_cast<std::size_t>(t)];
        return MatrixMap(theta_.data() + s.offset, s.rows, s.cols);
    }
    ConstMatrixMap operator[](Tensor t) const {
        const auto& s = layout_[static_cast<std::size_t>(t)];
        return ConstMatrixMap(theta_.data() + s.offset, s.rows, s.cols);
    }
    Eigen::Map<Eigen::VectorXd> log_std() {
        const auto& s = layout_[static_cast<std::size_t>(Tensor::LogStd)];
        return {theta_.data() + s.offset, s.rows};
    }
    Eigen::Map<const Eigen::VectorXd> log_std() const {
        const auto& s = layout_[static_cast<std::size_t>(Tensor::LogStd)];
        return {theta_.data() + s.offset, s.rows};
    }

    bool all_finite() const { return theta_.allFinite(); }

private:
    PolicyShape shape_;
    std::array<PolicyShape::Slot, kTensorCount> layout_;
    Eigen::VectorXd theta_;
};

/// Orthogonal matrix (rows x cols) scaled by gain, from the QR of a Gaussian draw.
inline RowMatrix orthogonal_matrix(int rows, int cols, double gain, Rng& rng) {
    const int big = std::max(rows, cols), small = std::min(rows, cols);
    std::normal_distribution<double> n01;
    Eigen::MatrixXd g(big, small);
    for (int c = 0; c < small; ++c)
        for (int r = 0; r < big; ++r) g(r, c) = n01(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(big, small);
    const Eigen::MatrixXd r = qr.matrixQR().topRows(small).triangularView<Eigen::Upper>();
    for (int i = 0; i < small; ++i)
        if (r(i, i) < 0) q.col(i) *= -1.0;
    RowMatrix out = rows >= cols ? RowMatrix(q) : RowMatrix(q.transpose());
    return gain * out;
}

/// Hidden layers gain √2, policy head 0.01, value head 1, biases 0, log_std = log_std_init.
inline PolicyParams init_policy(const PolicyShape& shape, Rng& rng, double log_std_init = 0.0) {
    PolicyParams p(shape);
    const double g = std::sqrt(2.0);
    p[Tensor::PiW1] = orthogonal_matrix(shape.hidden, shape.obs_dim, g, rng);
    p[Tensor::PiW2] = orthogonal_matrix(shape.hidden, shape.hidden, g, rng);
    p[Tensor::PiW3] = orthogonal_matrix(shape.act_dim, shape.hidden, 0.01, rng);
    p[Tensor::VfW1] = orthogonal_matrix(shape.hidden, shape.obs_dim, g, rng);
    p[Tensor::VfW2] = orthogonal_matrix(shape.hidden, shape.hidden, g, rng);
    p[Tensor::VfW3] = orthogonal_matrix(1, shape.hidden, 1.0, rng);
    p.log_std().setConstant(log_std_init);
    return p;
}

/// Activations of one batch (columns are samples), kept for backprop.
struct ForwardCache {
    Eigen::MatrixXd obs;
    Eigen::MatrixXd pi_h1, pi_h2, mean;
    Eigen::MatrixXd vf_h1, vf_h2;
    Eigen::RowVectorXd value;
};

inline ForwardCache forward_batch(const PolicyParams& p, const Eigen::MatrixXd& obs) {
    detail::require(obs.rows() == p.shape().obs_dim,
                    "policy_forward: observation width " + std::to_string(obs.rows()) + ", expected " +
                        std::to_string(p.shape().obs_dim));
    ForwardCache c;
    c.obs = obs;
    c.pi_h1 = ((p[Tensor::PiW1] * obs).colwise() + p[Tensor::PiB1].col(0)).array().tanh();
    c.pi_h2 = ((p[Tensor::PiW2] * c.pi_h1).colwise() + p[Tensor::PiB2].col(0)).array().tanh();
    c.mean = (p[Tensor::PiW3] * c.pi_h2).colwise() + p[Tensor::PiB3].col(0);
    c.vf_h1 = ((p[Tensor::VfW1] * obs).colwise() + p[Tensor::VfB1].col(0)).array().tanh();
    c.vf_h2 = ((p[Tensor::VfW2] * c.vf_h1).colwise() + p[Tensor::VfB2].col(0)).array().tanh();
    c.value = (p[Tensor::VfW3] * c.vf_h2).array() + p[Tensor::VfB3](0, 0);
    return c;
}

struct PolicyOutput {
    Eigen::VectorXd action_mean;
    double value = 0.0;
};

inline PolicyOutput policy_forward(const PolicyParams& p, const Eigen::VectorXd& obs) {
    const ForwardCache c = forward_batch(p, obs);
    return {c.mean.col(0), c.value[0]};
}

inline constexpr double kLog2Pi = 1.8378770664093454836;  // log(2π)

inline double gaussian_log_prob(const Eigen::VectorXd& action, const Eigen::VectorXd& mean,
                                const Eigen::VectorXd& log_std) {
    const Eigen::ArrayXd z = (action - mean).array() / log_std.array().exp();
    return -0.5 * z.square().sum() - log_std.sum() - 0.5 * static_cast<double>(action.size()) * kLog2Pi;
}

/// Σ(log_std + ½·log(2πe))
inline double gaussian_entropy(const Eigen::VectorXd& log_std) {
    return log_std.sum() + 0.5 * (kLog2Pi + 1.0) * static_cast<double>(log_std.size());
}

struct ActionSample {
    Eigen::VectorXd action;  // unclamped
    double log_prob = 0.0;
    double value = 0.0;
};

/// Draws a ~ N(mean, exp(log_std)²); deterministic returns the mean.
inline ActionSample sample_action(const PolicyParams& p, const Eigen::VectorXd& obs, Rng& rng,
                                  bool deterministic = false) {
    const PolicyOutput out = policy_forward(p, obs);
    const Eigen::VectorXd log_std = p.log_std();
    ActionSample s;
    s.value = out.value;
    s.action = out.action_mean;
    if (!deterministic) {
        std::normal_distribution<double> n01;
        for (Eigen::Index i = 0; i < s.action.size(); ++i) s.action[i] += std::exp(log_std[i]) * n01(rng);
    }
    s.log_prob = gaussian_log_prob(s.action, out.action_mean, log_std);
    return s;
}

// ---------------------------------------------------------------------------
// Clipped-surrogate loss and its gradient

struct LossCoefficients {
    double clip_range = 0.2;
    double vf_coef = 0.5;
    double ent_coef = 0.0;
};

/// One minibatch; columns of obs/actions are samples.
struct LossBatch {
    Eigen::MatrixXd obs;
    Eigen::MatrixXd actions;
    Eigen::VectorXd old_log_prob;
    Eigen::VectorXd advantages;
    Eigen::VectorXd returns;
};

struct LossTerms {
    double total = 0.0;
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
    double clip_frac = 0.0;
    double approx_kl = 0.0;
};

/// loss = mean(max(−A·r, −A·clip(r, 1±ε))) + vf·mean((V − R)²) − ent·H
/// with r = exp(logπ(a|s) − logπ_old). Fills `grad` (same layout as the
/// parameters) when non-null.
inline LossTerms ppo_loss(const PolicyParams& p, const LossBatch& b, const LossCoefficients& k,
                          Eigen::VectorXd* grad = nullptr) {
    const Eigen::Index n = b.obs.cols();
    const int act = p.shape().act_dim;
    detail::require(n > 0, "ppo_loss: empty batch");
    detail::require(b.actions.rows() == act && b.actions.cols() == n && b.old_log_prob.size() == n &&
                        b.advantages.size() == n && b.returns.size() == n,
                    "ppo_loss: batch shape mismatch");
    const ForwardCache c = forward_batch(p, b.obs);
    const Eigen::VectorXd log_std = p.log_std();
    const Eigen::ArrayXd inv_var = (-2.0 * log_std.array()).exp();
    const double inv_n = 1.0 / static_cast<double>(n);

    const Eigen::MatrixXd diff = b.actions - c.mean;  // act x n
    LossTerms out;
    Eigen::RowVectorXd dlogp(n);  // dLoss/dlogp per sample
    for (Eigen::Index j = 0; j < n; ++j) {
        const double logp = -0.5 * (diff.col(j).array().square() * inv_var).sum() - log_std.sum() -
                            0.5 * act * kLog2Pi;
        const double log_ratio = logp - b.old_log_prob[j];
        const double ratio = std::exp(log_ratio);
        const double a = b.advantages[j];
        const double unclipped = -a * ratio;
        const double clipped = -a * std::clamp(ratio, 1.0 - k.clip_range, 1.0 + k.clip_range);
        out.policy_loss += std::max(unclipped, clipped) * inv_n;
        dlogp[j] = unclipped >= clipped ? unclipped * inv_n : 0.0;
        if (std::abs(ratio - 1.0) > k.clip_range) out.clip_frac += inv_n;
        out.approx_kl += 0.5 * log_ratio * log_ratio * inv_n;
    }
    const Eigen::RowVectorXd verr = c.value - b.returns.transpose();
    out.value_loss = verr.squaredNorm() * inv_n;
    out.entropy = gaussian_entropy(log_std);
    out.total = out.policy_loss + k.vf_coef * out.value_loss - k.ent_coef * out.entropy;
    if (!grad) return out;

    PolicyParams g(p.shape());
    // d logp / d mean = diff / σ², d logp / d log_std = (diff/σ)² − 1
    const Eigen::MatrixXd scaled = inv_var.matrix().asDiagonal() * diff;
    const Eigen::MatrixXd g_mean = (scaled.array().rowwise() * dlogp.array()).matrix();
    g.log_std() = ((diff.array().square().colwise() * inv_var).matrix() * dlogp.transpose()).array() -
                  dlogp.sum() - k.ent_coef;

    g[Tensor::PiW3] = g_mean * c.pi_h2.transpose();
    g[Tensor::PiB3] = g_mean.rowwise().sum();
    Eigen::MatrixXd d2 = (p[Tensor::PiW3].transpose() * g_mean).array() * (1.0 - c.pi_h2.array().square());
    g[Tensor::PiW2] = d2 * c.pi_h1.transpose();
    g[Tensor::PiB2] = d2.rowwise().sum();
    Eigen::MatrixXd d1 = (p[Tensor::PiW2].transpose() * d2).array() * (1.0 - c.pi_h1.array().square());
    g[Tensor::PiW1] = d1 * b.obs.transpose();
    g[Tensor::PiB1] = d1.rowwise().sum();

    const Eigen::RowVectorXd g_value = (2.0 * k.vf_coef * inv_n) * verr;
    g[Tensor::VfW3] = g_value * c.vf_h2.transpose();
    g[Tensor::VfB3](0, 0) = g_value.sum();
    d2 = (p[Tensor::VfW3].transpose() * g_value).array() * (1.0 - c.vf_h2.array().square());
    g[Tensor::VfW2] = d2 * c.vf_h1.transpose();
    g[Tensor::VfB2] = d2.rowwise().sum();
    d1 = (p[Tensor::VfW2].transpose() * d2).array() * (1.0 - c.vf_h1.array().square());
    g[Tensor::VfW1] = d1 * b.obs.transpose();
    g[Tensor::VfB1] = d1.rowwise().sum();

    *grad = std::move(g.flat());
    return out;
}

}  // namespace reachgym
