#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>

#include "reachgym/error.hpp"

namespace reachgym {

/// Streaming per-component mean and variance (parallel-merge form).
class RunningMeanStd {
public:
    RunningMeanStd() = default;
    explicit RunningMeanStd(int dim)
        : mean_(Eigen::VectorXd::Zero(dim)), var_(Eigen::VectorXd::Ones(dim)) {}

    void update(const Eigen::VectorXd& x) {
        detail::require(x.size() == mean_.size(), "RunningMeanStd: dimension mismatch");
        const double total = count_ + 1.0;
        const Eigen::VectorXd delta = x - mean_;
        mean_ += delta / total;
        const Eigen::VectorXd m2 = var_ * count_ + delta.cwiseProduct(delta) * (count_ / total);
        var_ = m2 / total;
        count_ = total;
    }

    int dim() const { return static_cast<int>(mean_.size()); }
    const Eigen::VectorXd& mean() const { return mean_; }
    const Eigen::VectorXd& var() const { return var_; }
    double count() const { return count_; }

    void set(Eigen::VectorXd mean, Eigen::VectorXd var, double count) {
        detail::require(mean.size() == var.size(), "RunningMeanStd: mean/var size mismatch");
        mean_ = std::move(mean);
        var_ = std::move(var);
        count_ = count;
    }

private:
    Eigen::VectorXd mean_;
    Eigen::VectorXd var_;
    double count_ = 1e-4;  // avoids a division by zero before the first sample
};

/// Observation whitening with clipping; `enabled = false` is the identity.
struct ObsNormalizer {
    RunningMeanStd stats;
    bool enabled = true;
    double clip = 10.0;
    double epsilon = 1e-8;

    ObsNormalizer() = default;
    ObsNormalizer(int dim, bool on) : stats(dim), enabled(on) {}

    Eigen::VectorXd normalize(const Eigen::VectorXd& x) const {
        if (!enabled) return x;
        Eigen::VectorXd out = (x - stats.mean()).array() / (stats.var().array() + epsilon).sqrt();
        return out.cwiseMax(-clip).cwiseMin(clip);
    }
};

/// Scales rewards by the running std of the discounted return.
class RewardScaler {
public:
    RewardScaler(double gamma, bool on) : stats_(1), gamma_(gamma), enabled_(on) {}

    double scale(double reward, bool done) {
        if (!enabled_) return reward;
        ret_ = ret_ * gamma_ + reward;
        stats_.update(Eigen::VectorXd::Constant(1, ret_));
        if (done) ret_ = 0.0;
        return std::clamp(reward / std::sqrt(stats_.var()[0] + 1e-8), -10.0, 10.0);
    }

private:
    RunningMeanStd stats_;
    double gamma_;
    bool enabled_;
    double ret_ = 0.0;
};

}  // namespace reachgym
