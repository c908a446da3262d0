#pragma once

#include <Eigen/Core>

#include <cmath>

#include "reachgym/error.hpp"

namespace reachgym {

struct GaeResult {
    Eigen::VectorXd advantages;
    Eigen::VectorXd returns;
};

/// Backward recursion
///   δ_t = r_t + γ·v_{t+1}·(1 − done_t) − v_t
///   A_t = δ_t + γλ·(1 − done_t)·A_{t+1}
/// with v_n = bootstrap. done_t marks the transition that ended an episode
/// (step cap included).
inline GaeResult compute_gae(const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
                             const Eigen::Array<bool, Eigen::Dynamic, 1>& dones, double bootstrap_value,
                             double gamma, double lambda) {
    const Eigen::Index n = rewards.size();
    detail::require(values.size() == n && dones.size() == n, "compute_gae: buffer length mismatch");
    GaeResult out;
    out.advantages.resize(n);
    double next_adv = 0.0;
    for (Eigen::Index t = n - 1; t >= 0; --t) {
        const double next_value = t + 1 < n ? values[t + 1] : bootstrap_value;
        const double live = dones[t] ? 0.0 : 1.0;
        const double delta = rewards[t] + gamma * next_value * live - values[t];
        next_adv = delta + gamma * lambda * live * next_adv;
        out.advantages[t] = next_adv;
    }
    out.returns = out.advantages + values;
    return out;
}

/// Zero mean, unit (population) variance.
inline void normalize_advantages(Eigen::VectorXd& adv) {
    if (adv.size() == 0) return;
    const double mean = adv.mean();
    adv.array() -= mean;
    const double sd = std::sqrt(adv.squaredNorm() / static_cast<double>(adv.size()));
    adv /= sd + 1e-8;
}

}  // namespace reachgym
