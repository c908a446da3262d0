#pragma once

#include <Eigen/Core>

#include <cmath>

#include "reachgym/error.hpp"

namespace reachgym {

class Adam {
public:
    explicit Adam(Eigen::Index n, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : m_(Eigen::VectorXd::Zero(n)), v_(Eigen::VectorXd::Zero(n)), b1_(beta1), b2_(beta2), eps_(eps) {}

    void step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad, double lr) {
        detail::require(theta.size() == m_.size() && grad.size() == m_.size(), "Adam: size mismatch");
        ++t_;
        m_ = b1_ * m_ + (1.0 - b1_) * grad;
        v_ = b2_ * v_ + (1.0 - b2_) * grad.cwiseProduct(grad);
        const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
        theta.array() -= lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
    }

    long steps() const { return t_; }

private:
    Eigen::VectorXd m_, v_;
    double b1_, b2_, eps_;
    long t_ = 0;
};

}  // namespace reachgym
