#pragma once

// Reach reward functions for the four MARA task variants.
//
//   x  RMS end-effector distance to target (m), see rms_distance()
//   y  geodesic orientation error (rad), see quaternion_angle()
//
//   rew_dist(x)      = (e^{-αx} - e^{-α} + 10(e^{-αx/done} - e^{-α})) / (1 - e^{-α})
//   mara             = rew_dist - 1
//   orient core      = rew_dist·(1 + γ - (y/π)^β)/(1 + γ) - 1
//   collision        = rew_dist - 1 - δ·(2·min(rew_dist, 0.5))^η          when colliding
//   collision orient = core - δ·(2·rew_dist)^{0.03}                      when colliding
//
// rew_dist turns negative past x ≈ 0.5204 m (α = 5). A negative base under
// the fractional collision exponent has no real value, so the penalty uses
// the base magnitude there; the penalty stays positive and finite.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "reachgym/csv.hpp"
#include "reachgym/error.hpp"
#include "reachgym/math.hpp"

namespace reachgym {

struct RewardHyperparams {
    double alpha = 5.0;
    double beta = 1.5;
    double gamma = 1.0;
    double delta = 3.0;
    double eta = 0.03;
    double done = 0.02;  // m
    /// Exponent of the collision-orient penalty. Printed as a literal 0.03,
    /// independent of eta.
    double collision_orient_exponent = 0.03;

    void validate() const {
        if (!(alpha > 0.0)) throw ConfigError("reward alpha must be > 0");
        if (!(beta > 0.0)) throw ConfigError("reward beta must be > 0");
        if (!(gamma > -1.0)) throw ConfigError("reward gamma must be > -1");
        if (!(delta >= 0.0)) throw ConfigError("reward delta must be >= 0");
        if (!(eta > 0.0)) throw ConfigError("reward eta must be > 0");
        if (!(done > 0.0)) throw ConfigError("reward done must be > 0");
        if (!(collision_orient_exponent > 0.0))
            throw ConfigError("collision_orient_exponent must be > 0");
    }
};

namespace detail {

inline void require_distance(double x) {
    require(std::isfinite(x) && x >= 0.0, "reward: distance x must be finite and >= 0");
}

inline void require_angle(double y) {
    require(y >= 0.0 && y <= kPi, "reward: orientation error y must lie in [0, pi]");
}

inline double collision_penalty(double delta, double base, double exponent) {
    return delta * std::pow(std::abs(base), exponent);
}

}  // namespace detail

/// rew_dist: 11 at x = 0, strictly decreasing, asymptote -11e^{-α}/(1-e^{-α}).
inline double distance_fraction(double x, const RewardHyperparams& h) {
    detail::require_distance(x);
    const double ea = std::exp(-h.alpha);
    return (std::exp(-h.alpha * x) - ea + 10.0 * (std::exp(-h.alpha * x / h.done) - ea)) / (1.0 - ea);
}

inline double reward_mara(double x, const RewardHyperparams& h) {
    return distance_fraction(x, h) - 1.0;
}

inline double orientation_factor(double y, const RewardHyperparams& h) {
    detail::require_angle(y);
    return (1.0 + h.gamma - std::pow(y / kPi, h.beta)) / (1.0 + h.gamma);
}

inline double reward_orient_core(double x, double y, const RewardHyperparams& h) {
    const double factor = orientation_factor(y, h);
    return distance_fraction(x, h) * factor - 1.0;
}

inline double reward_collision(double x, bool colliding, const RewardHyperparams& h) {
    const double frac = distance_fraction(x, h);
    if (!colliding) return frac - 1.0;
    return frac - 1.0 - detail::collision_penalty(h.delta, 2.0 * std::min(frac, 0.5), h.eta);
}

inline double reward_collision_orient(double x, double y, bool colliding,
                                      const RewardHyperparams& h) {
    const double core = reward_orient_core(x, y, h);
    if (!colliding) return core;
    return core - detail::collision_penalty(h.delta, 2.0 * distance_fraction(x, h),
                                            h.collision_orient_exponent);
}

struct SurfacePoint {
    double x;
    double y;
    double reward;
};

/// Row-major grid of reward_orient_core over x ∈ [0, 1] m (outer), y ∈ [0, π] (inner).
inline std::vector<SurfacePoint> reward_surface(const RewardHyperparams& h, int nx, int ny) {
    detail::require(nx >= 2 && ny >= 2, "reward_surface: nx and ny must be >= 2");
    std::vector<SurfacePoint> grid;
    grid.reserve(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny));
    for (int i = 0; i < nx; ++i) {
        const double x = static_cast<double>(i) / (nx - 1);
        for (int k = 0; k < ny; ++k) {
            // Last column pinned to π exactly so the angle check never rounds past it.
            const double y = k == ny - 1 ? kPi : kPi * static_cast<double>(k) / (ny - 1);
            grid.push_back({x, y, reward_orient_core(x, y, h)});
        }
    }
    return grid;
}

/// CSV with header `x,y,reward`, one row per cell in grid order.
inline void write_surface_csv(std::ostream& out, const std::vector<SurfacePoint>& grid) {
    write_csv_header(out, {"x", "y", "reward"});
    for (const auto& p : grid) write_csv_row(out, {p.x, p.y, p.reward});
}

inline std::vector<SurfacePoint> read_surface_csv(std::istream& in) {
    const CsvTable t = parse_csv(in, {"x", "y", "reward"});
    if (t.header.size() != 3) throw ParseError("reward surface CSV must have exactly 3 columns");
    std::vector<SurfacePoint> grid;
    grid.reserve(t.rows.size());
    for (const auto& r : t.rows) grid.push_back({r[0], r[1], r[2]});
    return grid;
}

}  // namespace reachgym
