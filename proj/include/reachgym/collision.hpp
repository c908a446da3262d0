#pragma once

// Capsule-based self-collision and arm/table contact checks.

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <utility>
#include <vector>

#include "reachgym/error.hpp"
#include "reachgym/math.hpp"
#include "reachgym/robot_model.hpp"

namespace reachgym {

/// Closest points between segments [p0,p1] and [q0,q1]; returns the distance.
/// Degenerate (point) segments and parallel segments are handled.
inline double segment_segment_distance(const Vec3& p0, const Vec3& p1, const Vec3& q0,
                                       const Vec3& q1, Vec3* on_p = nullptr,
                                       Vec3* on_q = nullptr) {
    constexpr double eps = 1e-14;
    const Vec3 d1 = p1 - p0;
    const Vec3 d2 = q1 - q0;
    const Vec3 r = p0 - q0;
    const double a = d1.squaredNorm();
    const double e = d2.squaredNorm();
    const double f = d2.dot(r);
    double s = 0.0;
    double t = 0.0;

    if (a <= eps && e <= eps) {
        // both points
    } else if (a <= eps) {
        t = std::clamp(f / e, 0.0, 1.0);
    } else {
        const double c = d1.dot(r);
        if (e <= eps) {
            s = std::clamp(-c / a, 0.0, 1.0);
        } else {
            const double b = d1.dot(d2);
            const double denom = a * e - b * b;
            // Parallel: any s works, pick 0 and let the clamps below fix it.
            s = denom > eps * a * e ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
            t = (b * s + f) / e;
            if (t < 0.0) {
                t = 0.0;
                s = std::clamp(-c / a, 0.0, 1.0);
            } else if (t > 1.0) {
                t = 1.0;
                s = std::clamp((b - c) / a, 0.0, 1.0);
            }
        }
    }
    const Vec3 cp = p0 + s * d1;
    const Vec3 cq = q0 + t * d2;
    if (on_p) *on_p = cp;
    if (on_q) *on_q = cq;
    return (cp - cq).norm();
}

/// Distance from point p to segment [a,b].
inline double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
    const Vec3 ab = b - a;
    const double len2 = ab.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    return (p - (a + t * ab)).norm();
}

struct CollisionScene {
    std::vector<CapsuleSpec> capsules;
    double table_height = 0.0;
    std::set<std::pair<int, int>> ignore_pairs;  // stored both ways
    int frame_count = 0;

    bool ignored(int i, int j) const { return ignore_pairs.count({i, j}) > 0; }

    /// Scene from a model: its capsules, its table, and every pair of capsules
    /// on the same or adjacent frames ignored (they touch at the joints).
    static CollisionScene from_model(const RobotModel& model) {
        CollisionScene s;
        s.capsules = model.capsules;
        s.table_height = model.table_height;
        s.frame_count = model.frame_count();
        const int n = static_cast<int>(s.capsules.size());
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != j && std::abs(s.capsules[i].link - s.capsules[j].link) <= 1)
                    s.ignore_pairs.insert({i, j});
        for (auto [p, q] : model.extra_ignore_pairs) {
            s.ignore_pairs.insert({p, q});
            s.ignore_pairs.insert({q, p});
        }
        return s;
    }
};

struct ContactReport {
    static constexpr int kTable = -1;

    bool colliding = false;
    double min_separation = std::numeric_limits<double>::infinity();  // < 0: penetration
    /// Closest pair: two capsule indices, or (capsule, kTable). (-2, -2) if nothing was tested.
    std::pair<int, int> pair{-2, -2};
};

/// World-frame capsule endpoints for the given FK frames.
inline std::vector<std::pair<Vec3, Vec3>> world_capsules(const CollisionScene& scene,
                                                         const std::vector<Pose>& frames) {
    std::vector<std::pair<Vec3, Vec3>> out;
    out.reserve(scene.capsules.size());
    for (const auto& c : scene.capsules) {
        const Pose& f = frames[static_cast<std::size_t>(c.link)];
        out.emplace_back(f.transform(c.a), f.transform(c.b));
    }
    return out;
}

inline ContactReport check_state(const CollisionScene& scene, const std::vector<Pose>& frames) {
    detail::require(static_cast<int>(frames.size()) == scene.frame_count,
                    "check_state: got " + std::to_string(frames.size()) + " frames, scene expects " +
                        std::to_string(scene.frame_count));
    const auto world = world_capsules(scene, frames);
    ContactReport rep;
    auto consider = [&rep](double sep, int i, int j) {
        if (sep < rep.min_separation) {
            rep.min_separation = sep;
            rep.pair = {i, j};
        }
    };
    const int n = static_cast<int>(world.size());
    for (int i = 0; i < n; ++i) {
        const auto& [a, b] = world[i];
        const double r = scene.capsules[i].radius;
        consider(std::min(a.z(), b.z()) - scene.table_height - r, i, ContactReport::kTable);
        for (int j = i + 1; j < n; ++j) {
            if (scene.ignored(i, j)) continue;
            const auto& [c, d] = world[j];
            consider(segment_segment_distance(a, b, c, d) - r - scene.capsules[j].radius, i, j);
        }
    }
    rep.colliding = rep.min_separation < 0.0;
    return rep;
}

}  // namespace reachgym
