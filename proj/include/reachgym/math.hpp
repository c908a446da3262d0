#pragma once

// Vector and quaternion primitives.
//
// Quaternions are scalar-first (w, x, y, z) and compose with the Hamilton
// product. `a * b` applies b first, then a, matching rotation matrices.

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "reachgym/error.hpp"

namespace reachgym {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct Quat {
    double w = 1.0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    static Quat identity() { return {}; }

    /// Rotation of `angle` radians about `axis` (normalized internally).
    static Quat from_axis_angle(const Vec3& axis, double angle) {
        const double n = axis.norm();
        detail::require(n > 0.0, "from_axis_angle: zero axis");
        const double s = std::sin(0.5 * angle) / n;
        return {std::cos(0.5 * angle), axis.x() * s, axis.y() * s, axis.z() * s};
    }

    double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

    Quat normalized() const {
        const double n = norm();
        detail::require(n > 0.0, "quaternion has zero norm");
        return {w / n, x / n, y / n, z / n};
    }

    Quat conjugate() const { return {w, -x, -y, -z}; }
    Quat operator-() const { return {-w, -x, -y, -z}; }

    friend Quat operator*(const Quat& a, const Quat& b) {
        return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
                a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
                a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
                a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
    }

    /// Rotate v by this (assumed unit) quaternion.
    Vec3 rotate(const Vec3& v) const {
        const Vec3 u(x, y, z);
        const Vec3 t = 2.0 * u.cross(v);
        return v + w * t + u.cross(t);
    }

    Mat3 to_matrix() const {
        Mat3 m;
        m << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
             2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
             2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
        return m;
    }

    /// Sign-canonical copy: w >= 0 (q and -q are the same rotation).
    Quat canonical() const { return w < 0.0 ? -(*this) : *this; }

    std::array<double, 4> coeffs() const { return {w, x, y, z}; }

    friend bool operator==(const Quat&, const Quat&) = default;
};

inline double dot(const Quat& a, const Quat& b) {
    return a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
}

struct Pose {
    Vec3 position = Vec3::Zero();
    Quat orientation;

    /// this ∘ other: express `other` (given in this frame) in the parent frame.
    Pose compose(const Pose& other) const {
        return {position + orientation.rotate(other.position), orientation * other.orientation};
    }

    Vec3 transform(const Vec3& p) const { return position + orientation.rotate(p); }
};

/// Geodesic angle between two orientations, 2·acos(|w of qa ⊗ conj(qb)|), in [0, π].
/// Inputs are renormalized; a zero quaternion is a contract violation.
inline double quaternion_angle(const Quat& qa, const Quat& qb) {
    detail::require(qa.norm() > 0.0 && qb.norm() > 0.0, "quaternion_angle: zero quaternion");
    const Quat rel = qa.normalized() * qb.normalized().conjugate();
    const double c = std::clamp(std::abs(rel.w), 0.0, 1.0);
    return 2.0 * std::acos(c);
}

/// Root-mean-square per-axis distance: ‖a − b‖ / √3.
inline double rms_distance(const Vec3& p_robot, const Vec3& p_target) {
    const Vec3 d = p_robot - p_target;
    return std::sqrt(d.squaredNorm() / 3.0);
}

/// Fixed-axis XYZ angles (roll about x, then pitch about y, then yaw about z;
/// R = Rz·Ry·Rx) of a unit quaternion, radians.
inline Vec3 fixed_xyz_angles(const Quat& q) {
    const Mat3 r = q.normalized().to_matrix();
    const double pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
    const double roll = std::atan2(r(2, 1), r(2, 2));
    const double yaw = std::atan2(r(1, 0), r(0, 0));
    return {roll, pitch, yaw};
}

inline constexpr double kPi = std::numbers::pi;

}  // namespace reachgym
