#pragma once

// Kinematic chain description of a serial revolute arm standing on a table,
// plus the capsules that approximate its links for collision checks.
//
// Frame indexing used everywhere (FK output, capsule `link`):
//   0        base frame (link 0)
//   1..n     frame of link i, i.e. after joint i has rotated
//   n + 1    end-effector (tool) frame

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "reachgym/error.hpp"
#include "reachgym/math.hpp"

namespace reachgym {

struct JointSpec {
    std::string name;
    Vec3 axis = Vec3::UnitZ();
    Vec3 origin_offset = Vec3::Zero();  // parent frame -> joint frame
    Quat origin_rotation;
    double limit_lo = -kPi;
    double limit_hi = kPi;
    double velocity_limit = 1.57;  // rad/s
};

struct CapsuleSpec {
    int link = 0;  // frame index, see header comment
    Vec3 a = Vec3::Zero();
    Vec3 b = Vec3::Zero();
    double radius = 0.05;
};

class RobotModel {
public:
    static constexpr int kFormatVersion = 1;

    std::string name;
    Pose base_pose;
    std::vector<JointSpec> joints;
    Pose tool_offset;
    double table_height = 0.0;
    std::vector<CapsuleSpec> capsules;
    /// Extra capsule index pairs to skip, on top of the automatic adjacent-link pairs.
    std::vector<std::pair<int, int>> extra_ignore_pairs;

    int dof() const { return static_cast<int>(joints.size()); }
    int frame_count() const { return dof() + 2; }

    /// Throws ConfigError on the first violated invariant.
    void validate() const {
        if (joints.empty()) throw ConfigError("robot model '" + name + "' has no joints");
        if (std::abs(base_pose.orientation.norm() - 1.0) > 1e-9)
            throw ConfigError("base_pose orientation is not unit-norm");
        if (std::abs(tool_offset.orientation.norm() - 1.0) > 1e-9)
            throw ConfigError("tool_offset orientation is not unit-norm");
        for (const auto& j : joints) {
            if (std::abs(j.axis.norm() - 1.0) >= 1e-12)
                throw ConfigError("joint '" + j.name + "': axis is not unit-norm");
            if (std::abs(j.origin_rotation.norm() - 1.0) > 1e-9)
                throw ConfigError("joint '" + j.name + "': origin_rotation is not unit-norm");
            if (!(j.limit_lo < j.limit_hi))
                throw ConfigError("joint '" + j.name + "': limit_lo must be < limit_hi");
            if (!(j.velocity_limit > 0.0))
                throw ConfigError("joint '" + j.name + "': velocity_limit must be > 0");
        }
        for (std::size_t i = 0; i < capsules.size(); ++i) {
            const auto& c = capsules[i];
            if (!(c.radius > 0.0))
                throw ConfigError("capsule " + std::to_string(i) + ": radius must be > 0");
            if (c.link < 0 || c.link >= frame_count())
                throw ConfigError("capsule " + std::to_string(i) + ": link index out of range");
        }
        for (auto [p, q] : extra_ignore_pairs) {
            const int n = static_cast<int>(capsules.size());
            if (p < 0 || q < 0 || p >= n || q >= n)
                throw ConfigError("ignore pair references a missing capsule");
        }
    }

    Eigen::VectorXd clamp_positions(const Eigen::VectorXd& q) const {
        detail::require(q.size() == dof(), "clamp_positions: dimension mismatch");
        Eigen::VectorXd out(q.size());
        for (int i = 0; i < dof(); ++i)
            out[i] = std::clamp(q[i], joints[i].limit_lo, joints[i].limit_hi);
        return out;
    }
};

/// 6-DoF MARA-like arm mounted at the table centre. Joint axes alternate z/y,
/// links stack along +z so the all-zero pose stands upright:
///   table -> j1 0.10 -> j2 0.10 -> j3 0.35 -> j4 0.10 -> j5 0.25 -> j6 0.10 -> tool 0.10
/// Home end-effector: (0, 0, 1.10), identity orientation. Reach from the
/// shoulder (j2) is 0.90 m. These are approximate, not measured MARA values.
inline RobotModel mara6_model() {
    RobotModel m;
    m.name = "mara6";
    const double offsets[6] = {0.10, 0.10, 0.35, 0.10, 0.25, 0.10};
    const double limits[6] = {3.14, 2.3, 3.14, 2.6, 3.14, 2.3};
    for (int i = 0; i < 6; ++i) {
        JointSpec j;
        j.name = "joint" + std::to_string(i + 1);
        j.axis = (i % 2 == 0) ? Vec3::UnitZ() : Vec3::UnitY();
        j.origin_offset = Vec3(0.0, 0.0, offsets[i]);
        j.limit_lo = -limits[i];
        j.limit_hi = limits[i];
        j.velocity_limit = 1.57;
        m.joints.push_back(j);
    }
    m.tool_offset.position = Vec3(0.0, 0.0, 0.10);
    // Each capsule spans its link from the joint to the next joint origin.
    const double lengths[6] = {0.10, 0.35, 0.10, 0.25, 0.10, 0.10};
    const double radii[6] = {0.05, 0.045, 0.04, 0.04, 0.035, 0.03};
    for (int i = 0; i < 6; ++i)
        m.capsules.push_back({i + 1, Vec3::Zero(), Vec3(0.0, 0.0, lengths[i]), radii[i]});
    return m;
}

/// Reduced 2-DoF planar arm: two z-axis joints, links 0.5 m and 0.4 m,
/// moving in the horizontal plane 0.3 m above the table. Home end-effector
/// (0.9, 0, 0.3).
inline RobotModel planar2_model() {
    RobotModel m;
    m.name = "planar2";
    JointSpec j1;
    j1.name = "joint1";
    j1.origin_offset = Vec3(0.0, 0.0, 0.3);
    j1.limit_lo = -3.14;
    j1.limit_hi = 3.14;
    JointSpec j2 = j1;
    j2.name = "joint2";
    j2.origin_offset = Vec3(0.5, 0.0, 0.0);
    j2.limit_lo = -2.6;
    j2.limit_hi = 2.6;
    m.joints = {j1, j2};
    m.tool_offset.position = Vec3(0.4, 0.0, 0.0);
    m.capsules.push_back({1, Vec3::Zero(), Vec3(0.5, 0.0, 0.0), 0.04});
    m.capsules.push_back({2, Vec3::Zero(), Vec3(0.4, 0.0, 0.0), 0.035});
    return m;
}

/// Built-in model by name ("mara6", "planar2"); ConfigError otherwise.
inline RobotModel builtin_model(const std::string& name) {
    if (name == "mara6") return mara6_model();
    if (name == "planar2") return planar2_model();
    throw ConfigError("unknown built-in robot model '" + name + "'");
}

// ---------------------------------------------------------------------------
// JSON description file

namespace detail {

inline Vec3 vec3_from_json(const nlohmann::json& j, const char* what) {
    if (!j.is_array() || j.size() != 3) throw ConfigError(std::string(what) + ": expected [x, y, z]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline Quat quat_from_json(const nlohmann::json& j, const char* what) {
    if (!j.is_array() || j.size() != 4)
        throw ConfigError(std::string(what) + ": expected [w, x, y, z]");
    Quat q{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
    if (q.norm() == 0.0) throw ConfigError(std::string(what) + ": zero quaternion");
    return q.normalized();
}

inline nlohmann::json to_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }
inline nlohmann::json to_json(const Quat& q) { return {q.w, q.x, q.y, q.z}; }

inline nlohmann::json pose_to_json(const Pose& p) {
    return {{"position", to_json(p.position)}, {"orientation", to_json(p.orientation)}};
}

inline Pose pose_from_json(const nlohmann::json& j, const char* what) {
    Pose p;
    if (j.contains("position")) p.position = vec3_from_json(j["position"], what);
    if (j.contains("orientation")) p.orientation = quat_from_json(j["orientation"], what);
    return p;
}

}  // namespace detail

inline nlohmann::json model_to_json(const RobotModel& m) {
    using detail::to_json;
    nlohmann::json j;
    j["format_version"] = RobotModel::kFormatVersion;
    j["name"] = m.name;
    j["base_pose"] = detail::pose_to_json(m.base_pose);
    j["tool_offset"] = detail::pose_to_json(m.tool_offset);
    j["table_height"] = m.table_height;
    for (const auto& jt : m.joints) {
        j["joints"].push_back({{"name", jt.name},
                               {"axis", to_json(jt.axis)},
                               {"origin_offset", to_json(jt.origin_offset)},
                               {"origin_rotation", to_json(jt.origin_rotation)},
                               {"limit_lo", jt.limit_lo},
                               {"limit_hi", jt.limit_hi},
                               {"velocity_limit", jt.velocity_limit}});
    }
    j["capsules"] = nlohmann::json::array();
    for (const auto& c : m.capsules)
        j["capsules"].push_back(
            {{"link", c.link}, {"a", to_json(c.a)}, {"b", to_json(c.b)}, {"radius", c.radius}});
    j["ignore_pairs"] = nlohmann::json::array();
    for (auto [p, q] : m.extra_ignore_pairs) j["ignore_pairs"].push_back({p, q});
    return j;
}

inline RobotModel model_from_json(const nlohmann::json& j) {
    try {
        const int version = j.at("format_version").get<int>();
        if (version != RobotModel::kFormatVersion)
            throw ConfigError("unsupported robot model format_version " + std::to_string(version));
        RobotModel m;
        m.name = j.value("name", std::string("custom"));
        if (j.contains("base_pose")) m.base_pose = detail::pose_from_json(j["base_pose"], "base_pose");
        if (j.contains("tool_offset"))
            m.tool_offset = detail::pose_from_json(j["tool_offset"], "tool_offset");
        m.table_height = j.value("table_height", 0.0);
        for (const auto& jj : j.at("joints")) {
            JointSpec s;
            s.name = jj.value("name", "joint" + std::to_string(m.joints.size() + 1));
            const Vec3 axis = detail::vec3_from_json(jj.at("axis"), "axis");
            if (axis.norm() == 0.0) throw ConfigError("joint '" + s.name + "': zero axis");
            s.axis = axis.normalized();
            if (jj.contains("origin_offset"))
                s.origin_offset = detail::vec3_from_json(jj["origin_offset"], "origin_offset");
            if (jj.contains("origin_rotation"))
                s.origin_rotation = detail::quat_from_json(jj["origin_rotation"], "origin_rotation");
            s.limit_lo = jj.at("limit_lo").get<double>();
            s.limit_hi = jj.at("limit_hi").get<double>();
            s.velocity_limit = jj.value("velocity_limit", 1.57);
            m.joints.push_back(s);
        }
        if (j.contains("capsules")) {
            for (const auto& cj : j["capsules"]) {
                CapsuleSpec c;
                c.link = cj.at("link").get<int>();
                c.a = detail::vec3_from_json(cj.at("a"), "capsule.a");
                c.b = detail::vec3_from_json(cj.at("b"), "capsule.b");
                c.radius = cj.at("radius").get<double>();
                m.capsules.push_back(c);
            }
        }
        if (j.contains("ignore_pairs"))
            for (const auto& p : j["ignore_pairs"])
                m.extra_ignore_pairs.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
        m.validate();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("robot model: ") + e.what());
    }
}

inline RobotModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open robot model file " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("robot model " + path.string() + ": " + e.what());
    }
    return model_from_json(j);
}

inline void save_model(const RobotModel& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write robot model file " + path.string());
    out << model_to_json(m).dump(2) << '\n';
}

}  // namespace reachgym
