#pragma once

#include <Eigen/Core>

#include <vector>

#include "reachgym/error.hpp"
#include "reachgym/math.hpp"
#include "reachgym/robot_model.hpp"

namespace reachgym {

struct JointState {
    Eigen::VectorXd positions;   // rad
    Eigen::VectorXd velocities;  // rad/s

    static JointState zeros(int dof) {
        return {Eigen::VectorXd::Zero(dof), Eigen::VectorXd::Zero(dof)};
    }
};

/// World poses of every frame: base, each link after its joint, end-effector
/// (see robot_model.hpp for indexing). Frame i+1 = frame i ∘ (offset_i, rot_i) ∘ R(axis_i, q_i).
inline std::vector<Pose> forward_kinematics(const RobotModel& model, const Eigen::VectorXd& q) {
    detail::require(q.size() == model.dof(), "forward_kinematics: joint vector has " +
                                                 std::to_string(q.size()) + " entries, model has " +
                                                 std::to_string(model.dof()) + " joints");
    std::vector<Pose> frames;
    frames.reserve(model.frame_count());
    frames.push_back(model.base_pose);
    for (int i = 0; i < model.dof(); ++i) {
        const JointSpec& j = model.joints[i];
        const Pose fixed{j.origin_offset, j.origin_rotation};
        const Pose motion{Vec3::Zero(), Quat::from_axis_angle(j.axis, q[i])};
        Pose next = frames.back().compose(fixed).compose(motion);
        next.orientation = next.orientation.normalized();
        frames.push_back(next);
    }
    Pose ee = frames.back().compose(model.tool_offset);
    ee.orientation = ee.orientation.normalized();
    frames.push_back(ee);
    return frames;
}

inline std::vector<Pose> forward_kinematics(const RobotModel& model, const JointState& state) {
    return forward_kinematics(model, state.positions);
}

inline Pose end_effector_pose(const RobotModel& model, const Eigen::VectorXd& q) {
    return forward_kinematics(model, q).back();
}

}  // namespace reachgym
