// Forward kinematics and collision clearance of the 6-DoF arm along a shoulder sweep.

#include <cstdio>

#include "reachgym/collision.hpp"
#include "reachgym/kinematics.hpp"

int main() {
    using namespace reachgym;
    const RobotModel model = mara6_model();
    const CollisionScene scene = CollisionScene::from_model(model);
    Eigen::VectorXd q = Eigen::VectorXd::Zero(model.dof());
    std::printf("  q2 [rad]   ee x      ee y      ee z     clearance [m]  pair\n");
    for (int k = 0; k <= 12; ++k) {
        q[1] = 0.2 * k;
        const auto frames = forward_kinematics(model, q);
        const ContactReport c = check_state(scene, frames);
        const Vec3& p = frames.back().position;
        std::printf("  %5.2f   %8.4f  %8.4f  %8.4f   %9.4f     ", q[1], p.x(), p.y(), p.z(), c.min_separation);
        if (c.pair.second == ContactReport::kTable)
            std::printf("capsule %d / table%s\n", c.pair.first, c.colliding ? "  (contact)" : "");
        else
            std::printf("capsule %d / capsule %d%s\n", c.pair.first, c.pair.second, c.colliding ? "  (contact)" : "");
    }
}
