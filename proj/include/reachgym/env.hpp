#pragma once

// Gym-style reach environments over the kinematic arm simulator.
//
// Four variants share one simulator and differ only in the reward:
//   MARA                 distance only
//   MARAOrient           distance regulated by orientation error
//   MARACollision        distance, penalized on collision
//   MARACollisionOrient  orient core, penalized on collision
// Every variant ends the episode on collision; only the Collision variants
// fold the collision into the reward.
//
// Actions are per-joint position deltas in [-1, 1] scaled by action_scale,
// then rate-limited to velocity_limit·control_period and clamped to the joint
// limits (a saturating position-controlled servo).

#include <Eigen/Core>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "reachgym/collision.hpp"
#include "reachgym/csv.hpp"
#include "reachgym/error.hpp"
#include "reachgym/kinematics.hpp"
#include "reachgym/math.hpp"
#include "reachgym/reward.hpp"
#include "reachgym/rng.hpp"
#include "reachgym/robot_model.hpp"

namespace reachgym {

enum class Variant { Mara, MaraOrient, MaraCollision, MaraCollisionOrient };

inline const char* variant_name(Variant v) {
    switch (v) {
        case Variant::Mara: return "MARA";
        case Variant::MaraOrient: return "MARAOrient";
        case Variant::MaraCollision: return "MARACollision";
        case Variant::MaraCollisionOrient: return "MARACollisionOrient";
    }
    return "?";
}

inline Variant parse_variant(const std::string& s) {
    for (Variant v : {Variant::Mara, Variant::MaraOrient, Variant::MaraCollision,
                      Variant::MaraCollisionOrient}) {
        if (s == variant_name(v)) return v;
    }
    throw ConfigError("unknown environment variant '" + s +
                      "' (expected MARA, MARAOrient, MARACollision or MARACollisionOrient)");
}

inline bool is_orient(Variant v) {
    return v == Variant::MaraOrient || v == Variant::MaraCollisionOrient;
}

inline bool is_collision(Variant v) {
    return v == Variant::MaraCollision || v == Variant::MaraCollisionOrient;
}

inline constexpr double kMaxServoVelocity = 1.57;  // rad/s

struct EnvConfig {
    Variant variant = Variant::Mara;
    RobotModel model = mara6_model();
    Eigen::VectorXd initial_positions = Eigen::VectorXd::Zero(6);
    Pose target_pose;
    RewardHyperparams reward_params;
    int max_episode_steps = 200;
    double action_scale = 0.025;     // rad per step per unit action
    double velocity_limit = 1.57;    // rad/s, in (0, 1.57]
    double control_period = 0.01;    // s of simulated time per step
    double success_threshold = 0.02; // m, RMS distance
    bool real_speed = false;
    std::uint64_t seed = 0;
    std::uint64_t instance_id = 0;
    /// Resample a reachable, collision-free target on every reset.
    bool randomize_target = false;

    void validate() const {
        model.validate();
        reward_params.validate();
        if (initial_positions.size() != model.dof())
            throw ConfigError("initial_positions has " + std::to_string(initial_positions.size()) +
                              " entries, model has " + std::to_string(model.dof()) + " joints");
        for (int i = 0; i < model.dof(); ++i)
            if (initial_positions[i] < model.joints[i].limit_lo ||
                initial_positions[i] > model.joints[i].limit_hi)
                throw ConfigError("initial position of joint " + std::to_string(i + 1) +
                                  " is outside its limits");
        if (!(velocity_limit > 0.0) || velocity_limit > kMaxServoVelocity)
            throw ConfigError("velocity_limit must be in (0, 1.57] rad/s (servo velocity, keep < 1.57), got " +
                              format_double(velocity_limit));
        if (max_episode_steps < 1) throw ConfigError("max_episode_steps must be >= 1");
        if (!(success_threshold > 0.0)) throw ConfigError("success_threshold must be > 0");
        if (!(action_scale > 0.0)) throw ConfigError("action_scale must be > 0");
        if (!(control_period > 0.0)) throw ConfigError("control_period must be > 0");
        if (std::abs(target_pose.orientation.norm() - 1.0) > 1e-9)
            throw ConfigError("target orientation must be a unit quaternion");
    }
};

/// Target joint configuration behind each built-in model's default target.
inline Eigen::VectorXd default_target_joints(const RobotModel& model) {
    Eigen::VectorXd q = Eigen::VectorXd::Zero(model.dof());
    if (model.name == "mara6") {
        q << 0.5, 1.0, 0.0, 1.2, 0.0, 0.8;  // tool tilted towards the table
    } else if (model.name == "planar2") {
        q << 0.7, -0.9;
    } else {
        for (int i = 0; i < model.dof(); ++i) {
            const auto& j = model.joints[i];
            q[i] = 0.5 * (j.limit_lo + j.limit_hi) + 0.1 * (j.limit_hi - j.limit_lo);
        }
    }
    return q;
}

/// Default config for a variant and model: all-zero start, target at the
/// model's default target joints, per-variant β (1.1 for MARAOrient).
inline EnvConfig default_env_config(Variant variant, RobotModel model = mara6_model()) {
    EnvConfig c;
    c.variant = variant;
    c.initial_positions = Eigen::VectorXd::Zero(model.dof());
    c.target_pose = end_effector_pose(model, default_target_joints(model));
    c.model = std::move(model);
    c.success_threshold = c.reward_params.done;
    if (variant == Variant::MaraOrient) c.reward_params.beta = 1.1;
    if (variant == Variant::MaraCollisionOrient) c.reward_params.beta = 1.5;
    return c;
}

struct Observation {
    Eigen::VectorXd joint_positions;
    Eigen::VectorXd joint_velocities;
    Vec3 ee_to_target = Vec3::Zero();
    Quat ee_orientation;

    /// Flat layout: positions, velocities, ee_to_target, (w, x, y, z).
    Eigen::VectorXd to_vector() const {
        const auto n = joint_positions.size();
        Eigen::VectorXd v(2 * n + 7);
        v.head(n) = joint_positions;
        v.segment(n, n) = joint_velocities;
        v.segment(2 * n, 3) = ee_to_target;
        v.tail(4) << ee_orientation.w, ee_orientation.x, ee_orientation.y, ee_orientation.z;
        return v;
    }

    friend bool operator==(const Observation& a, const Observation& b) {
        return a.to_vector() == b.to_vector();
    }
};

struct StepInfo {
    bool collided = false;
    double distance_x = 0.0;      // m
    double orientation_y = 0.0;   // rad
    bool success = false;
    double min_separation = 0.0;  // m, diagnostics only
};

struct StepResult {
    Observation observation;
    double reward = 0.0;
    bool done = false;
    StepInfo info;
};

class Env {
public:
    explicit Env(EnvConfig config)
        : config_(std::move(config)),
          scene_((config_.validate(), CollisionScene::from_model(config_.model))),
          rng_(make_rng(config_.seed, config_.instance_id, Stream::Env)),
          target_(config_.target_pose) {
        state_ = JointState::zeros(config_.model.dof());
    }

    const EnvConfig& config() const { return config_; }
    const CollisionScene& scene() const { return scene_; }
    int dof() const { return config_.model.dof(); }
    int observation_size() const { return 2 * dof() + 7; }
    int action_size() const { return dof(); }
    int step_count() const { return steps_; }
    bool needs_reset() const { return !started_ || done_; }
    const JointState& joint_state() const { return state_; }
    const Pose& target() const { return target_; }
    const Pose& end_effector() const { return frames_.back(); }
    const std::vector<Pose>& frames() const { return frames_; }

    Observation reset() {
        if (config_.randomize_target) target_ = sample_target();
        state_.positions = config_.initial_positions;
        state_.velocities.setZero();
        steps_ = 0;
        done_ = false;
        started_ = true;
        frames_ = forward_kinematics(config_.model, state_.positions);
        last_tick_ = std::chrono::steady_clock::now();
        return observe();
    }

    StepResult step(std::span<const double> action) {
        detail::require(started_, "step called before reset");
        detail::require(!done_, "step called after the episode ended; call reset first");
        detail::require(static_cast<int>(action.size()) == dof(),
                        "step: action has " + std::to_string(action.size()) + " entries, expected " +
                            std::to_string(dof()));
        const double dt = config_.control_period;
        Eigen::VectorXd next(dof());
        for (int i = 0; i < dof(); ++i) {
            detail::require(std::isfinite(action[i]), "step: non-finite action");
            const JointSpec& j = config_.model.joints[i];
            const double max_step = std::min(config_.velocity_limit, j.velocity_limit) * dt;
            double delta = std::clamp(action[i], -1.0, 1.0) * config_.action_scale;
            delta = std::clamp(delta, -max_step, max_step);
            next[i] = std::clamp(state_.positions[i] + delta, j.limit_lo, j.limit_hi);
        }
        state_.velocities = (next - state_.positions) / dt;
        state_.positions = next;
        ++steps_;
        frames_ = forward_kinematics(config_.model, state_.positions);

        StepResult out;
        const ContactReport contact = check_state(scene_, frames_);
        out.info.collided = contact.colliding;
        out.info.min_separation = contact.min_separation;
        const Pose& ee = frames_.back();
        out.info.distance_x = rms_distance(ee.position, target_.position);
        out.info.orientation_y = quaternion_angle(ee.orientation, target_.orientation);
        out.info.success = !contact.colliding && out.info.distance_x < config_.success_threshold;
        out.reward = compute_reward(out.info);
        done_ = out.info.collided || out.info.success || steps_ >= config_.max_episode_steps;
        out.done = done_;
        out.observation = observe();

        if (config_.real_speed) {
            last_tick_ += std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                std::chrono::duration<double>(dt));
            std::this_thread::sleep_until(last_tick_);
        }
        return out;
    }

    StepResult step(const Eigen::VectorXd& action) {
        return step(std::span<const double>(action.data(), static_cast<std::size_t>(action.size())));
    }

    /// Override the target for the current and later episodes.
    void set_target(const Pose& target) { target_ = target; }

private:
    double compute_reward(const StepInfo& info) const {
        const auto& h = config_.reward_params;
        switch (config_.variant) {
            case Variant::Mara: return reward_mara(info.distance_x, h);
            case Variant::MaraOrient: return reward_orient_core(info.distance_x, info.orientation_y, h);
            case Variant::MaraCollision: return reward_collision(info.distance_x, info.collided, h);
            case Variant::MaraCollisionOrient:
                return reward_collision_orient(info.distance_x, info.orientation_y, info.collided, h);
        }
        return 0.0;
    }

    Observation observe() const {
        Observation o;
        o.joint_positions = state_.positions;
        o.joint_velocities = state_.velocities;
        o.ee_to_target = target_.position - frames_.back().position;
        o.ee_orientation = frames_.back().orientation.canonical();
        return o;
    }

    Pose sample_target() {
        const RobotModel& m = config_.model;
        Eigen::VectorXd q(m.dof());
        for (int attempt = 0; attempt < 1000; ++attempt) {
            for (int i = 0; i < m.dof(); ++i) {
                const double mid = 0.5 * (m.joints[i].limit_lo + m.joints[i].limit_hi);
                const double half = 0.25 * (m.joints[i].limit_hi - m.joints[i].limit_lo);
                q[i] = std::uniform_real_distribution<double>(mid - half, mid + half)(rng_);
            }
            const auto frames = forward_kinematics(m, q);
            if (!check_state(scene_, frames).colliding) return frames.back();
        }
        throw ConfigError("could not sample a collision-free target");
    }

    EnvConfig config_;
    CollisionScene scene_;
    Rng rng_;
    Pose target_;
    JointState state_;
    std::vector<Pose> frames_;
    int steps_ = 0;
    bool done_ = false;
    bool started_ = false;
    std::chrono::steady_clock::time_point last_tick_{};
};

// ---------------------------------------------------------------------------
// Registry

using EnvFactory = std::function<Env(EnvConfig)>;

/// Variant name -> constructor. The factory forces the config's variant.
inline const std::map<std::string, EnvFactory>& env_registry() {
    static const std::map<std::string, EnvFactory> registry = [] {
        std::map<std::string, EnvFactory> r;
        for (Variant v : {Variant::Mara, Variant::MaraOrient, Variant::MaraCollision,
                          Variant::MaraCollisionOrient}) {
            r.emplace(variant_name(v), [v](EnvConfig c) {
                c.variant = v;
                return Env(std::move(c));
            });
        }
        return r;
    }();
    return registry;
}

inline Env make_env(EnvConfig config) { return Env(std::move(config)); }

inline Env make_env(const std::string& variant, EnvConfig config) {
    const auto& reg = env_registry();
    const auto it = reg.find(variant);
    if (it == reg.end()) throw ConfigError("unknown environment variant '" + variant + "'");
    return it->second(std::move(config));
}

// ---------------------------------------------------------------------------
// Episode logs and trajectory export

struct StepRecord {
    int episode = 0;
    int step = 0;  // 1-based within the episode
    Eigen::VectorXd q;
    Vec3 ee = Vec3::Zero();
    double reward = 0.0;
    bool done = false;
    bool collided = false;
    bool success = false;
    double distance_x = 0.0;
};

struct EpisodeSummary {
    double total_reward = 0.0;
    int length = 0;
    bool collided = false;
    bool success = false;
    double final_distance = 0.0;
    Pose final_pose;
};

struct EpisodeLog {
    std::vector<StepRecord> steps;
    std::vector<EpisodeSummary> episodes;  // completed episodes only
    int resets = 0;

    double mean_step_reward() const {
        if (steps.empty()) return 0.0;
        double s = 0.0;
        for (const auto& r : steps) s += r.reward;
        return s / static_cast<double>(steps.size());
    }
};

/// Appends one step to the log, closing the episode summary when done.
inline void record_step(EpisodeLog& log, EpisodeSummary& current, int episode, const Env& env,
                        const StepResult& r) {
    StepRecord rec;
    rec.episode = episode;
    rec.step = env.step_count();
    rec.q = env.joint_state().positions;
    rec.ee = env.end_effector().position;
    rec.reward = r.reward;
    rec.done = r.done;
    rec.collided = r.info.collided;
    rec.success = r.info.success;
    rec.distance_x = r.info.distance_x;
    log.steps.push_back(std::move(rec));
    current.total_reward += r.reward;
    current.length = env.step_count();
    if (r.done) {
        current.collided = r.info.collided;
        current.success = r.info.success;
        current.final_distance = r.info.distance_x;
        current.final_pose = env.end_effector();
        log.episodes.push_back(current);
        current = {};
    }
}

/// Uniform random actions for n_steps, resetting whenever an episode ends.
inline EpisodeLog run_random_agent(const EnvConfig& config, int n_steps) {
    Env env(config);
    Rng rng = make_rng(config.seed, config.instance_id, Stream::Agent);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    EpisodeLog log;
    EpisodeSummary current;
    int episode = 0;
    Eigen::VectorXd action(env.action_size());
    for (int t = 0; t < n_steps; ++t) {
        if (env.needs_reset()) {
            env.reset();
            ++log.resets;
            ++episode;
        }
        for (int i = 0; i < action.size(); ++i) action[i] = u(rng);
        record_step(log, current, episode, env, env.step(action));
    }
    return log;
}

/// Per-step CSV: step,q1..qn,ee_x,ee_y,ee_z,reward,done
inline std::vector<std::string> trajectory_header(int dof) {
    std::vector<std::string> h{"step"};
    for (int i = 1; i <= dof; ++i) h.push_back("q" + std::to_string(i));
    for (const char* c : {"ee_x", "ee_y", "ee_z", "reward", "done"}) h.emplace_back(c);
    return h;
}

inline void write_trajectory_csv(std::ostream& out, const EpisodeLog& log, int dof) {
    write_csv_header(out, trajectory_header(dof));
    for (const auto& r : log.steps) {
        std::vector<double> row{static_cast<double>(r.step)};
        for (int i = 0; i < r.q.size(); ++i) row.push_back(r.q[i]);
        row.insert(row.end(), {r.ee.x(), r.ee.y(), r.ee.z(), r.reward, r.done ? 1.0 : 0.0});
        write_csv_row(out, row);
    }
}

/// Parses a trajectory CSV back into step records (episode numbering is
/// reconstructed from the done flags).
inline EpisodeLog read_trajectory_csv(std::istream& in) {
    const CsvTable t = parse_csv(in, {"step", "q1"});
    const int dof = static_cast<int>(t.header.size()) - 6;
    if (dof < 1 || t.header != trajectory_header(dof))
        throw ParseError("trajectory CSV header does not match step,q1..qn,ee_x,ee_y,ee_z,reward,done");
    EpisodeLog log;
    int episode = 1;
    for (const auto& row : t.rows) {
        StepRecord r;
        r.episode = episode;
        r.step = static_cast<int>(row[0]);
        r.q = Eigen::Map<const Eigen::VectorXd>(row.data() + 1, dof);
        r.ee = Vec3(row[dof + 1], row[dof + 2], row[dof + 3]);
        r.reward = row[dof + 4];
        r.done = row[dof + 5] != 0.0;
        if (r.done) ++episode;
        log.steps.push_back(std::move(r));
    }
    return log;
}

// ---------------------------------------------------------------------------
// Config file (JSON)

inline constexpr int kEnvConfigFormatVersion = 1;

inline nlohmann::json env_config_to_json(const EnvConfig& c) {
    using detail::to_json;
    nlohmann::json j;
    j["format_version"] = kEnvConfigFormatVersion;
    j["variant"] = variant_name(c.variant);
    j["model"] = model_to_json(c.model);
    j["initial_positions"] = std::vector<double>(c.initial_positions.data(),
                                                 c.initial_positions.data() + c.initial_positions.size());
    j["target"] = detail::pose_to_json(c.target_pose);
    const auto& h = c.reward_params;
    j["reward"] = {{"alpha", h.alpha}, {"beta", h.beta},   {"gamma", h.gamma},
                   {"delta", h.delta}, {"eta", h.eta},     {"done", h.done},
                   {"collision_orient_exponent", h.collision_orient_exponent}};
    j["max_episode_steps"] = c.max_episode_steps;
    j["action_scale"] = c.action_scale;
    j["velocity_limit"] = c.velocity_limit;
    j["control_period"] = c.control_period;
    j["success_threshold"] = c.success_threshold;
    j["real_speed"] = c.real_speed;
    j["seed"] = c.seed;
    j["instance_id"] = c.instance_id;
    j["randomize_target"] = c.randomize_target;
    return j;
}

/// Reads an environment config. `model` may be a built-in name, a path
/// (relative to `base_dir`) or an inline model object. Unspecified fields
/// take the variant defaults; `target_joints` places the target at FK(q).
inline EnvConfig env_config_from_json(const nlohmann::json& j,
                                      const std::filesystem::path& base_dir = {}) {
    try {
        const int version = j.value("format_version", kEnvConfigFormatVersion);
        if (version != kEnvConfigFormatVersion)
            throw ConfigError("unsupported env config format_version " + std::to_string(version));
        const Variant variant = parse_variant(j.value("variant", std::string("MARA")));
        RobotModel model = mara6_model();
        if (j.contains("model")) {
            const auto& mj = j["model"];
            if (mj.is_string()) {
                const std::string s = mj.get<std::string>();
                if (s == "mara6" || s == "planar2")
                    model = builtin_model(s);
                else
                    model = load_model(base_dir / s);
            } else {
                model = model_from_json(mj);
            }
        }
        EnvConfig c = default_env_config(variant, model);
        if (j.contains("initial_positions")) {
            const auto v = j["initial_positions"].get<std::vector<double>>();
            c.initial_positions = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
        }
        if (j.contains("target_joints")) {
            const auto v = j["target_joints"].get<std::vector<double>>();
            if (static_cast<int>(v.size()) != c.model.dof())
                throw ConfigError("target_joints length does not match the model");
            c.target_pose = end_effector_pose(
                c.model, Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
        }
        if (j.contains("target")) c.target_pose = detail::pose_from_json(j["target"], "target");
        if (j.contains("reward")) {
            const auto& r = j["reward"];
            auto& h = c.reward_params;
            h.alpha = r.value("alpha", h.alpha);
            h.beta = r.value("beta", h.beta);
            h.gamma = r.value("gamma", h.gamma);
            h.delta = r.value("delta", h.delta);
            h.eta = r.value("eta", h.eta);
            h.done = r.value("done", h.done);
            h.collision_orient_exponent = r.value("collision_orient_exponent", h.collision_orient_exponent);
            if (!j.contains("success_threshold")) c.success_threshold = h.done;
        }
        c.max_episode_steps = j.value("max_episode_steps", c.max_episode_steps);
        c.action_scale = j.value("action_scale", c.action_scale);
        c.velocity_limit = j.value("velocity_limit", c.velocity_limit);
        c.control_period = j.value("control_period", c.control_period);
        c.success_threshold = j.value("success_threshold", c.success_threshold);
        c.real_speed = j.value("real_speed", c.real_speed);
        c.seed = j.value("seed", c.seed);
        c.instance_id = j.value("instance_id", c.instance_id);
        c.randomize_target = j.value("randomize_target", c.randomize_target);
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("env config: ") + e.what());
    }
}

inline EnvConfig load_env_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open env config " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("env config " + path.string() + ": " + e.what());
    }
    return env_config_from_json(j, path.parent_path());
}

inline void save_env_config(const EnvConfig& c, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write env config " + path.string());
    out << env_config_to_json(c).dump(2) << '\n';
}

}  // namespace reachgym
