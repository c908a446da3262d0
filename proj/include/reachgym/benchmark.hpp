#pragma once

// Accuracy benchmark: run a policy for n episodes and report the signed
// final end-effector error per axis (mm), plus the orientation error per
// axis (deg) for the Orient variants.
//
// An evaluation episode stops at success, collision or the step cap; the
// error is measured at the final step. Orientation error is the fixed-axis
// XYZ decomposition of conj(target)⊗ee.

#include <Eigen/Core>
#include <json.hpp>

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "reachgym/checkpoint.hpp"
#include "reachgym/env.hpp"
#include "reachgym/error.hpp"
#include "reachgym/math.hpp"
#include "reachgym/rng.hpp"

namespace reachgym {

struct AxisStat {
    double mean = 0.0;
    double stddev = 0.0;  // population (ddof = 0)
};

struct AccuracyReport {
    std::string variant;
    int n_runs = 0;
    int successes = 0;
    int collisions = 0;
    std::array<AxisStat, 3> position_mm{};       // x, y, z
    std::array<double, 3> position_abs_mm{};     // mean |error|
    std::optional<std::array<AxisStat, 3>> orientation_deg;  // roll, pitch, yaw
    double mean_final_distance_m = 0.0;          // RMS distance at the final step
};

/// Observation -> action. The Env is exposed for scripted policies.
using PolicyFn = std::function<Eigen::VectorXd(const Observation&, const Env&, Rng&)>;

namespace detail {

inline std::array<AxisStat, 3> axis_stats(const std::vector<Vec3>& samples) {
    std::array<AxisStat, 3> out{};
    const double n = static_cast<double>(samples.size());
    for (int a = 0; a < 3; ++a) {
        double m = 0.0;
        for (const auto& s : samples) m += s[a];
        m /= n;
        double v = 0.0;
        for (const auto& s : samples) v += (s[a] - m) * (s[a] - m);
        out[a] = {m, std::sqrt(v / n)};
    }
    return out;
}

}  // namespace detail

inline AccuracyReport benchmark(const PolicyFn& policy, const EnvConfig& config, int n_runs = 10,
                                std::uint64_t seed = 0) {
    if (n_runs < 1) throw ContractViolation("benchmark: no completed runs (n_runs must be >= 1)");
    Env env(config);
    Rng rng = make_rng(seed, config.instance_id, Stream::Eval);
    AccuracyReport rep;
    rep.variant = variant_name(config.variant);
    std::vector<Vec3> pos_err, rot_err;
    double dist_sum = 0.0;
    for (int run = 0; run < n_runs; ++run) {
        Observation o = env.reset();
        StepResult r;
        do {
            r = env.step(policy(o, env, rng));
            o = r.observation;
        } while (!r.done);
        const Pose& ee = env.end_effector();
        const Pose& target = env.target();
        pos_err.push_back((ee.position - target.position) * 1000.0);
        rot_err.push_back(fixed_xyz_angles(target.orientation.conjugate() * ee.orientation) * (180.0 / kPi));
        dist_sum += r.info.distance_x;
        rep.successes += r.info.success ? 1 : 0;
        rep.collisions += r.info.collided ? 1 : 0;
        ++rep.n_runs;
    }
    rep.position_mm = detail::axis_stats(pos_err);
    for (int a = 0; a < 3; ++a) {
        for (const auto& e : pos_err) rep.position_abs_mm[a] += std::abs(e[a]);
        rep.position_abs_mm[a] /= rep.n_runs;
    }
    if (is_orient(config.variant)) rep.orientation_deg = detail::axis_stats(rot_err);
    rep.mean_final_distance_m = dist_sum / rep.n_runs;
    return rep;
}

/// Stochastic evaluation by default, as in the accuracy tables.
inline AccuracyReport benchmark(const TrainedPolicy& policy, const EnvConfig& config, int n_runs = 10,
                                std::uint64_t seed = 0, bool deterministic = false) {
    const Env probe(config);
    if (policy.params.shape().obs_dim != probe.observation_size() ||
        policy.params.shape().act_dim != probe.action_size())
        throw LoadError("policy architecture does not match the environment's observation/action widths");
    return benchmark(
        [&](const Observation& o, const Env&, Rng& rng) { return policy.act(o.to_vector(), rng, deterministic); },
        config, n_runs, seed);
}

// ---------------------------------------------------------------------------
// Presentation and serialization

inline std::string format_report(const AccuracyReport& r) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(2);
    auto pm = [](const AxisStat& s) {
        std::ostringstream c;
        c << std::fixed << std::setprecision(2) << s.mean << "±" << s.stddev;
        return c.str();
    };
    out << "Environment: " << r.variant << "   runs: " << r.n_runs << "   success: " << r.successes << '/'
        << r.n_runs << "   collisions: " << r.collisions << '\n';
    out << "Distance (mm)       x                y                z\n";
    out << "  mean±std   ";
    for (const auto& s : r.position_mm) out << std::setw(17) << std::left << pm(s);
    out << "\n  mean |e|   ";
    for (double v : r.position_abs_mm) out << std::setw(17) << std::left << v;
    out << '\n';
    if (r.orientation_deg) {
        out << "Orientation (deg)   roll             pitch            yaw\n  mean±std   ";
        for (const auto& s : *r.orientation_deg) out << std::setw(17) << std::left << pm(s);
        out << '\n';
    }
    out << std::setprecision(4) << "Mean final RMS distance: " << r.mean_final_distance_m << " m\n";
    return out.str();
}

inline nlohmann::json report_to_json(const AccuracyReport& r) {
    auto block = [](const std::array<AxisStat, 3>& a, const char* n0, const char* n1, const char* n2) {
        nlohmann::json j;
        const char* names[3] = {n0, n1, n2};
        for (int i = 0; i < 3; ++i) j[names[i]] = {{"mean", a[i].mean}, {"std", a[i].stddev}};
        return j;
    };
    nlohmann::json j;
    j["variant"] = r.variant;
    j["n_runs"] = r.n_runs;
    j["successes"] = r.successes;
    j["collisions"] = r.collisions;
    j["position_mm"] = block(r.position_mm, "x", "y", "z");
    j["position_abs_mm"] = {{"x", r.position_abs_mm[0]}, {"y", r.position_abs_mm[1]}, {"z", r.position_abs_mm[2]}};
    if (r.orientation_deg) j["orientation_deg"] = block(*r.orientation_deg, "roll", "pitch", "yaw");
    j["mean_final_distance_m"] = r.mean_final_distance_m;
    return j;
}

inline AccuracyReport report_from_json(const nlohmann::json& j) {
    try {
        auto block = [](const nlohmann::json& b, const char* n0, const char* n1, const char* n2) {
            std::array<AxisStat, 3> a{};
            const char* names[3] = {n0, n1, n2};
            for (int i = 0; i < 3; ++i) a[i] = {b.at(names[i]).at("mean").get<double>(), b.at(names[i]).at("std").get<double>()};
            return a;
        };
        AccuracyReport r;
        r.variant = j.at("variant").get<std::string>();
        r.n_runs = j.at("n_runs").get<int>();
        r.successes = j.at("successes").get<int>();
        r.collisions = j.at("collisions").get<int>();
        r.position_mm = block(j.at("position_mm"), "x", "y", "z");
        const auto& abs = j.at("position_abs_mm");
        r.position_abs_mm = {abs.at("x").get<double>(), abs.at("y").get<double>(), abs.at("z").get<double>()};
        if (j.contains("orientation_deg")) r.orientation_deg = block(j["orientation_deg"], "roll", "pitch", "yaw");
        r.mean_final_distance_m = j.at("mean_final_distance_m").get<double>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("accuracy report: ") + e.what());
    }
}

inline void save_report(const AccuracyReport& r, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write report " + path.string());
    out << report_to_json(r).dump(2) << '\n';
}

inline AccuracyReport load_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open report " + path.string());
    try {
        return report_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("report " + path.string() + ": " + e.what());
    }
}

}  // namespace reachgym
