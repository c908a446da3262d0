#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "reachgym/benchmark.hpp"
#include "reachgym/cli.hpp"
#include "reachgym/plots.hpp"

using namespace reachgym;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("reachgym_test_bench_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct CliRun {
    int code;
    std::string out, err;
};

CliRun cli(std::vector<std::string> args) {
    args.insert(args.begin(), "reachgym");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

/// Drives each joint straight to the target configuration: exact landing
/// once every joint is within one rate-limited step.
PolicyFn scripted_to(const Eigen::VectorXd& q_target) {
    return [q_target](const Observation& o, const Env& env, Rng&) {
        return Eigen::VectorXd(((q_target - o.joint_positions) / env.config().action_scale).cwiseMax(-1).cwiseMin(1));
    };
}

}  // namespace

TEST(Benchmark, OraclePolicyStartingOnTargetReportsZeros) {
    for (Variant v : {Variant::Mara, Variant::MaraCollisionOrient}) {
        EnvConfig c = default_env_config(v);
        c.initial_positions = default_target_joints(c.model);
        const AccuracyReport r = benchmark(scripted_to(c.initial_positions), c, 10);
        EXPECT_EQ(r.n_runs, 10);
        EXPECT_EQ(r.successes, 10);
        for (int a = 0; a < 3; ++a) {
            EXPECT_EQ(r.position_mm[a].mean, 0.0);
            EXPECT_EQ(r.position_mm[a].stddev, 0.0);
        }
        EXPECT_EQ(r.orientation_deg.has_value(), is_orient(v));
        if (r.orientation_deg)
            for (const auto& s : *r.orientation_deg) {
                EXPECT_NEAR(s.mean, 0.0, 1e-12);  // conj(q)⊗q is identity up to rounding
                EXPECT_NEAR(s.stddev, 0.0, 1e-12);
            }
    }
}

TEST(Benchmark, ScriptedLandingOneStepAwayIsExactToRounding) {
    EnvConfig c = default_env_config(Variant::MaraOrient);
    const Eigen::VectorXd q_star = default_target_joints(c.model);
    c.initial_positions = q_star - Eigen::VectorXd::Constant(6, 0.01);
    const AccuracyReport r = benchmark(scripted_to(q_star), c, 3);
    for (int a = 0; a < 3; ++a) {
        EXPECT_NEAR(r.position_mm[a].mean, 0.0, 1e-9);
        EXPECT_NEAR(r.position_mm[a].stddev, 0.0, 1e-9);
        EXPECT_NEAR((*r.orientation_deg)[a].mean, 0.0, 1e-9);
    }
}

TEST(Benchmark, SignedErrorsAndOrientationBlockFollowVariant) {
    // Zero policy from home: every run ends at the step cap with the same error.
    EnvConfig c = default_env_config(Variant::Mara);
    c.max_episode_steps = 5;
    const PolicyFn zero = [](const Observation& o, const Env&, Rng&) {
        return Eigen::VectorXd::Zero(o.joint_positions.size()).eval();
    };
    const AccuracyReport r = benchmark(zero, c, 4);
    const Vec3 expect = (Vec3(0, 0, 1.1) - c.target_pose.position) * 1000.0;
    for (int a = 0; a < 3; ++a) {
        EXPECT_NEAR(r.position_mm[a].mean, expect[a], 1e-9);
        EXPECT_NEAR(r.position_abs_mm[a], std::abs(expect[a]), 1e-9);
        EXPECT_EQ(r.position_mm[a].stddev, 0.0);
    }
    EXPECT_FALSE(r.orientation_deg);
    c.variant = Variant::MaraOrient;
    EXPECT_TRUE(benchmark(zero, c, 1).orientation_deg);
    EXPECT_THROW(benchmark(zero, c, 0), ContractViolation);
}

TEST(Benchmark, SameSeedSameReport) {
    Rng rng(1);
    const TrainedPolicy pol(init_policy(PolicyShape{}, rng), ObsNormalizer(19, false));
    EnvConfig c = default_env_config(Variant::MaraCollisionOrient);
    c.max_episode_steps = 40;
    const auto a = report_to_json(benchmark(pol, c, 5, 9)).dump();
    const auto b = report_to_json(benchmark(pol, c, 5, 9)).dump();
    EXPECT_EQ(a, b);
    EXPECT_NE(a, report_to_json(benchmark(pol, c, 5, 10)).dump());
}

TEST(Benchmark, ReportJsonRoundTrip) {
    AccuracyReport r;
    r.variant = "MARAOrient";
    r.n_runs = 10;
    r.successes = 7;
    r.position_mm = {{{5.74, 6.73}, {6.78, 5.27}, {6.38, 4.72}}};
    r.position_abs_mm = {1.0, 2.0, 3.0};
    r.orientation_deg = {{{0.1, 0.2}, {0.3, 0.4}, {0.5, 0.6}}};
    r.mean_final_distance_m = 0.0123;
    const fs::path d = scratch("report");
    save_report(r, d / "r.json");
    const AccuracyReport back = load_report(d / "r.json");
    EXPECT_EQ(report_to_json(back), report_to_json(r));
    EXPECT_NE(format_report(r).find("6.78±5.27"), std::string::npos);
    EXPECT_NE(format_report(r).find("Orientation (deg)"), std::string::npos);
    r.orientation_deg.reset();
    EXPECT_EQ(format_report(r).find("Orientation"), std::string::npos);
    fs::remove_all(d);
}

TEST(Plots, HundredRowsPreserveOrder) {
    const fs::path d = scratch("plots100");
    {
        std::ofstream m(d / "metrics.csv");
        write_csv_header(m, metrics_header());
        for (int u = 1; u <= 100; ++u) {
            UpdateRecord r;
            r.update = u;
            r.timesteps = 2048LL * u;
            r.mean_ep_reward = -100.0 + u;
            r.stats.entropy = 8.5 - 0.01 * u;
            write_metrics_row(m, r);
        }
    }
    const PlotOutput p = emit_plots(d / "metrics.csv", d / "out");
    EXPECT_EQ(p.points, 100u);
    EXPECT_TRUE(p.warning.empty());
    const CsvTable reward = read_csv(d / "out" / "reward_series.csv", {"update", "mean_ep_reward"});
    const CsvTable entropy = read_csv(d / "out" / "entropy_series.csv", {"update", "entropy"});
    ASSERT_EQ(reward.rows.size(), 100u);
    ASSERT_EQ(entropy.rows.size(), 100u);
    for (int i = 0; i < 100; ++i) {
        EXPECT_EQ(reward.rows[i][0], i + 1);
        EXPECT_EQ(reward.rows[i][1], -100.0 + (i + 1));
        EXPECT_EQ(entropy.rows[i][1], 8.5 - 0.01 * (i + 1));
    }
    const std::string svg = slurp(d / "out" / "reward.svg");
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_NE(svg.find("<polyline"), std::string::npos);
    fs::remove_all(d);
}

TEST(Plots, EmptyLogGivesEmptySeriesAndWarning) {
    const fs::path d = scratch("plots_empty");
    { std::ofstream(d / "blank.csv"); }
    {
        std::ofstream m(d / "header_only.csv");
        write_csv_header(m, metrics_header());
    }
    for (const char* f : {"blank.csv", "header_only.csv"}) {
        const PlotOutput p = emit_plots(d / f, d / "out");
        EXPECT_EQ(p.points, 0u);
        EXPECT_FALSE(p.warning.empty());
        EXPECT_EQ(fs::file_size(d / "out" / "reward_series.csv"), 0u);
        EXPECT_EQ(fs::file_size(d / "out" / "entropy_series.csv"), 0u);
    }
    const CliRun r = cli({"plots", "--metrics", (d / "blank.csv").string(), "--out", (d / "cli").string()});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.err.find("warning"), std::string::npos);
    fs::remove_all(d);
}

TEST(Plots, MalformedLogReportsLine) {
    const fs::path d = scratch("plots_bad");
    {
        std::ofstream m(d / "metrics.csv");
        write_csv_header(m, metrics_header());
        m << "1,2048,-5,8.5,0,0,0,0\n2,4096,-4,oops,0,0,0,0\n";
    }
    try {
        emit_plots(d / "metrics.csv", d / "out");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    {
        std::ofstream m(d / "wrong.csv");
        m << "step,reward\n1,2\n";
    }
    EXPECT_THROW(emit_plots(d / "wrong.csv", d / "out"), ParseError);
    EXPECT_EQ(cli({"plots", "--metrics", (d / "metrics.csv").string(), "--out", (d / "o").string()}).code, 3);
    fs::remove_all(d);
}

TEST(Cli, HelpListsSubcommandsAndFlags) {
    const CliRun r = cli({"-h"});
    EXPECT_EQ(r.code, 0);
    for (const char* s : {"train", "run", "benchmark", "random", "reward-surface", "--real-speed", "-r,", "--velocity",
                          "-v,", "--instance", "--config", "--seed", "--variant", "Keep < 1.57",
                          "Execute the simulation in real speed"})
        EXPECT_NE(r.out.find(s), std::string::npos) << s;
    EXPECT_EQ(cli({"train", "-h"}).code, 0);
}

TEST(Cli, UsageErrors) {
    CliRun r = cli({"random", "--no-such-flag"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("Usage"), std::string::npos);
    r = cli({"--variant", "MARAFly", "random"});
    EXPECT_EQ(r.code, 1);
    EXPECT_EQ(cli({}).code, 1);
    EXPECT_EQ(cli({"fly"}).code, 1);
}

TEST(Cli, VelocityAboveServoLimitIsValidationError) {
    const CliRun r = cli({"random", "--velocity", "2.0", "--steps", "10"});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("1.57"), std::string::npos);
    EXPECT_EQ(cli({"-v", "1.2", "random", "--steps", "10"}).code, 0);
    EXPECT_EQ(cli({"random", "--instance", "x-y"}).code, 2);
}

TEST(Cli, RewardSurfaceCornerIsTen) {
    const fs::path d = scratch("surface");
    const CliRun r = cli({"reward-surface", "--out", (d / "surface.csv").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    std::ifstream in(d / "surface.csv");
    const auto grid = read_surface_csv(in);
    ASSERT_EQ(grid.size(), 101u * 101u);
    EXPECT_EQ(grid[0].x, 0.0);
    EXPECT_EQ(grid[0].y, 0.0);
    EXPECT_NEAR(grid[0].reward, 10.0, 1e-12);
    fs::remove_all(d);
}

TEST(Cli, RandomIsDeterministicPerSeed) {
    const fs::path d = scratch("random");
    auto run = [&](const std::string& name, const std::string& seed) {
        EXPECT_EQ(cli({"random", "--steps", "400", "--seed", seed, "--variant", "MARACollision", "--out",
                       (d / name).string()})
                      .code,
                  0);
        return slurp(d / name);
    };
    const std::string a = run("a.csv", "5"), b = run("b.csv", "5"), c = run("c.csv", "6");
    EXPECT_EQ(a, b);
    EXPECT_NE(a, c);
    std::istringstream in(a);
    EXPECT_EQ(read_trajectory_csv(in).steps.size(), 400u);
    fs::remove_all(d);
}

TEST(Cli, TrainRunBenchmarkEndToEnd) {
    const fs::path d = scratch("e2e");
    auto train_once = [&](const std::string& out) {
        return cli({"train", "--model", "planar2", "--timesteps", "512", "--n-steps", "256", "--checkpoint-every",
                    "1", "--seed", "3", "--out", (d / out).string(), "-q"});
    };
    CliRun r = train_once("a");
    ASSERT_EQ(r.code, 0) << r.err;
    ASSERT_EQ(train_once("b").code, 0);
    const fs::path ia = d / "a" / "instance_0", ib = d / "b" / "instance_0";
    for (const char* f : {"metrics.csv", "episodes.csv", "final.bin", "checkpoint_00002.bin", "env_config.json"})
        EXPECT_EQ(slurp(ia / f), slurp(ib / f)) << f;
    EXPECT_TRUE(fs::exists(ia / "plots" / "reward.svg"));

    r = cli({"run", "--checkpoint", (ia / "final.bin").string(), "--episodes", "2", "--out",
             (d / "traj.csv").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    std::ifstream traj(d / "traj.csv");
    const EpisodeLog log = read_trajectory_csv(traj);
    EXPECT_EQ(log.steps.front().q.size(), 2);

    auto bench = [&](const std::string& name) {
        const CliRun b = cli({"benchmark", "--checkpoint", (ia / "final.bin").string(), "--runs", "3", "--out",
                              (d / name).string()});
        EXPECT_EQ(b.code, 0) << b.err;
        EXPECT_NE(b.out.find("Distance (mm)"), std::string::npos);
        return slurp(d / name);
    };
    EXPECT_EQ(bench("r1.json"), bench("r2.json"));
    EXPECT_EQ(load_report(d / "r1.json").n_runs, 3);

    // checkpoint for the 2-DoF model against the 6-DoF environment
    { std::ofstream(d / "mara6.json") << R"({"model": "mara6"})"; }
    r = cli({"benchmark", "--checkpoint", (ia / "final.bin").string(), "--config", (d / "mara6.json").string()});
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("widths"), std::string::npos);
    fs::remove_all(d);
}
