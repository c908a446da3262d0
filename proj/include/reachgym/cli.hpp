#pragma once

// Command-line front end. cli_main() is the whole program; tools/ only
// forwards argv to it.

#include <CLI11.hpp>
#include <json.hpp>

#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "reachgym/benchmark.hpp"
#include "reachgym/checkpoint.hpp"
#include "reachgym/env.hpp"
#include "reachgym/error.hpp"
#include "reachgym/plots.hpp"
#include "reachgym/ppo.hpp"
#include "reachgym/reward.hpp"

namespace reachgym {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitValidation = 2, kExitRuntime = 3 };

inline nlohmann::json train_config_to_json(const TrainConfig& c) {
    return {{"n_steps", c.n_steps},
            {"n_minibatches", c.n_minibatches},
            {"n_epochs", c.n_epochs},
            {"gae_lambda", c.gae_lambda},
            {"discount_gamma", c.discount_gamma},
            {"entropy_coef", c.entropy_coef},
            {"learning_rate", c.learning_rate},
            {"clip_range", c.clip_range},
            {"vf_coef", c.vf_coef},
            {"max_grad_norm", c.max_grad_norm},
            {"seed", c.seed},
            {"total_timesteps", c.total_timesteps},
            {"normalize_observations", c.normalize_observations},
            {"normalize_rewards", c.normalize_rewards},
            {"hidden", c.hidden},
            {"log_std_init", c.log_std_init},
            {"checkpoint_every", c.checkpoint_every}};
}

/// Fields absent from `j` keep the values already in `c`.
inline TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c) {
    try {
        c.n_steps = j.value("n_steps", c.n_steps);
        c.n_minibatches = j.value("n_minibatches", c.n_minibatches);
        c.n_epochs = j.value("n_epochs", c.n_epochs);
        c.gae_lambda = j.value("gae_lambda", c.gae_lambda);
        c.discount_gamma = j.value("discount_gamma", c.discount_gamma);
        c.entropy_coef = j.value("entropy_coef", c.entropy_coef);
        c.learning_rate = j.value("learning_rate", c.learning_rate);
        c.clip_range = j.value("clip_range", c.clip_range);
        c.vf_coef = j.value("vf_coef", c.vf_coef);
        c.max_grad_norm = j.value("max_grad_norm", c.max_grad_norm);
        c.seed = j.value("seed", c.seed);
        c.total_timesteps = j.value("total_timesteps", c.total_timesteps);
        c.normalize_observations = j.value("normalize_observations", c.normalize_observations);
        c.normalize_rewards = j.value("normalize_rewards", c.normalize_rewards);
        c.hidden = j.value("hidden", c.hidden);
        c.log_std_init = j.value("log_std_init", c.log_std_init);
        c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("train config: ") + e.what());
    }
    return c;
}

/// "3" -> {3}; "0-3" -> {0, 1, 2, 3}.
inline std::vector<std::uint64_t> parse_instance_range(const std::string& s) {
    auto number = [&](const std::string& t) {
        if (t.empty() || t.find_first_not_of("0123456789") != std::string::npos)
            throw ConfigError("--instance expects an id or a range a-b, got '" + s + "'");
        return static_cast<std::uint64_t>(std::stoull(t));
    };
    const auto dash = s.find('-');
    if (dash == std::string::npos) return {number(s)};
    const std::uint64_t a = number(s.substr(0, dash)), b = number(s.substr(dash + 1));
    if (b < a || b - a > 255) throw ConfigError("--instance range '" + s + "' is empty or too large");
    std::vector<std::uint64_t> ids;
    for (std::uint64_t i = a; i <= b; ++i) ids.push_back(i);
    return ids;
}

namespace detail {

struct CommonOptions {
    bool real_speed = false;
    std::optional<double> velocity;
    std::string instance = "0";
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> variant;
    std::optional<std::string> model;
};

/// Config file (or defaults), then flag overrides. --variant and --model are
/// applied before parsing so per-variant defaults follow the final variant.
inline EnvConfig build_env_config(const CommonOptions& o, std::uint64_t instance,
                                  const std::filesystem::path& fallback_config = {}) {
    std::filesystem::path cfg_path = o.config;
    if (cfg_path.empty() && !fallback_config.empty() && std::filesystem::exists(fallback_config))
        cfg_path = fallback_config;
    nlohmann::json j = nlohmann::json::object();
    std::filesystem::path base_dir = std::filesystem::current_path();
    if (!cfg_path.empty()) {
        std::ifstream in(cfg_path);
        if (!in) throw ConfigError("cannot open env config " + cfg_path.string());
        try {
            in >> j;
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError("env config " + cfg_path.string() + ": " + e.what());
        }
        base_dir = cfg_path.parent_path();
    }
    if (o.model) {
        const std::filesystem::path m = *o.model;
        j["model"] = std::filesystem::exists(m) ? std::filesystem::absolute(m).string() : *o.model;
    }
    if (o.variant) {
        parse_variant(*o.variant);
        j["variant"] = *o.variant;
    }
    EnvConfig c = env_config_from_json(j, base_dir);
    if (o.seed) c.seed = *o.seed;
    c.instance_id = instance;
    c.real_speed = c.real_speed || o.real_speed;
    if (o.velocity) c.velocity_limit = *o.velocity;
    c.validate();
    return c;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write " + path.string());
    f << text;
}

inline std::filesystem::path with_instance_suffix(const std::filesystem::path& p, std::uint64_t id) {
    return p.parent_path() / (p.stem().string() + "_instance_" + std::to_string(id) + p.extension().string());
}

/// Runs fn(id) for every id, one thread each when there are several; rethrows the first failure.
template <class Fn>
void for_instances(const std::vector<std::uint64_t>& ids, Fn fn) {
    if (ids.size() == 1) return fn(ids.front());
    std::vector<std::exception_ptr> errors(ids.size());
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < ids.size(); ++i)
        threads.emplace_back([&, i] {
            try {
                fn(ids[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        });
    for (auto& t : threads) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace detail

inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"MARA environment argument provider.\n"
                 "Reach-task environments for a modular robot arm, a PPO trainer and an accuracy benchmark.",
                 "reachgym"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_help_flag("-h,--help", "Show this help message and exit.");

    detail::CommonOptions common;
    app.add_flag("-r,--real-speed", common.real_speed,
                 "Execute the simulation in real speed (steps throttled to the wall clock).");
    app.add_option("-v,--velocity", common.velocity,
                   "Set servo motor velocity in rad/s. Keep < 1.57 (the servo limit).");
    app.add_option("--instance", common.instance,
                   "Instance id, or a range a-b to run several instances in parallel "
                   "(separate RNG streams and output directories).")
        ->capture_default_str();
    app.add_option("--config", common.config, "Environment config file (JSON).");
    app.add_option("--seed", common.seed, "Random seed (default 0).");
    app.add_option("--variant", common.variant, "Environment variant.")
        ->check(CLI::IsMember({"MARA", "MARAOrient", "MARACollision", "MARACollisionOrient"}));
    app.add_option("--model", common.model, "Robot model: mara6, planar2 or a model JSON file.");

    // train
    auto* train_cmd = app.add_subcommand("train", "Train a PPO policy.");
    std::optional<long long> timesteps;
    std::optional<int> n_steps, checkpoint_every;
    std::string train_out = "runs", train_config_path;
    bool quiet = false;
    train_cmd->add_option("--timesteps", timesteps, "Total environment steps (default 1e6).");
    train_cmd->add_option("--n-steps", n_steps, "Rollout length per update (default 2048, 1024 for MARACollision).");
    train_cmd->add_option("--checkpoint-every", checkpoint_every, "Checkpoint period in updates (default 10).");
    train_cmd->add_option("--train-config", train_config_path, "Trainer hyperparameter file (JSON).");
    train_cmd->add_option("--out", train_out, "Run directory; instance_<id>/ is created inside.")->capture_default_str();
    train_cmd->add_flag("-q,--quiet", quiet, "Do not print per-update progress.");

    // run
    auto* run_cmd = app.add_subcommand("run", "Run a trained policy and export the trajectory.");
    std::string run_ckpt, run_out;
    int run_episodes = 1;
    bool run_stochastic = false;
    run_cmd->add_option("--checkpoint", run_ckpt, "Checkpoint file.")->required();
    run_cmd->add_option("--episodes", run_episodes, "Number of episodes.")->capture_default_str()->check(CLI::PositiveNumber);
    run_cmd->add_flag("--stochastic", run_stochastic, "Sample actions instead of using the mean action.");
    run_cmd->add_option("--out", run_out, "Trajectory CSV (step,q1..qn,ee_x,ee_y,ee_z,reward,done).");

    // benchmark
    auto* bench_cmd = app.add_subcommand("benchmark", "Accuracy of a trained policy over several runs.");
    std::string bench_ckpt, bench_out;
    int bench_runs = 10;
    bool bench_det = false;
    bench_cmd->add_option("--checkpoint", bench_ckpt, "Checkpoint file.")->required();
    bench_cmd->add_option("--runs", bench_runs, "Number of evaluation runs.")->capture_default_str();
    bench_cmd->add_flag("--deterministic", bench_det, "Use the mean action instead of sampling.");
    bench_cmd->add_option("--out", bench_out, "Write the report as JSON.");

    // random
    auto* random_cmd = app.add_subcommand("random", "Uniform random actions (smoke test).");
    int random_steps = 1000;
    std::string random_out;
    random_cmd->add_option("--steps", random_steps, "Number of steps.")->capture_default_str()->check(CLI::NonNegativeNumber);
    random_cmd->add_option("--out", random_out, "Trajectory CSV.");

    // reward-surface
    auto* surface_cmd = app.add_subcommand("reward-surface", "Tabulate the orientation reward over distance and angle.");
    std::string surface_out;
    int nx = 101, ny = 101;
    surface_cmd->add_option("--out", surface_out, "Output CSV (x,y,reward).")->required();
    surface_cmd->add_option("--nx", nx, "Grid points over distance [0, 1] m.")->capture_default_str();
    surface_cmd->add_option("--ny", ny, "Grid points over angle [0, pi] rad.")->capture_default_str();

    // plots
    auto* plots_cmd = app.add_subcommand("plots", "Reward and entropy series (CSV + SVG) from a metrics log.");
    std::string plots_metrics, plots_out = ".";
    plots_cmd->add_option("--metrics", plots_metrics, "metrics.csv written by train.")->required();
    plots_cmd->add_option("--out", plots_out, "Output directory.")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        const auto parsed = app.get_subcommands();
        out << (parsed.empty() ? app.help("", CLI::AppFormatMode::All) : parsed.front()->help());
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    try {
        const std::vector<std::uint64_t> instances = parse_instance_range(common.instance);
        auto single_instance = [&](const char* cmd) {
            if (instances.size() != 1)
                throw ConfigError(std::string("--instance ranges are supported by train and random only, not ") + cmd);
            return instances.front();
        };

        if (*train_cmd) {
            std::mutex io;
            std::vector<EnvConfig> envs;
            for (auto id : instances) envs.push_back(detail::build_env_config(common, id));
            TrainConfig tc = default_train_config(envs.front().variant);
            if (!train_config_path.empty()) {
                std::ifstream f(train_config_path);
                if (!f) throw ConfigError("cannot open train config " + train_config_path);
                nlohmann::json j;
                try {
                    f >> j;
                } catch (const nlohmann::json::parse_error& e) {
                    throw ConfigError("train config " + train_config_path + ": " + e.what());
                }
                tc = train_config_from_json(j, tc);
            }
            if (timesteps) tc.total_timesteps = *timesteps;
            if (n_steps) tc.n_steps = *n_steps;
            if (checkpoint_every) tc.checkpoint_every = *checkpoint_every;
            if (common.seed) tc.seed = *common.seed;
            tc.out_dir = train_out;
            tc.validate();
            detail::for_instances(instances, [&](std::uint64_t id) {
                const EnvConfig& ec = envs[static_cast<std::size_t>(id - instances.front())];
                const auto dir = instance_dir(tc.out_dir, id);
                std::filesystem::create_directories(dir);
                save_env_config(ec, dir / "env_config.json");
                detail::write_text(dir / "train_config.json", train_config_to_json(tc).dump(2) + "\n");
                const TrainResult res = train(ec, tc, [&](const UpdateRecord& r) {
                    if (quiet) return;
                    std::lock_guard<std::mutex> lock(io);
                    out << "[instance " << id << "] update " << r.update << "/" << tc.total_updates()
                        << "  timesteps " << r.timesteps << "  mean_ep_reward " << format_double(r.mean_ep_reward)
                        << "  entropy " << format_double(r.stats.entropy) << '\n';
                });
                const PlotOutput plots = emit_plots(dir / "metrics.csv", dir / "plots");
                std::lock_guard<std::mutex> lock(io);
                if (!plots.warning.empty()) err << "warning: " << plots.warning << '\n';
                out << "[instance " << id << "] done: " << res.checkpoints.back().string() << '\n';
            });
            return kExitOk;
        }

        if (*run_cmd) {
            const EnvConfig ec = detail::build_env_config(common, single_instance("run"),
                                                          std::filesystem::path(run_ckpt).parent_path() / "env_config.json");
            const Env probe(ec);
            const Checkpoint ck = load_checkpoint(run_ckpt, probe.observation_size(), probe.action_size());
            EpisodeLog all;
            for (int e = 0; e < run_episodes; ++e) {
                EpisodeLog log = run_policy(ck.policy, ec, !run_stochastic, ec.seed + static_cast<std::uint64_t>(e));
                const EpisodeSummary& s = log.episodes.back();
                out << "episode " << e + 1 << ": steps " << s.length << "  reward " << format_double(s.total_reward)
                    << "  final_distance " << format_double(s.final_distance) << " m  "
                    << (s.success ? "success" : s.collided ? "collision" : "step cap") << '\n';
                for (auto& r : log.steps) r.episode = e + 1;
                all.steps.insert(all.steps.end(), log.steps.begin(), log.steps.end());
                all.episodes.push_back(s);
            }
            if (!run_out.empty()) {
                std::ostringstream csv;
                write_trajectory_csv(csv, all, ec.model.dof());
                detail::write_text(run_out, csv.str());
            }
            return kExitOk;
        }

        if (*bench_cmd) {
            if (bench_runs < 1) throw ConfigError("--runs must be >= 1");
            const EnvConfig ec = detail::build_env_config(common, single_instance("benchmark"),
                                                          std::filesystem::path(bench_ckpt).parent_path() / "env_config.json");
            const Env probe(ec);
            const Checkpoint ck = load_checkpoint(bench_ckpt, probe.observation_size(), probe.action_size());
            const AccuracyReport rep = benchmark(ck.policy, ec, bench_runs, ec.seed, bench_det);
            out << format_report(rep);
            if (!bench_out.empty()) save_report(rep, bench_out);
            return kExitOk;
        }

        if (*random_cmd) {
            std::mutex io;
            std::vector<EnvConfig> envs;
            for (auto id : instances) envs.push_back(detail::build_env_config(common, id));
            detail::for_instances(instances, [&](std::uint64_t id) {
                const EnvConfig& ec = envs[static_cast<std::size_t>(id - instances.front())];
                const EpisodeLog log = run_random_agent(ec, random_steps);
                if (!random_out.empty()) {
                    std::ostringstream csv;
                    write_trajectory_csv(csv, log, ec.model.dof());
                    detail::write_text(instances.size() == 1 ? std::filesystem::path(random_out)
                                                             : detail::with_instance_suffix(random_out, id),
                                       csv.str());
                }
                std::lock_guard<std::mutex> lock(io);
                out << "[instance " << id << "] " << log.steps.size() << " steps, " << log.episodes.size()
                    << " finished episodes, mean step reward " << format_double(log.mean_step_reward()) << '\n';
            });
            return kExitOk;
        }

        if (*surface_cmd) {
            if (nx < 2 || ny < 2) throw ConfigError("--nx and --ny must be >= 2");
            const EnvConfig ec = detail::build_env_config(common, single_instance("reward-surface"));
            std::ostringstream csv;
            write_surface_csv(csv, reward_surface(ec.reward_params, nx, ny));
            detail::write_text(surface_out, csv.str());
            out << "wrote " << nx << "x" << ny << " grid to " << surface_out << '\n';
            return kExitOk;
        }

        if (*plots_cmd) {
            const PlotOutput p = emit_plots(plots_metrics, plots_out);
            if (!p.warning.empty()) err << "warning: " << p.warning << '\n';
            out << "wrote " << p.points << " points to " << plots_out << '\n';
            return kExitOk;
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const ContractViolation& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}

}  // namespace reachgym
