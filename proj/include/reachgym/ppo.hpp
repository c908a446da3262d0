#pragma once

// PPO trainer: rollout collection on one environment, GAE, clipped-surrogate
// updates with Adam, metrics logging and checkpointing.

#include <Eigen/Core>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "reachgym/adam.hpp"
#include "reachgym/checkpoint.hpp"
#include "reachgym/csv.hpp"
#include "reachgym/env.hpp"
#include "reachgym/error.hpp"
#include "reachgym/gae.hpp"
#include "reachgym/mlp_policy.hpp"
#include "reachgym/rng.hpp"
#include "reachgym/running_stats.hpp"

namespace reachgym {

struct TrainConfig {
    int n_steps = 2048;
    int n_minibatches = 32;
    int n_epochs = 10;
    double gae_lambda = 0.95;
    double discount_gamma = 0.99;
    double entropy_coef = 0.0;
    double learning_rate = 3e-4;  // decays linearly to 0 at total_timesteps
    double clip_range = 0.2;
    double vf_coef = 0.5;
    double max_grad_norm = 0.5;  // <= 0 disables clipping
    std::uint64_t seed = 0;
    long long total_timesteps = 1'000'000;
    bool normalize_observations = true;
    bool normalize_rewards = true;
    int hidden = 64;
    double log_std_init = 0.0;
    int checkpoint_every = 10;  // updates; 0 keeps only the final checkpoint
    /// Run directory; files go to out_dir/instance_<id>/. Empty disables all output.
    std::filesystem::path out_dir;

    void validate() const {
        if (n_steps < 1 || n_minibatches < 1 || n_steps % n_minibatches != 0)
            throw ConfigError("n_steps must be a positive multiple of n_minibatches");
        if (n_epochs < 1) throw ConfigError("n_epochs must be >= 1");
        if (!(clip_range > 0.0)) throw ConfigError("clip_range must be > 0");
        if (!(discount_gamma > 0.0 && discount_gamma <= 1.0)) throw ConfigError("discount_gamma must be in (0, 1]");
        if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw ConfigError("gae_lambda must be in [0, 1]");
        if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
        if (total_timesteps < n_steps)
            throw ConfigError("total_timesteps (" + std::to_string(total_timesteps) +
                              ") must cover at least one rollout of n_steps (" + std::to_string(n_steps) + ")");
        if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
        if (hidden < 1) throw ConfigError("hidden must be >= 1");
    }

    int total_updates() const { return static_cast<int>(total_timesteps / n_steps); }
};

inline TrainConfig default_train_config(Variant variant) {
    TrainConfig c;
    if (variant == Variant::MaraCollision) c.n_steps = 1024;
    return c;
}

/// lr(t) = lr0·(1 − t/T), t = timesteps consumed before the update.
inline double learning_rate_at(const TrainConfig& c, long long timesteps) {
    return c.learning_rate * (1.0 - static_cast<double>(timesteps) / static_cast<double>(c.total_timesteps));
}

struct RolloutBuffer {
    Eigen::MatrixXd obs;      // obs_dim x n, as fed to the networks
    Eigen::MatrixXd actions;  // act_dim x n, before the environment clamp
    Eigen::VectorXd log_probs, values, rewards;
    Eigen::Array<bool, Eigen::Dynamic, 1> dones;
    Eigen::VectorXd advantages, returns;
    double bootstrap_value = 0.0;

    RolloutBuffer() = default;
    RolloutBuffer(int obs_dim, int act_dim, int n)
        : obs(obs_dim, n), actions(act_dim, n), log_probs(n), values(n), rewards(n), dones(n) {}

    int size() const { return static_cast<int>(rewards.size()); }

    /// GAE, then advantage normalization.
    void finish(double gamma, double lambda) {
        GaeResult g = compute_gae(rewards, values, dones, bootstrap_value, gamma, lambda);
        returns = std::move(g.returns);
        advantages = std::move(g.advantages);
        normalize_advantages(advantages);
    }
};

struct UpdateStats {
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
    double clip_frac = 0.0;
    double approx_kl = 0.0;
    double learning_rate = 0.0;
};

/// n_epochs passes over n_minibatches shuffled minibatches. update_index is
/// 0-based and sets the learning rate.
inline UpdateStats ppo_update(PolicyParams& params, Adam& adam, const RolloutBuffer& buf, const TrainConfig& cfg,
                              int update_index, Rng& rng) {
    detail::require(buf.advantages.size() == buf.size(), "ppo_update: advantages not computed");
    const int n = buf.size();
    detail::require(n % cfg.n_minibatches == 0, "ppo_update: buffer not divisible into minibatches");
    const int mb = n / cfg.n_minibatches;
    UpdateStats stats;
    stats.learning_rate = learning_rate_at(cfg, static_cast<long long>(update_index) * cfg.n_steps);
    const LossCoefficients k{cfg.clip_range, cfg.vf_coef, cfg.entropy_coef};

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    LossBatch b;
    b.obs.resize(buf.obs.rows(), mb);
    b.actions.resize(buf.actions.rows(), mb);
    b.old_log_prob.resize(mb);
    b.advantages.resize(mb);
    b.returns.resize(mb);
    Eigen::VectorXd grad;
    int batches = 0;
    for (int epoch = 0; epoch < cfg.n_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (int m = 0; m < cfg.n_minibatches; ++m) {
            for (int j = 0; j < mb; ++j) {
                const int i = order[static_cast<std::size_t>(m * mb + j)];
                b.obs.col(j) = buf.obs.col(i);
                b.actions.col(j) = buf.actions.col(i);
                b.old_log_prob[j] = buf.log_probs[i];
                b.advantages[j] = buf.advantages[i];
                b.returns[j] = buf.returns[i];
            }
            const LossTerms t = ppo_loss(params, b, k, &grad);
            if (!std::isfinite(t.total) || !grad.allFinite())
                throw TrainingError("non-finite loss at update " + std::to_string(update_index + 1) + ", epoch " +
                                    std::to_string(epoch + 1) + ", minibatch " + std::to_string(m + 1) +
                                    " (policy_loss " + format_double(t.policy_loss) + ", value_loss " +
                                    format_double(t.value_loss) + ", entropy " + format_double(t.entropy) + ")");
            if (cfg.max_grad_norm > 0.0) {
                const double norm = grad.norm();
                if (norm > cfg.max_grad_norm) grad *= cfg.max_grad_norm / norm;
            }
            adam.step(params.flat(), grad, stats.learning_rate);
            stats.policy_loss += t.policy_loss;
            stats.value_loss += t.value_loss;
            stats.entropy += t.entropy;
            stats.clip_frac += t.clip_frac;
            stats.approx_kl += t.approx_kl;
            ++batches;
        }
    }
    for (double* v : {&stats.policy_loss, &stats.value_loss, &stats.entropy, &stats.clip_frac, &stats.approx_kl})
        *v /= batches;
    return stats;
}

// ---------------------------------------------------------------------------
// Training loop

struct UpdateRecord {
    int update = 0;  // 1-based
    long long timesteps = 0;
    double mean_ep_reward = std::numeric_limits<double>::quiet_NaN();
    UpdateStats stats;
};

struct EpisodeRecord {
    int update = 0;
    long long timesteps = 0;  // at the episode's last step
    double reward = 0.0;
    int length = 0;
    double final_distance = 0.0;
    bool success = false;
    bool collided = false;
};

struct TrainResult {
    TrainedPolicy policy;
    std::vector<UpdateRecord> updates;
    std::vector<EpisodeRecord> episodes;
    std::vector<std::filesystem::path> checkpoints;
    std::filesystem::path run_dir;
};

inline const std::vector<std::string>& metrics_header() {
    static const std::vector<std::string> h{"update",      "timesteps",  "mean_ep_reward", "entropy",
                                            "policy_loss", "value_loss", "clip_frac",      "approx_kl"};
    return h;
}

inline const std::vector<std::string>& episodes_header() {
    static const std::vector<std::string> h{"update", "timesteps", "episode_reward", "length",
                                            "final_distance", "success", "collided"};
    return h;
}

inline void write_metrics_row(std::ostream& out, const UpdateRecord& r) {
    write_csv_row(out, {static_cast<double>(r.update), static_cast<double>(r.timesteps), r.mean_ep_reward,
                        r.stats.entropy, r.stats.policy_loss, r.stats.value_loss, r.stats.clip_frac,
                        r.stats.approx_kl});
}

inline std::vector<UpdateRecord> read_metrics_csv(std::istream& in) {
    const CsvTable t = parse_csv(in, metrics_header());
    std::vector<UpdateRecord> out;
    for (const auto& row : t.rows) {
        UpdateRecord r;
        r.update = static_cast<int>(row[0]);
        r.timesteps = static_cast<long long>(row[1]);
        r.mean_ep_reward = row[2];
        r.stats.entropy = row[3];
        r.stats.policy_loss = row[4];
        r.stats.value_loss = row[5];
        r.stats.clip_frac = row[6];
        r.stats.approx_kl = row[7];
        out.push_back(r);
    }
    return out;
}

inline std::filesystem::path instance_dir(const std::filesystem::path& out_dir, std::uint64_t instance_id) {
    return out_dir / ("instance_" + std::to_string(instance_id));
}

inline nlohmann::json checkpoint_metadata(const EnvConfig& env, const TrainConfig& cfg, int update,
                                          long long timesteps) {
    return {{"variant", variant_name(env.variant)},
            {"model", env.model.name},
            {"update", update},
            {"timesteps", timesteps},
            {"seed", cfg.seed},
            {"instance_id", env.instance_id},
            {"total_timesteps", cfg.total_timesteps}};
}

using ProgressCallback = std::function<void(const UpdateRecord&)>;

/// Collect n_steps, GAE, update; repeat total_timesteps / n_steps times.
/// Episodes run across rollout boundaries; step-cap truncation is treated as
/// terminal.
inline TrainResult train(const EnvConfig& env_config, const TrainConfig& cfg, const ProgressCallback& progress = {}) {
    cfg.validate();
    Env env(env_config);
    const PolicyShape shape{env.observation_size(), env.action_size(), cfg.hidden};
    Rng init_rng = make_rng(cfg.seed, env_config.instance_id, Stream::Init);
    Rng agent_rng = make_rng(cfg.seed, env_config.instance_id, Stream::Agent);
    Rng trainer_rng = make_rng(cfg.seed, env_config.instance_id, Stream::Trainer);

    TrainResult result;
    PolicyParams& params = result.policy.params;
    params = init_policy(shape, init_rng, cfg.log_std_init);
    ObsNormalizer& norm = result.policy.normalizer;
    norm = ObsNormalizer(shape.obs_dim, cfg.normalize_observations);
    RewardScaler scaler(cfg.discount_gamma, cfg.normalize_rewards);
    Adam adam(params.flat().size());

    std::ofstream metrics, episodes;
    if (!cfg.out_dir.empty()) {
        result.run_dir = instance_dir(cfg.out_dir, env_config.instance_id);
        std::filesystem::create_directories(result.run_dir);
        metrics.open(result.run_dir / "metrics.csv");
        episodes.open(result.run_dir / "episodes.csv");
        if (!metrics || !episodes) throw TrainingError("cannot write logs under " + result.run_dir.string());
        write_csv_header(metrics, metrics_header());
        write_csv_header(episodes, episodes_header());
    }
    auto save = [&](const std::string& name, int update, long long timesteps) {
        if (cfg.out_dir.empty()) return;
        const auto path = result.run_dir / name;
        save_checkpoint({result.policy, checkpoint_metadata(env_config, cfg, update, timesteps)}, path);
        result.checkpoints.push_back(path);
    };

    auto observe = [&](const Observation& o) {
        const Eigen::VectorXd raw = o.to_vector();
        if (norm.enabled) norm.stats.update(raw);
        return norm.normalize(raw);
    };

    Eigen::VectorXd obs = observe(env.reset());
    double ep_reward = 0.0;
    long long timesteps = 0;
    double last_mean = std::numeric_limits<double>::quiet_NaN();
    RolloutBuffer buf(shape.obs_dim, shape.act_dim, cfg.n_steps);
    const int updates = cfg.total_updates();

    for (int u = 0; u < updates; ++u) {
        double sum_ep = 0.0;
        int n_ep = 0;
        for (int t = 0; t < cfg.n_steps; ++t) {
            const ActionSample s = sample_action(params, obs, agent_rng);
            const StepResult r = env.step(s.action);
            ++timesteps;
            buf.obs.col(t) = obs;
            buf.actions.col(t) = s.action;
            buf.log_probs[t] = s.log_prob;
            buf.values[t] = s.value;
            buf.rewards[t] = scaler.scale(r.reward, r.done);
            buf.dones[t] = r.done;
            ep_reward += r.reward;
            if (r.done) {
                EpisodeRecord e{u + 1,           timesteps,         ep_reward, env.step_count(),
                                r.info.distance_x, r.info.success, r.info.collided};
                result.episodes.push_back(e);
                if (episodes) {
                    write_csv_row(episodes, {static_cast<double>(e.update), static_cast<double>(e.timesteps),
                                             e.reward, static_cast<double>(e.length), e.final_distance,
                                             e.success ? 1.0 : 0.0, e.collided ? 1.0 : 0.0});
                }
                sum_ep += ep_reward;
                ++n_ep;
                ep_reward = 0.0;
                obs = observe(env.reset());
            } else {
                obs = observe(r.observation);
            }
        }
        buf.bootstrap_value = policy_forward(params, obs).value;
        buf.finish(cfg.discount_gamma, cfg.gae_lambda);

        UpdateRecord rec;
        rec.update = u + 1;
        rec.timesteps = timesteps;
        if (n_ep > 0) last_mean = sum_ep / n_ep;
        rec.mean_ep_reward = last_mean;
        rec.stats = ppo_update(params, adam, buf, cfg, u, trainer_rng);
        if (!params.all_finite()) throw TrainingError("non-finite parameters after update " + std::to_string(u + 1));
        result.updates.push_back(rec);
        if (metrics) {
            write_metrics_row(metrics, rec);
            metrics.flush();
            episodes.flush();
        }
        if (cfg.checkpoint_every > 0 && (u + 1) % cfg.checkpoint_every == 0) {
            char name[40];
            std::snprintf(name, sizeof(name), "checkpoint_%05d.bin", u + 1);
            save(name, u + 1, timesteps);
        }
        if (progress) progress(rec);
    }
    save("final.bin", updates, timesteps);
    return result;
}

// ---------------------------------------------------------------------------
// Running a policy

/// One episode from reset to done. Deterministic uses the mean action.
inline EpisodeLog run_policy(const TrainedPolicy& policy, const EnvConfig& env_config, bool deterministic,
                             std::uint64_t seed = 0) {
    Env env(env_config);
    if (policy.params.shape().obs_dim != env.observation_size() ||
        policy.params.shape().act_dim != env.action_size())
        throw LoadError("policy architecture does not match the environment's observation/action widths");
    Rng rng = make_rng(seed, env_config.instance_id, Stream::Eval);
    EpisodeLog log;
    EpisodeSummary current;
    Observation o = env.reset();
    log.resets = 1;
    while (true) {
        const StepResult r = env.step(policy.act(o.to_vector(), rng, deterministic));
        record_step(log, current, 1, env, r);
        if (r.done) break;
        o = r.observation;
    }
    return log;
}

inline EpisodeLog run_policy(const std::filesystem::path& checkpoint, const EnvConfig& env_config,
                             bool deterministic, std::uint64_t seed = 0) {
    const Env probe(env_config);
    const Checkpoint ck = load_checkpoint(checkpoint, probe.observation_size(), probe.action_size());
    return run_policy(ck.policy, env_config, deterministic, seed);
}

}  // namespace reachgym
