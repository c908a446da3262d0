// Trains the 2-DoF planar arm to its default target, then benchmarks the result.
//   train_planar [timesteps] [out_dir]

#include <cstdio>
#include <cstdlib>

#include "reachgym/benchmark.hpp"
#include "reachgym/ppo.hpp"

int main(int argc, char** argv) {
    using namespace reachgym;
    const EnvConfig env = default_env_config(Variant::Mara, planar2_model());
    TrainConfig cfg = default_train_config(Variant::Mara);
    cfg.total_timesteps = argc > 1 ? std::atoll(argv[1]) : 500'000;
    if (argc > 2) cfg.out_dir = argv[2];

    const TrainResult res = train(env, cfg, [&](const UpdateRecord& r) {
        if (r.update % 10 == 0 || r.update == cfg.total_updates())
            std::printf("update %4d  timesteps %8lld  mean episode reward %9.3f  entropy %7.3f\n", r.update,
                        r.timesteps, r.mean_ep_reward, r.stats.entropy);
    });
    std::printf("\nstochastic policy:\n%s", format_report(benchmark(res.policy, env, 10)).c_str());
    std::printf("\nmean action:\n%s", format_report(benchmark(res.policy, env, 10, 0, true)).c_str());
}
