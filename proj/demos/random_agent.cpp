// Uniform random actions on the 6-DoF arm, printing one line per episode.

#include <cstdio>

#include "reachgym/env.hpp"

int main() {
    using namespace reachgym;
    EnvConfig config = default_env_config(Variant::MaraCollision);
    config.seed = 7;
    const EpisodeLog log = run_random_agent(config, 2000);
    for (std::size_t i = 0; i < log.episodes.size(); ++i) {
        const EpisodeSummary& e = log.episodes[i];
        std::printf("episode %zu: %3d steps  reward %8.3f  final distance %.3f m  %s\n", i + 1, e.length,
                    e.total_reward, e.final_distance, e.collided ? "collision" : e.success ? "success" : "step cap");
    }
    std::printf("mean step reward %.4f\n", log.mean_step_reward());
}
