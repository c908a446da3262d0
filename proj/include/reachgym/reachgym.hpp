#pragma once

#include "reachgym/adam.hpp"
#include "reachgym/benchmark.hpp"
#include "reachgym/checkpoint.hpp"
#include "reachgym/collision.hpp"
#include "reachgym/csv.hpp"
#include "reachgym/env.hpp"
#include "reachgym/error.hpp"
#include "reachgym/gae.hpp"
#include "reachgym/kinematics.hpp"
#include "reachgym/math.hpp"
#include "reachgym/mlp_policy.hpp"
#include "reachgym/plots.hpp"
#include "reachgym/ppo.hpp"
#include "reachgym/reward.hpp"
#include "reachgym/rng.hpp"
#include "reachgym/robot_model.hpp"
#include "reachgym/running_stats.hpp"
