#pragma once

#include "uavrl/environment.hpp"

namespace uavrl {

// Per-episode training record. Everything except wall_ms is deterministic
// for a fixed (config, seed) and is what ends up in the metrics CSV.
struct EpisodeMetrics {
    int episode = 0;
    double mission_reward = 0.0;  // mission reward of the final state
    double collected_mbit = 0.0;  // data accumulated across all users
    int users_collected = 0;
    int steps = 0;
    Outcome outcome = Outcome::Running;
    double wall_ms = 0.0;
};

// One row of a trajectory dump; row 0 is the reset state with action -1.
struct TrajectoryPoint {
    int step = 0;
    double x = 0.0;
    double y = 0.0;
    double h = 0.0;
    int action = -1;
    double step_reward = 0.0;
    int active_users = 0;
    double cumulative_mbit = 0.0;
};

}  // namespace uavrl
