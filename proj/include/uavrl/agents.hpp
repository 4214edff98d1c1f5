#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "uavrl/environment.hpp"
#include "uavrl/metrics.hpp"
#include "uavrl/network.hpp"
#include "uavrl/rng.hpp"

namespace uavrl {

enum class Algorithm { Tabular, Dql, DuelingDql };

inline const char* algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::Tabular: return "tabular";
        case Algorithm::Dql: return "dql";
        default: return "dueling";
    }
}

struct Transition {
    std::array<double, 3> s{};
    int a = 0;
    double r = 0.0;
    std::array<double, 3> s_next{};
    bool terminal = false;
};

// Fixed-capacity FIFO of transitions; once full, each push evicts the
// oldest entry. Sampling is uniform with replacement.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
        if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be > 0");
        items_.reserve(capacity);
    }

    void push(const Transition& t) {
        if (items_.size() < capacity_) {
            items_.push_back(t);
        } else {
            items_[cursor_] = t;
        }
        cursor_ = (cursor_ + 1) % capacity_;
    }

    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Transition& at(std::size_t i) const { return items_.at(i); }

    std::vector<Transition> sample(std::size_t k, Rng& rng) const {
        if (items_.size() < k)
            throw std::out_of_range("ReplayBuffer::sample: not enough transitions");
        std::vector<Transition> batch;
        batch.reserve(k);
        for (std::size_t i = 0; i < k; ++i)
            batch.push_back(items_[static_cast<std::size_t>(
                rng.uniform_int(static_cast<int>(items_.size())))]);
        return batch;
    }

private:
    std::size_t capacity_;
    std::vector<Transition> items_;
    std::size_t cursor_ = 0;
};

struct AgentConfig {
    double epsilon = 0.9;        // probability of exploiting (greedy action)
    double gamma = 0.9;
    double learning_rate = 1e-3;
    int batch_size = 32;
    int buffer_capacity = 10000;
    int target_sync_period = 100;  // gradient updates between target syncs
    int episodes = 1000;
    std::vector<int> hidden = {64, 64};
    int stream_hidden = 32;
    CombineMode combine = CombineMode::Mean;

    void validate() const {
        if (epsilon < 0.0 || epsilon > 1.0)
            throw std::invalid_argument("AgentConfig.epsilon: must be in [0, 1]");
        if (gamma < 0.0 || gamma > 1.0)
            throw std::invalid_argument("AgentConfig.gamma: must be in [0, 1]");
        if (learning_rate < 0.0)
            throw std::invalid_argument("AgentConfig.learning_rate: must be >= 0");
        if (batch_size < 1) throw std::invalid_argument("AgentConfig.batch_size: must be >= 1");
        if (buffer_capacity < batch_size)
            throw std::invalid_argument("AgentConfig.buffer_capacity: must be >= batch_size");
        if (target_sync_period < 1)
            throw std::invalid_argument("AgentConfig.target_sync_period: must be >= 1");
        if (episodes < 0) throw std::invalid_argument("AgentConfig.episodes: must be >= 0");
    }
};

inline int argmax_lowest(std::span<const double> q) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(q.size()); ++i)
        if (q[static_cast<std::size_t>(i)] > q[static_cast<std::size_t>(best)]) best = i;
    return best;
}

// Epsilon-greedy with epsilon as the exploit probability: greedy with
// probability epsilon, uniformly random otherwise.
inline int select_action(std::span<const double> q, double epsilon, Rng& rng) {
    if (rng.uniform() < epsilon) return argmax_lowest(q);
    return rng.uniform_int(static_cast<int>(q.size()));
}

// Q-table over flat grid-cell indices.
struct TabularQ {
    int n_cells = 0;
    double learning_rate = 0.1;
    double gamma = 0.9;
    std::vector<std::array<double, kNumActions>> table;

    TabularQ() = default;
    TabularQ(int cells, double lr, double discount)
        : n_cells(cells), learning_rate(lr), gamma(discount),
          table(static_cast<std::size_t>(cells)) {
        for (auto& row : table) row.fill(0.0);
    }

    std::array<double, kNumActions>& row(int cell) {
        return table.at(static_cast<std::size_t>(cell));
    }
    const std::array<double, kNumActions>& row(int cell) const {
        return table.at(static_cast<std::size_t>(cell));
    }
};

inline void tabular_update(TabularQ& q, int s, int a, double r, int s_next, bool terminal) {
    const auto& next_row = q.row(s_next);
    const double bootstrap =
        terminal ? 0.0 : *std::max_element(next_row.begin(), next_row.end());
    double& cell = q.row(s)[static_cast<std::size_t>(a)];
    cell += q.learning_rate * (r + q.gamma * bootstrap - cell);
}

// Bootstrap target from the target network's Q-values at the next state.
inline double dql_target(double r, std::span<const double> q_next_target, bool terminal,
                         double gamma) {
    if (terminal) return r;
    return r + gamma * *std::max_element(q_next_target.begin(), q_next_target.end());
}

// Same contract with the next-state values produced by a dueling network.
inline double dueling_target(double r, const QNetwork& target_net,
                             std::span<const double> s_next, bool terminal, double gamma) {
    if (terminal) return r;
    const std::vector<double> q_next = forward(target_net, s_next);
    return dql_target(r, q_next, terminal, gamma);
}

struct TrainCallbacks {
    std::function<void(const EpisodeMetrics&)> on_episode;
};

struct TrainResult {
    Algorithm algorithm = Algorithm::Dql;
    std::vector<EpisodeMetrics> episodes;
    std::vector<TrajectoryPoint> final_trajectory;
    TabularQ table;      // populated for tabular runs
    QNetwork net;        // populated for dql / dueling runs
    QNetwork target_net; // the target network as of the last sync
};

namespace detail {

inline double total_mbit(const EnvState& s) {
    double mbit = 0.0;
    for (const auto& u : s.users) mbit += u.collected_bits / 1e6;
    return mbit;
}

inline int collected_count(const EnvState& s) {
    int n = 0;
    for (const auto& u : s.users) n += u.collected ? 1 : 0;
    return n;
}

inline TrajectoryPoint trajectory_point(const EnvState& s, int action, double reward,
                                        const WorldConfig& cfg) {
    TrajectoryPoint p;
    p.step = s.step;
    p.x = s.uav.x;
    p.y = s.uav.y;
    p.h = s.uav.h;
    p.action = action;
    p.step_reward = reward;
    p.active_users = static_cast<int>(active_set(s, cfg).size());
    p.cumulative_mbit = total_mbit(s);
    return p;
}

inline EpisodeMetrics finish_episode(int episode, const EnvState& s, const WorldConfig& cfg,
                                     std::chrono::steady_clock::time_point started) {
    EpisodeMetrics m;
    m.episode = episode;
    m.mission_reward = mission_reward(s, cfg);
    m.collected_mbit = total_mbit(s);
    m.users_collected = collected_count(s);
    m.steps = s.step;
    m.outcome = s.outcome;
    m.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                          started)
                    .count();
    return m;
}

}  // namespace detail

// Runs the full training loop for the selected algorithm and returns the
// trained agent plus per-episode metrics and the last episode's trajectory.
inline TrainResult train(const WorldConfig& world, const AgentConfig& agent,
                         Algorithm algorithm, std::uint64_t seed,
                         const TrainCallbacks& callbacks = {}) {
    world.validate();
    agent.validate();

    Rng env_rng(derive_seed(seed, 0));
    Rng agent_rng(derive_seed(seed, 1));

    TrainResult result;
    result.algorithm = algorithm;

    const bool uses_net = algorithm != Algorithm::Tabular;
    AdamState adam;
    ReplayBuffer buffer(static_cast<std::size_t>(std::max(agent.buffer_capacity, 1)));
    if (uses_net) {
        NetConfig net_cfg;
        net_cfg.input_dim = 3;
        net_cfg.hidden = agent.hidden;
        net_cfg.outputs = kNumActions;
        net_cfg.head =
            algorithm == Algorithm::DuelingDql ? HeadKind::Dueling : HeadKind::Plain;
        net_cfg.combine = agent.combine;
        net_cfg.stream_hidden = agent.stream_hidden;
        result.net = make_network(net_cfg, derive_seed(seed, 2));
        result.target_net = result.net;
        adam = AdamState(result.net, agent.learning_rate);
    } else {
        result.table = TabularQ(world.cell_count(), agent.learning_rate, agent.gamma);
    }

    long train_steps = 0;
    std::vector<TrajectoryPoint> trajectory;
    std::vector<std::vector<double>> batch_inputs;
    std::vector<int> batch_actions;
    std::vector<double> batch_targets;

    for (int episode = 0; episode < agent.episodes; ++episode) {
        const auto started = std::chrono::steady_clock::now();
        EnvState state = reset(world, env_rng);
        trajectory.clear();
        trajectory.push_back(detail::trajectory_point(state, -1, 0.0, world));

        while (!state.done) {
            const std::array<double, 3> s_vec = normalized_state(state, world);
            int action_idx;
            if (uses_net) {
                const std::vector<double> q = forward(result.net, s_vec);
                action_idx = select_action(q, agent.epsilon, agent_rng);
            } else {
                const int cell = cell_index(state, world);
                action_idx = select_action(result.table.row(cell), agent.epsilon, agent_rng);
            }
            const int s_cell = uses_net ? 0 : cell_index(state, world);

            const StepResult res = step(state, static_cast<Action>(action_idx), world, env_rng);
            const std::array<double, 3> s_next = normalized_state(state, world);
            trajectory.push_back(
                detail::trajectory_point(state, action_idx, res.step_reward, world));

            if (uses_net) {
                buffer.push({s_vec, action_idx, res.step_reward, s_next, res.done});
                if (buffer.size() >= static_cast<std::size_t>(agent.batch_size)) {
                    const auto batch =
                        buffer.sample(static_cast<std::size_t>(agent.batch_size), agent_rng);
                    batch_inputs.clear();
                    batch_actions.clear();
                    batch_targets.clear();
                    for (const auto& t : batch) {
                        batch_inputs.emplace_back(t.s.begin(), t.s.end());
                        batch_actions.push_back(t.a);
                        double y;
                        if (t.terminal) {
                            y = t.r;
                        } else {
                            const std::vector<double> q_next = forward(result.target_net, t.s_next);
                            y = dql_target(t.r, q_next, false, agent.gamma);
                        }
                        batch_targets.push_back(y);
                    }
                    try {
                        train_step(result.net, adam, batch_inputs, batch_actions,
                                   batch_targets);
                    } catch (const std::runtime_error& e) {
                        throw std::runtime_error("episode " + std::to_string(episode) + ": " +
                                                 e.what());
                    }
                    ++train_steps;
                    if (train_steps % agent.target_sync_period == 0)
                        sync_target(result.net, result.target_net);
                }
            } else {
                tabular_update(result.table, s_cell, action_idx, res.step_reward,
                               cell_index(state, world), res.done);
            }
        }

        result.episodes.push_back(detail::finish_episode(episode, state, world, started));
        if (callbacks.on_episode) callbacks.on_episode(result.episodes.back());
        if (episode == agent.episodes - 1) result.final_trajectory = trajectory;
    }
    return result;
}

// Solves the positional game by value iteration over all grid cells, for
// configurations where the reward depends on position alone: users frozen
// and either absent or weighted out with beta = 0. Returns one row of
// action values per flat cell index; target cells keep all-zero rows.
inline std::vector<std::array<double, kNumActions>> value_iteration_oracle(
    const WorldConfig& cfg, double gamma, double tolerance) {
    cfg.validate();
    if (cfg.total_users() > 0 && cfg.user_speed != 0.0)
        throw std::invalid_argument("value_iteration_oracle: users must be frozen (v = 0)");
    if (cfg.total_users() > 0 && cfg.beta != 0.0)
        throw std::invalid_argument(
            "value_iteration_oracle: data rewards are history-dependent; requires beta = 0");
    if (cfg.cell_count() > 100000)
        throw std::invalid_argument("value_iteration_oracle: state space too large");
    if (tolerance <= 0.0)
        throw std::invalid_argument("value_iteration_oracle: tolerance must be > 0");

    const int nx = cfg.cells_x(), ny = cfg.cells_y(), nh = cfg.cells_h();
    const int n_cells = cfg.cell_count();

    auto state_at = [&](int ix, int iy, int ih) {
        EnvState s;
        s.uav = {ix * cfg.grid_step, iy * cfg.grid_step,
                 cfg.altitude_levels[static_cast<std::size_t>(ih)]};
        s.alt_index = ih;
        return s;
    };
    auto positional_reward = [&](const EnvState& s) { return mission_reward(s, cfg); };

    EnvState start_state =
        state_at(cell_ix(cfg.start, cfg), cell_iy(cfg.start, cfg),
                 detail::altitude_index(cfg.altitude_levels, cfg.start.h));
    const double r_start = positional_reward(start_state);

    struct Edge {
        int next = 0;
        double reward = 0.0;
        bool terminal = false;
    };
    std::vector<std::array<Edge, kNumActions>> edges(static_cast<std::size_t>(n_cells));
    std::vector<bool> is_target(static_cast<std::size_t>(n_cells), false);

    for (int ih = 0; ih < nh; ++ih) {
        for (int iy = 0; iy < ny; ++iy) {
            for (int ix = 0; ix < nx; ++ix) {
                const int cell = cell_index(ix, iy, ih, cfg);
                EnvState here = state_at(ix, iy, ih);
                is_target[static_cast<std::size_t>(cell)] = at_target(here, cfg);
                const double r_here = positional_reward(here);
                for (int a = 0; a < kNumActions; ++a) {
                    EnvState next = here;
                    detail::move_uav(next, static_cast<Action>(a), cfg);
                    const double r_ref =
                        cfg.step_reward_kind == StepRewardKind::Immediate ? r_here : r_start;
                    Edge e;
                    e.next = cell_index(next, cfg);
                    e.reward = shape_step_reward(positional_reward(next), r_ref,
                                                 cfg.step_reward_kind);
                    e.terminal = at_target(next, cfg);
                    edges[static_cast<std::size_t>(cell)][static_cast<std::size_t>(a)] = e;
                }
            }
        }
    }

    std::vector<std::array<double, kNumActions>> q(static_cast<std::size_t>(n_cells));
    for (auto& row : q) row.fill(0.0);
    std::vector<double> v(static_cast<std::size_t>(n_cells), 0.0);

    for (int iter = 0; iter < 100000; ++iter) {
        double delta = 0.0;
        for (int cell = 0; cell < n_cells; ++cell) {
            if (is_target[static_cast<std::size_t>(cell)]) continue;
            for (int a = 0; a < kNumActions; ++a) {
                const Edge& e = edges[static_cast<std::size_t>(cell)][static_cast<std::size_t>(a)];
                const double updated =
                    e.reward +
                    (e.terminal ? 0.0 : gamma * v[static_cast<std::size_t>(e.next)]);
                double& slot = q[static_cast<std::size_t>(cell)][static_cast<std::size_t>(a)];
                delta = std::max(delta, std::abs(updated - slot));
                slot = updated;
            }
        }
        for (int cell = 0; cell < n_cells; ++cell) {
            const auto& row = q[static_cast<std::size_t>(cell)];
            v[static_cast<std::size_t>(cell)] = *std::max_element(row.begin(), row.end());
        }
        if (delta < tolerance) break;
    }
    return q;
}

// --- tabular table persistence -----------------------------------------
//
// Structured text: a version line, one header line with the table shape and
// hyperparameters, then one "cell q0 .. q6" row per grid cell.

inline void save_table(const TabularQ& q, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_table: cannot open " + path);
    out << "uavrl-qtable v1\n";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%d %.17g %.17g\n", q.n_cells, q.learning_rate, q.gamma);
    out << buf;
    for (int cell = 0; cell < q.n_cells; ++cell) {
        out << cell;
        for (double value : q.row(cell)) {
            std::snprintf(buf, sizeof(buf), " %.17g", value);
            out << buf;
        }
        out << "\n";
    }
    if (!out) throw std::runtime_error("save_table: write failed for " + path);
}

inline TabularQ load_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_table: cannot open " + path);
    std::string version;
    std::getline(in, version);
    if (version != "uavrl-qtable v1")
        throw std::runtime_error("load_table: unsupported format in " + path);
    int cells = 0;
    double lr = 0.0, gamma = 0.0;
    in >> cells >> lr >> gamma;
    if (!in || cells < 0) throw std::runtime_error("load_table: bad header in " + path);
    TabularQ q(cells, lr, gamma);
    for (int i = 0; i < cells; ++i) {
        int cell = 0;
        in >> cell;
        if (!in || cell != i) throw std::runtime_error("load_table: bad row in " + path);
        for (auto& value : q.row(i)) in >> value;
    }
    if (!in) throw std::runtime_error("load_table: truncated file " + path);
    return q;
}

}  // namespace uavrl
