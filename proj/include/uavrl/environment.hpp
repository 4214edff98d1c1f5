#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "uavrl/channel.hpp"
#include "uavrl/rng.hpp"

namespace uavrl {

enum class Action : int { Left = 0, Right, Forward, Backward, Upward, Downward, Hover };
inline constexpr int kNumActions = 7;

inline const char* action_name(Action a) {
    static constexpr const char* names[kNumActions] = {
        "left", "right", "forward", "backward", "upward", "downward", "hover"};
    return names[static_cast<int>(a)];
}

enum class Outcome { Running, ReachedTarget, OutOfSteps };

inline const char* outcome_name(Outcome o) {
    switch (o) {
        case Outcome::Running: return "running";
        case Outcome::ReachedTarget: return "reached_target";
        default: return "out_of_steps";
    }
}

enum class RplusKind { Binary, Exponential };
enum class StepRewardKind { Immediate, Episode };

// Disc of mobile users. Users are placed uniformly inside the disc and
// random-walk within it; the walk reflects at the boundary.
struct Cluster {
    Position2 center;
    double radius = 100.0;
    int n_users = 10;
};

inline constexpr int kMaxUsersPerCluster = 10;

struct WorldConfig {
    double area_x = 1000.0;
    double area_y = 1000.0;
    double grid_step = 50.0;
    std::vector<double> altitude_levels = {100.0, 150.0, 200.0, 250.0, 300.0};
    Position3 start{0.0, 0.0, 200.0};
    Position3 target{1000.0, 1000.0, 100.0};
    std::vector<Cluster> clusters;
    double d_cons = 250.0;       // service range in meters
    double r_min = 1e7;          // bits required to mark a user collected
    int t_cons = 200;            // step budget per mission
    double user_speed = 1.0;     // max walk speed in m/s
    double beta = 1.0;           // throughput weight
    double zeta = 1.0;           // trajectory weight
    RplusKind rplus_kind = RplusKind::Exponential;
    StepRewardKind step_reward_kind = StepRewardKind::Episode;
    ChannelParams channel{};
    double dt = 1.0;             // seconds per environment step

    int cells_x() const { return static_cast<int>(std::lround(area_x / grid_step)) + 1; }
    int cells_y() const { return static_cast<int>(std::lround(area_y / grid_step)) + 1; }
    int cells_h() const { return static_cast<int>(altitude_levels.size()); }
    int cell_count() const { return cells_x() * cells_y() * cells_h(); }

    int total_users() const {
        int n = 0;
        for (const auto& c : clusters) n += c.n_users;
        return n;
    }

    double area_diagonal() const { return std::hypot(area_x, area_y); }

    void validate() const;
};

struct UserState {
    Position2 pos;
    int cluster_id = 0;
    int user_id = 0;
    double collected_bits = 0.0;
    bool collected = false;   // accumulated at least r_min; out of service for good
    bool ever_active = false; // has been in the active set at least once (association flag)
};

struct EnvState {
    Position3 uav;
    int alt_index = 0;
    std::vector<UserState> users;
    int step = 0;
    double episode_reward_so_far = 0.0;  // telescopes to R_t - R_0
    bool done = false;
    Outcome outcome = Outcome::Running;
    double mission_reward_prev = 0.0;    // R_{t-1}, reference for immediate shaping
    double mission_reward_initial = 0.0; // R_0, reference for episode shaping
};

namespace detail {

inline bool on_grid(double v, double step) {
    const double cells = v / step;
    return std::abs(cells - std::lround(cells)) < 1e-9;
}

inline int altitude_index(const std::vector<double>& levels, double h) {
    for (std::size_t i = 0; i < levels.size(); ++i)
        if (std::abs(levels[i] - h) < 1e-9) return static_cast<int>(i);
    return -1;
}

[[noreturn]] inline void config_error(const std::string& field, const std::string& why) {
    throw std::invalid_argument("WorldConfig." + field + ": " + why);
}

}  // namespace detail

inline void WorldConfig::validate() const {
    if (area_x <= 0 || area_y < 0)
        detail::config_error("area_x/area_y", "area_x must be > 0 and area_y >= 0");
    if (grid_step <= 0) detail::config_error("grid_step", "must be positive");
    if (!detail::on_grid(area_x, grid_step) || !detail::on_grid(area_y, grid_step))
        detail::config_error("area_x/area_y", "must be a multiple of grid_step");
    if (altitude_levels.empty()) detail::config_error("altitude_levels", "must be non-empty");
    for (std::size_t i = 0; i < altitude_levels.size(); ++i) {
        if (altitude_levels[i] < 0) detail::config_error("altitude_levels", "must be >= 0");
        if (i > 0 && altitude_levels[i] <= altitude_levels[i - 1])
            detail::config_error("altitude_levels", "must be strictly increasing");
    }
    for (const auto* p : {&start, &target}) {
        const bool is_start = (p == &start);
        const std::string name = is_start ? "start" : "target";
        if (p->x < 0 || p->x > area_x || p->y < 0 || p->y > area_y)
            detail::config_error(name, "outside the area");
        if (!detail::on_grid(p->x, grid_step) || !detail::on_grid(p->y, grid_step))
            detail::config_error(name, "not on the grid");
        if (detail::altitude_index(altitude_levels, p->h) < 0)
            detail::config_error(name, "altitude is not one of altitude_levels");
    }
    for (std::size_t i = 0; i < clusters.size(); ++i) {
        const auto& c = clusters[i];
        const std::string name = "clusters[" + std::to_string(i) + "]";
        if (c.radius <= 0) detail::config_error(name, "radius must be positive");
        if (c.n_users < 1 || c.n_users > kMaxUsersPerCluster)
            detail::config_error(name, "n_users must be in [1, 10]");
        if (c.center.x - c.radius < 0 || c.center.x + c.radius > area_x ||
            c.center.y - c.radius < 0 || c.center.y + c.radius > area_y)
            detail::config_error(name, "disc does not fit inside the area");
    }
    if (d_cons <= 0) detail::config_error("d_cons", "must be positive");
    if (r_min <= 0) detail::config_error("r_min", "must be positive");
    if (t_cons <= 0) detail::config_error("t_cons", "must be positive");
    if (user_speed < 0) detail::config_error("user_speed", "must be >= 0");
    if (beta < 0) detail::config_error("beta", "must be >= 0");
    if (zeta < 0) detail::config_error("zeta", "must be >= 0");
    if (dt <= 0) detail::config_error("dt", "must be positive");
    if (channel.beta0 <= 0 || channel.bandwidth_hz <= 0 || channel.noise_power_w <= 0 ||
        channel.tx_power_w <= 0)
        detail::config_error("channel", "all channel parameters must be positive");
}

inline int cell_ix(const Position3& p, const WorldConfig& cfg) {
    return static_cast<int>(std::lround(p.x / cfg.grid_step));
}
inline int cell_iy(const Position3& p, const WorldConfig& cfg) {
    return static_cast<int>(std::lround(p.y / cfg.grid_step));
}

// Flat grid-cell index used as the tabular state key.
inline int cell_index(int ix, int iy, int ih, const WorldConfig& cfg) {
    return (ih * cfg.cells_y() + iy) * cfg.cells_x() + ix;
}
inline int cell_index(const EnvState& s, const WorldConfig& cfg) {
    return cell_index(cell_ix(s.uav, cfg), cell_iy(s.uav, cfg), s.alt_index, cfg);
}

inline bool at_target(const EnvState& s, const WorldConfig& cfg) {
    const int tix = cell_ix(cfg.target, cfg);
    const int tiy = cell_iy(cfg.target, cfg);
    const int tih = detail::altitude_index(cfg.altitude_levels, cfg.target.h);
    return cell_ix(s.uav, cfg) == tix && cell_iy(s.uav, cfg) == tiy && s.alt_index == tih;
}

// Network input: position scaled to [0,1]^3.
inline std::array<double, 3> normalized_state(const EnvState& s, const WorldConfig& cfg) {
    return {s.uav.x / cfg.area_x, cfg.area_y > 0 ? s.uav.y / cfg.area_y : 0.0,
            s.uav.h / cfg.altitude_levels.back()};
}

// Indices of users that transmit this step: not yet collected and within
// the service range. They interfere with each other in the rate formula.
inline std::vector<int> active_set(const EnvState& s, const WorldConfig& cfg) {
    std::vector<int> active;
    for (std::size_t i = 0; i < s.users.size(); ++i) {
        const auto& u = s.users[i];
        if (!u.collected && distance(s.uav, u.pos) <= cfg.d_cons)
            active.push_back(static_cast<int>(i));
    }
    return active;
}

inline double rplus_binary(const EnvState& s, const WorldConfig& cfg) {
    return at_target(s, cfg) ? 1.0 : 0.0;
}

// 1 in the target cell, otherwise exp(-delta) with delta the horizontal
// distance to the target normalized by the area diagonal.
inline double rplus_exponential(const EnvState& s, const WorldConfig& cfg) {
    if (at_target(s, cfg)) return 1.0;
    const double dist_h = std::hypot(s.uav.x - cfg.target.x, s.uav.y - cfg.target.y);
    return std::exp(-dist_h / cfg.area_diagonal());
}

// Mission reward: beta-weighted average collected data (in Mbit, over users
// that have ever been associated) plus zeta-weighted trajectory term.
inline double mission_reward(const EnvState& s, const WorldConfig& cfg) {
    double data_term = 0.0;
    if (!s.users.empty()) {
        double sum_mbit = 0.0;
        for (const auto& u : s.users)
            if (u.ever_active) sum_mbit += u.collected_bits / 1e6;
        data_term = cfg.beta * sum_mbit / static_cast<double>(s.users.size());
    }
    const double rp = cfg.rplus_kind == RplusKind::Binary ? rplus_binary(s, cfg)
                                                          : rplus_exponential(s, cfg);
    return data_term + cfg.zeta * rp;
}

// Immediate shaping subtracts the previous step's mission reward. Episode
// shaping is the running prefix sum of those differences, which telescopes
// to the difference against the episode-start reward, so callers pass the
// matching reference value for the chosen kind.
inline double shape_step_reward(double r_now, double r_ref, StepRewardKind /*kind*/) {
    return r_now - r_ref;
}

inline std::pair<bool, Outcome> is_terminal(const EnvState& s, const WorldConfig& cfg) {
    if (at_target(s, cfg)) return {true, Outcome::ReachedTarget};
    if (s.step >= cfg.t_cons) return {true, Outcome::OutOfSteps};
    return {false, Outcome::Running};
}

inline EnvState reset(const WorldConfig& cfg, Rng& rng) {
    cfg.validate();
    EnvState s;
    s.uav = cfg.start;
    s.alt_index = detail::altitude_index(cfg.altitude_levels, cfg.start.h);
    for (std::size_t m = 0; m < cfg.clusters.size(); ++m) {
        const auto& c = cfg.clusters[m];
        for (int k = 0; k < c.n_users; ++k) {
            // uniform over the disc
            const double r = c.radius * std::sqrt(rng.uniform());
            const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
            UserState u;
            u.pos = {c.center.x + r * std::cos(theta), c.center.y + r * std::sin(theta)};
            u.cluster_id = static_cast<int>(m);
            u.user_id = k;
            s.users.push_back(u);
        }
    }
    const double r0 = mission_reward(s, cfg);
    s.mission_reward_prev = r0;
    s.mission_reward_initial = r0;
    return s;
}

inline EnvState reset(const WorldConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    return reset(cfg, rng);
}

namespace detail {

inline void move_uav(EnvState& s, Action a, const WorldConfig& cfg) {
    const double g = cfg.grid_step;
    switch (a) {
        case Action::Left: s.uav.x = std::max(0.0, s.uav.x - g); break;
        case Action::Right: s.uav.x = std::min(cfg.area_x, s.uav.x + g); break;
        case Action::Forward: s.uav.y = std::min(cfg.area_y, s.uav.y + g); break;
        case Action::Backward: s.uav.y = std::max(0.0, s.uav.y - g); break;
        case Action::Upward:
            s.alt_index = std::min(s.alt_index + 1, cfg.cells_h() - 1);
            break;
        case Action::Downward: s.alt_index = std::max(s.alt_index - 1, 0); break;
        case Action::Hover: break;
    }
    s.uav.h = cfg.altitude_levels[static_cast<std::size_t>(s.alt_index)];
}

// One random-walk move of length at most user_speed*dt, reflected at the
// cluster boundary so the user stays inside its disc.
inline void walk_user(UserState& u, const Cluster& c, const WorldConfig& cfg, Rng& rng) {
    const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double len = rng.uniform() * cfg.user_speed * cfg.dt;
    double nx = u.pos.x + len * std::cos(theta);
    double ny = u.pos.y + len * std::sin(theta);
    double dx = nx - c.center.x;
    double dy = ny - c.center.y;
    const double dist = std::hypot(dx, dy);
    if (dist > c.radius && dist > 0.0) {
        const double reflected = 2.0 * c.radius - dist;  // step length << radius
        nx = c.center.x + dx / dist * std::max(reflected, 0.0);
        ny = c.center.y + dy / dist * std::max(reflected, 0.0);
    }
    u.pos = {nx, ny};
}

}  // namespace detail

struct StepResult {
    double step_reward = 0.0;
    bool done = false;
};

// Advances the environment by one step: UAV motion, user walks, data
// collection over the active set, termination and reward shaping.
inline StepResult step(EnvState& s, Action a, const WorldConfig& cfg, Rng& rng) {
    if (s.done) throw std::logic_error("step: episode already finished");

    detail::move_uav(s, a, cfg);

    for (auto& u : s.users)
        if (!u.collected)
            detail::walk_user(u, cfg.clusters[static_cast<std::size_t>(u.cluster_id)], cfg, rng);

    const std::vector<int> active = active_set(s, cfg);
    if (!active.empty()) {
        std::vector<double> gains(active.size());
        for (std::size_t i = 0; i < active.size(); ++i) {
            const auto& u = s.users[static_cast<std::size_t>(active[i])];
            const double d = distance(s.uav, u.pos);
            if (d > cfg.d_cons) throw std::logic_error("step: rate accrual beyond d_cons");
            gains[i] = channel_gain(d, cfg.channel);
        }
        std::vector<double> interferers(active.size() - 1);
        for (std::size_t i = 0; i < active.size(); ++i) {
            auto& u = s.users[static_cast<std::size_t>(active[i])];
            if (u.collected) throw std::logic_error("step: collected user re-served");
            u.ever_active = true;
            interferers.clear();
            for (std::size_t j = 0; j < active.size(); ++j)
                if (j != i) interferers.push_back(gains[j]);
            const double rate = uplink_rate(gains[i], interferers, cfg.channel);
            u.collected_bits = accumulate(u.collected_bits, rate, cfg.dt);
            if (u.collected_bits >= cfg.r_min) u.collected = true;
        }
    }

    s.step += 1;
    if (s.step > cfg.t_cons) throw std::logic_error("step: exceeded t_cons");
    const auto [done, outcome] = is_terminal(s, cfg);
    s.done = done;
    s.outcome = done ? outcome : Outcome::Running;

    const double r_now = mission_reward(s, cfg);
    const double r_ref = cfg.step_reward_kind == StepRewardKind::Immediate
                             ? s.mission_reward_prev
                             : s.mission_reward_initial;
    const double reward = shape_step_reward(r_now, r_ref, cfg.step_reward_kind);
    s.episode_reward_so_far += r_now - s.mission_reward_prev;
    s.mission_reward_prev = r_now;

    return {reward, s.done};
}

}  // namespace uavrl
