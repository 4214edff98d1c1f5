#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "uavrl/agents.hpp"
#include "uavrl/environment.hpp"
#include "uavrl/metrics.hpp"

namespace uavrl {

struct ExperimentSpec {
    WorldConfig world;
    AgentConfig agent;
    Algorithm algorithm = Algorithm::Dql;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    std::filesystem::path output_dir = "out";

    int repeats() const { return static_cast<int>(seeds.size()); }

    void validate() const {
        world.validate();
        agent.validate();
        if (seeds.empty()) throw std::invalid_argument("ExperimentSpec.seeds: must be non-empty");
        if (output_dir.empty())
            throw std::invalid_argument("ExperimentSpec.output_dir: must be non-empty");
    }
};

// Numeric view of one metrics-CSV row; averaged files hold column means, so
// every field is a double even where a single run would store an integer.
struct MetricsRow {
    double episode = 0.0;
    double mission_reward = 0.0;
    double collected_mbit = 0.0;
    double users_collected = 0.0;
    double steps = 0.0;
    double reached_target = 0.0;
};

inline MetricsRow to_row(const EpisodeMetrics& m) {
    return {static_cast<double>(m.episode),
            m.mission_reward,
            m.collected_mbit,
            static_cast<double>(m.users_collected),
            static_cast<double>(m.steps),
            m.outcome == Outcome::ReachedTarget ? 1.0 : 0.0};
}

namespace detail {

inline std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);
    return parts;
}

inline std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

inline double parse_double(const std::string& s, const std::string& what) {
    const std::string t = trim(s);
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size())
        throw std::invalid_argument(what + ": cannot parse number '" + s + "'");
    return v;
}

inline long long parse_int(const std::string& s, const std::string& what) {
    const double v = parse_double(s, what);
    const long long i = static_cast<long long>(v);
    if (static_cast<double>(i) != v)
        throw std::invalid_argument(what + ": expected an integer, got '" + s + "'");
    return i;
}

inline std::uint64_t parse_u64(const std::string& s, const std::string& what) {
    const std::string t = trim(s);
    char* end = nullptr;
    const unsigned long long v = std::strtoull(t.c_str(), &end, 10);
    if (t.empty() || end != t.c_str() + t.size())
        throw std::invalid_argument(what + ": cannot parse seed '" + s + "'");
    return v;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    return out;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    return in;
}

inline void expect_line(std::istream& in, const std::string& expected,
                        const std::string& path) {
    std::string line;
    std::getline(in, line);
    if (line != expected)
        throw std::runtime_error(path + ": expected '" + expected + "', got '" + line + "'");
}

}  // namespace detail

// --- metrics CSV --------------------------------------------------------

inline constexpr const char* kMetricsHeader =
    "episode,mission_reward,collected_mbit,users_collected,steps,reached_target";

inline void write_metrics_csv(const std::vector<MetricsRow>& rows,
                              const std::filesystem::path& path) {
    auto out = detail::open_out(path);
    out << "# uavrl-metrics v1\n" << kMetricsHeader << "\n";
    for (const auto& r : rows) {
        out << detail::fmt_g17(r.episode) << ',' << detail::fmt_g17(r.mission_reward) << ','
            << detail::fmt_g17(r.collected_mbit) << ',' << detail::fmt_g17(r.users_collected)
            << ',' << detail::fmt_g17(r.steps) << ',' << detail::fmt_g17(r.reached_target)
            << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path) {
    auto in = detail::open_in(path);
    detail::expect_line(in, "# uavrl-metrics v1", path.string());
    detail::expect_line(in, kMetricsHeader, path.string());
    std::vector<MetricsRow> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = detail::split(line, ',');
        if (f.size() != 6) throw std::runtime_error(path.string() + ": bad metrics row");
        rows.push_back({detail::parse_double(f[0], "episode"),
                        detail::parse_double(f[1], "mission_reward"),
                        detail::parse_double(f[2], "collected_mbit"),
                        detail::parse_double(f[3], "users_collected"),
                        detail::parse_double(f[4], "steps"),
                        detail::parse_double(f[5], "reached_target")});
    }
    return rows;
}

// --- trajectory CSV -------------------------------------------------------

inline constexpr const char* kTrajectoryHeader =
    "step,x,y,h,action,step_reward,active_users,cumulative_mbit";

inline void write_trajectory(const std::vector<TrajectoryPoint>& history,
                             const std::filesystem::path& path) {
    if (history.empty())
        throw std::invalid_argument("write_trajectory: history must be non-empty");
    auto out = detail::open_out(path);
    out << "# uavrl-trajectory v1\n" << kTrajectoryHeader << "\n";
    for (const auto& p : history) {
        out << p.step << ',' << detail::fmt_g17(p.x) << ',' << detail::fmt_g17(p.y) << ','
            << detail::fmt_g17(p.h) << ',' << p.action << ','
            << detail::fmt_g17(p.step_reward) << ',' << p.active_users << ','
            << detail::fmt_g17(p.cumulative_mbit) << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline std::vector<TrajectoryPoint> read_trajectory(const std::filesystem::path& path) {
    auto in = detail::open_in(path);
    detail::expect_line(in, "# uavrl-trajectory v1", path.string());
    detail::expect_line(in, kTrajectoryHeader, path.string());
    std::vector<TrajectoryPoint> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = detail::split(line, ',');
        if (f.size() != 8) throw std::runtime_error(path.string() + ": bad trajectory row");
        TrajectoryPoint p;
        p.step = static_cast<int>(detail::parse_int(f[0], "step"));
        p.x = detail::parse_double(f[1], "x");
        p.y = detail::parse_double(f[2], "y");
        p.h = detail::parse_double(f[3], "h");
        p.action = static_cast<int>(detail::parse_int(f[4], "action"));
        p.step_reward = detail::parse_double(f[5], "step_reward");
        p.active_users = static_cast<int>(detail::parse_int(f[6], "active_users"));
        p.cumulative_mbit = detail::parse_double(f[7], "cumulative_mbit");
        rows.push_back(p);
    }
    return rows;
}

// --- experiment config files ---------------------------------------------
//
// Flat "key = value" sections. Channel gains may be given either in dB
// (beta0_db, noise_dbm) or directly in linear units (beta0, noise_w); the
// loader stores linear values. Unknown sections or keys are errors.

namespace detail {

struct IniEntry {
    std::string section;
    std::string key;
    std::string value;
    int line = 0;
};

inline std::vector<IniEntry> parse_ini(std::istream& in, const std::string& path) {
    std::vector<IniEntry> entries;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                            ": malformed section header");
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                        ": expected 'key = value'");
        entries.push_back(
            {section, trim(t.substr(0, eq)), trim(t.substr(eq + 1)), lineno});
    }
    return entries;
}

inline std::vector<double> parse_double_list(const std::string& s, const std::string& what) {
    std::vector<double> values;
    for (const auto& part : split(s, ','))
        values.push_back(parse_double(part, what));
    return values;
}

}  // namespace detail

inline RplusKind parse_rplus(const std::string& s) {
    if (s == "binary") return RplusKind::Binary;
    if (s == "exp" || s == "exponential") return RplusKind::Exponential;
    throw std::invalid_argument("rplus: expected binary|exponential, got '" + s + "'");
}

inline StepRewardKind parse_step_reward(const std::string& s) {
    if (s == "immediate") return StepRewardKind::Immediate;
    if (s == "episode") return StepRewardKind::Episode;
    throw std::invalid_argument("step_reward: expected immediate|episode, got '" + s + "'");
}

inline Algorithm parse_algorithm(const std::string& s) {
    if (s == "tabular") return Algorithm::Tabular;
    if (s == "dql") return Algorithm::Dql;
    if (s == "dueling" || s == "dueling_dql") return Algorithm::DuelingDql;
    throw std::invalid_argument("algorithm: expected tabular|dql|dueling, got '" + s + "'");
}

inline CombineMode parse_combine(const std::string& s) {
    if (s == "mean") return CombineMode::Mean;
    if (s == "max") return CombineMode::Max;
    throw std::invalid_argument("combine: expected mean|max, got '" + s + "'");
}

inline ExperimentSpec load_spec(const std::filesystem::path& path) {
    auto in = detail::open_in(path);
    const auto entries = detail::parse_ini(in, path.string());

    ExperimentSpec spec;
    spec.world.clusters.clear();
    bool seeds_given = false;

    for (const auto& e : entries) {
        const std::string where =
            path.string() + ":" + std::to_string(e.line) + " [" + e.section + "] " + e.key;
        auto& w = spec.world;
        auto& a = spec.agent;
        if (e.section == "world") {
            if (e.key == "area_x") w.area_x = detail::parse_double(e.value, where);
            else if (e.key == "area_y") w.area_y = detail::parse_double(e.value, where);
            else if (e.key == "grid_step") w.grid_step = detail::parse_double(e.value, where);
            else if (e.key == "altitude_levels")
                w.altitude_levels = detail::parse_double_list(e.value, where);
            else if (e.key == "start" || e.key == "target") {
                const auto v = detail::parse_double_list(e.value, where);
                if (v.size() != 3)
                    throw std::invalid_argument(where + ": expected 'x,y,h'");
                (e.key == "start" ? w.start : w.target) = {v[0], v[1], v[2]};
            } else if (e.key == "d_cons") w.d_cons = detail::parse_double(e.value, where);
            else if (e.key == "r_min_mbit")
                w.r_min = detail::parse_double(e.value, where) * 1e6;
            else if (e.key == "t_cons")
                w.t_cons = static_cast<int>(detail::parse_int(e.value, where));
            else if (e.key == "user_speed") w.user_speed = detail::parse_double(e.value, where);
            else if (e.key == "beta") w.beta = detail::parse_double(e.value, where);
            else if (e.key == "zeta") w.zeta = detail::parse_double(e.value, where);
            else if (e.key == "rplus") w.rplus_kind = parse_rplus(e.value);
            else if (e.key == "step_reward") w.step_reward_kind = parse_step_reward(e.value);
            else if (e.key == "dt") w.dt = detail::parse_double(e.value, where);
            else throw std::invalid_argument(where + ": unknown key");
        } else if (e.section == "channel") {
            if (e.key == "bandwidth_hz")
                w.channel.bandwidth_hz = detail::parse_double(e.value, where);
            else if (e.key == "tx_power_w")
                w.channel.tx_power_w = detail::parse_double(e.value, where);
            else if (e.key == "beta0_db")
                w.channel.beta0 = db_to_linear(detail::parse_double(e.value, where));
            else if (e.key == "beta0") w.channel.beta0 = detail::parse_double(e.value, where);
            else if (e.key == "noise_dbm")
                w.channel.noise_power_w = dbm_to_watts(detail::parse_double(e.value, where));
            else if (e.key == "noise_w")
                w.channel.noise_power_w = detail::parse_double(e.value, where);
            else throw std::invalid_argument(where + ": unknown key");
        } else if (e.section == "clusters") {
            if (e.key == "cluster") {
                const auto v = detail::parse_double_list(e.value, where);
                if (v.size() != 4)
                    throw std::invalid_argument(where + ": expected 'cx,cy,radius,n_users'");
                Cluster c;
                c.center = {v[0], v[1]};
                c.radius = v[2];
                c.n_users = static_cast<int>(v[3]);
                if (static_cast<double>(c.n_users) != v[3])
                    throw std::invalid_argument(where + ": n_users must be an integer");
                w.clusters.push_back(c);
            } else throw std::invalid_argument(where + ": unknown key");
        } else if (e.section == "agent") {
            if (e.key == "epsilon") a.epsilon = detail::parse_double(e.value, where);
            else if (e.key == "gamma") a.gamma = detail::parse_double(e.value, where);
            else if (e.key == "learning_rate")
                a.learning_rate = detail::parse_double(e.value, where);
            else if (e.key == "batch_size")
                a.batch_size = static_cast<int>(detail::parse_int(e.value, where));
            else if (e.key == "buffer_capacity")
                a.buffer_capacity = static_cast<int>(detail::parse_int(e.value, where));
            else if (e.key == "target_sync_period")
                a.target_sync_period = static_cast<int>(detail::parse_int(e.value, where));
            else if (e.key == "episodes")
                a.episodes = static_cast<int>(detail::parse_int(e.value, where));
            else if (e.key == "hidden") {
                a.hidden.clear();
                for (double v : detail::parse_double_list(e.value, where))
                    a.hidden.push_back(static_cast<int>(v));
            } else if (e.key == "stream_hidden")
                a.stream_hidden = static_cast<int>(detail::parse_int(e.value, where));
            else if (e.key == "combine") a.combine = parse_combine(e.value);
            else throw std::invalid_argument(where + ": unknown key");
        } else if (e.section == "run") {
            if (e.key == "algorithm") spec.algorithm = parse_algorithm(e.value);
            else if (e.key == "seeds") {
                spec.seeds.clear();
                for (const auto& part : detail::split(e.value, ','))
                    spec.seeds.push_back(detail::parse_u64(part, where));
                seeds_given = true;
            } else if (e.key == "output_dir") spec.output_dir = e.value;
            else throw std::invalid_argument(where + ": unknown key");
        } else {
            throw std::invalid_argument(path.string() + ":" + std::to_string(e.line) +
                                        ": unknown section [" + e.section + "]");
        }
    }
    (void)seeds_given;
    spec.validate();
    return spec;
}

inline void save_spec(const ExperimentSpec& spec, const std::filesystem::path& path) {
    auto out = detail::open_out(path);
    const auto& w = spec.world;
    const auto& a = spec.agent;
    auto g = detail::fmt_g17;
    out << "# uavrl experiment config\n[world]\n";
    out << "area_x = " << g(w.area_x) << "\narea_y = " << g(w.area_y) << "\n";
    out << "grid_step = " << g(w.grid_step) << "\naltitude_levels = ";
    for (std::size_t i = 0; i < w.altitude_levels.size(); ++i)
        out << (i ? "," : "") << g(w.altitude_levels[i]);
    out << "\nstart = " << g(w.start.x) << ',' << g(w.start.y) << ',' << g(w.start.h);
    out << "\ntarget = " << g(w.target.x) << ',' << g(w.target.y) << ',' << g(w.target.h);
    out << "\nd_cons = " << g(w.d_cons) << "\nr_min_mbit = " << g(w.r_min / 1e6);
    out << "\nt_cons = " << w.t_cons << "\nuser_speed = " << g(w.user_speed);
    out << "\nbeta = " << g(w.beta) << "\nzeta = " << g(w.zeta);
    out << "\nrplus = " << (w.rplus_kind == RplusKind::Binary ? "binary" : "exponential");
    out << "\nstep_reward = "
        << (w.step_reward_kind == StepRewardKind::Immediate ? "immediate" : "episode");
    out << "\ndt = " << g(w.dt) << "\n\n[channel]\n";
    out << "bandwidth_hz = " << g(w.channel.bandwidth_hz) << "\n";
    out << "tx_power_w = " << g(w.channel.tx_power_w) << "\n";
    out << "beta0 = " << g(w.channel.beta0) << "\n";
    out << "noise_w = " << g(w.channel.noise_power_w) << "\n\n[clusters]\n";
    for (const auto& c : w.clusters)
        out << "cluster = " << g(c.center.x) << ',' << g(c.center.y) << ',' << g(c.radius)
            << ',' << c.n_users << "\n";
    out << "\n[agent]\n";
    out << "epsilon = " << g(a.epsilon) << "\ngamma = " << g(a.gamma) << "\n";
    out << "learning_rate = " << g(a.learning_rate) << "\nbatch_size = " << a.batch_size
        << "\n";
    out << "buffer_capacity = " << a.buffer_capacity
        << "\ntarget_sync_period = " << a.target_sync_period << "\n";
    out << "episodes = " << a.episodes << "\nhidden = ";
    for (std::size_t i = 0; i < a.hidden.size(); ++i) out << (i ? "," : "") << a.hidden[i];
    out << "\nstream_hidden = " << a.stream_hidden;
    out << "\ncombine = " << (a.combine == CombineMode::Mean ? "mean" : "max") << "\n";
    out << "\n[run]\n";
    out << "algorithm = " << algorithm_name(spec.algorithm) << "\nseeds = ";
    for (std::size_t i = 0; i < spec.seeds.size(); ++i)
        out << (i ? "," : "") << spec.seeds[i];
    out << "\noutput_dir = " << spec.output_dir.string() << "\n";
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

// Built-in scenarios: a simple three-cluster layout and a denser
// five-cluster one, both with ten users per cluster. Clusters sit in the
// middle of the field, well away from the launch corner, so an untrained
// UAV collects next to nothing.
inline ExperimentSpec make_preset(const std::string& name) {
    ExperimentSpec spec;
    if (name == "three_clusters") {
        spec.world.clusters = {{{400, 600}, 100, 10}, {{600, 300}, 100, 10},
                               {{850, 750}, 100, 10}};
        spec.output_dir = "out/three_clusters";
    } else if (name == "five_clusters") {
        spec.world.clusters = {{{300, 500}, 100, 10}, {{550, 250}, 100, 10},
                               {{500, 750}, 100, 10}, {{750, 500}, 100, 10},
                               {{900, 850}, 100, 10}};
        spec.output_dir = "out/five_clusters";
    } else {
        throw std::invalid_argument("unknown scenario '" + name +
                                    "' (expected three_clusters|five_clusters)");
    }
    return spec;
}

// --- run / sweep -----------------------------------------------------------

struct RunRecord {
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    std::vector<EpisodeMetrics> episodes;
    std::filesystem::path metrics_path;
    std::filesystem::path trajectory_path;
    std::filesystem::path model_path;
};

struct RunSummary {
    std::filesystem::path dir;
    std::vector<RunRecord> runs;
    std::vector<MetricsRow> averaged;
    std::filesystem::path average_path;
};

namespace detail {

inline std::vector<MetricsRow> average_rows(const std::vector<std::vector<MetricsRow>>& runs) {
    std::vector<MetricsRow> avg;
    if (runs.empty()) return avg;
    const std::size_t episodes = runs.front().size();
    for (const auto& r : runs)
        if (r.size() != episodes)
            throw std::invalid_argument("average_rows: runs have different episode counts");
    avg.resize(episodes);
    const double n = static_cast<double>(runs.size());
    for (std::size_t e = 0; e < episodes; ++e) {
        MetricsRow acc;
        for (const auto& r : runs) {
            acc.episode += r[e].episode;
            acc.mission_reward += r[e].mission_reward;
            acc.collected_mbit += r[e].collected_mbit;
            acc.users_collected += r[e].users_collected;
            acc.steps += r[e].steps;
            acc.reached_target += r[e].reached_target;
        }
        avg[e] = {acc.episode / n,         acc.mission_reward / n, acc.collected_mbit / n,
                  acc.users_collected / n, acc.steps / n,          acc.reached_target / n};
    }
    return avg;
}

// Runs fn(0..n-1) on up to max_workers threads.
template <typename Fn>
void parallel_for(int n, int max_workers, Fn&& fn) {
    const int workers = std::max(1, std::min(n, max_workers));
    if (workers == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    for (auto& th : pool) th.join();
}

}  // namespace detail

// Trains spec.repeats() agents (one per seed), writes one metrics CSV, one
// final-episode trajectory and one model file per run, plus the per-episode
// average across the runs that completed. Runs execute in parallel.
inline RunSummary run(const ExperimentSpec& spec, const TrainCallbacks& callbacks = {},
                      int max_workers = static_cast<int>(std::thread::hardware_concurrency())) {
    spec.validate();
    std::filesystem::create_directories(spec.output_dir);

    RunSummary summary;
    summary.dir = spec.output_dir;
    summary.runs.resize(spec.seeds.size());

    detail::parallel_for(spec.repeats(), max_workers, [&](int i) {
        RunRecord& rec = summary.runs[static_cast<std::size_t>(i)];
        rec.seed = spec.seeds[static_cast<std::size_t>(i)];
        try {
            TrainResult result =
                train(spec.world, spec.agent, spec.algorithm, rec.seed, callbacks);
            rec.episodes = std::move(result.episodes);

            const std::string tag = std::to_string(i);
            rec.metrics_path = spec.output_dir / ("run_" + tag + ".csv");
            std::vector<MetricsRow> rows;
            rows.reserve(rec.episodes.size());
            for (const auto& m : rec.episodes) rows.push_back(to_row(m));
            write_metrics_csv(rows, rec.metrics_path);

            if (!result.final_trajectory.empty()) {
                rec.trajectory_path = spec.output_dir / ("trajectory_" + tag + ".csv");
                write_trajectory(result.final_trajectory, rec.trajectory_path);
            }
            if (spec.algorithm == Algorithm::Tabular) {
                rec.model_path = spec.output_dir / ("qtable_" + tag + ".txt");
                save_table(result.table, rec.model_path.string());
            } else {
                rec.model_path = spec.output_dir / ("model_" + tag + ".qnet");
                save_network(result.net, rec.model_path.string());
            }
            rec.ok = true;
        } catch (const std::exception& e) {
            rec.ok = false;
            rec.error = e.what();
        }
    });

    std::vector<std::vector<MetricsRow>> completed;
    for (const auto& rec : summary.runs) {
        if (!rec.ok) continue;
        std::vector<MetricsRow> rows;
        rows.reserve(rec.episodes.size());
        for (const auto& m : rec.episodes) rows.push_back(to_row(m));
        completed.push_back(std::move(rows));
    }
    if (!completed.empty()) {
        summary.averaged = detail::average_rows(completed);
        summary.average_path = spec.output_dir / "average.csv";
        write_metrics_csv(summary.averaged, summary.average_path);
    }
    return summary;
}

inline const std::vector<std::string>& sweep_parameter_names() {
    static const std::vector<std::string> names = {
        "beta_zeta", "rplus_kind", "reward_kind",  "gamma",
        "epsilon",   "batch_size", "learning_rate"};
    return names;
}

inline void apply_sweep_value(ExperimentSpec& spec, const std::string& param,
                              const std::string& value) {
    if (param == "beta_zeta") {
        const auto parts = detail::split(value, ':');
        if (parts.size() != 2)
            throw std::invalid_argument("beta_zeta: expected 'beta:zeta', got '" + value + "'");
        spec.world.beta = detail::parse_double(parts[0], "beta_zeta");
        spec.world.zeta = detail::parse_double(parts[1], "beta_zeta");
    } else if (param == "rplus_kind") {
        spec.world.rplus_kind = parse_rplus(value);
    } else if (param == "reward_kind") {
        spec.world.step_reward_kind = parse_step_reward(value);
    } else if (param == "gamma") {
        spec.agent.gamma = detail::parse_double(value, "gamma");
    } else if (param == "epsilon") {
        spec.agent.epsilon = detail::parse_double(value, "epsilon");
    } else if (param == "batch_size") {
        spec.agent.batch_size = static_cast<int>(detail::parse_int(value, "batch_size"));
    } else if (param == "learning_rate") {
        spec.agent.learning_rate = detail::parse_double(value, "learning_rate");
    } else {
        std::string names;
        for (const auto& n : sweep_parameter_names()) names += (names.empty() ? "" : ", ") + n;
        throw std::invalid_argument("unknown sweep parameter '" + param + "' (valid: " + names +
                                    ")");
    }
}

namespace detail {

inline std::string sanitize_component(const std::string& s) {
    std::string out;
    for (char c : s)
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-') ? c : '_';
    return out;
}

}  // namespace detail

// One run() per value, each in its own subdirectory, plus a manifest that
// lists the requested points in order.
inline std::vector<RunSummary> sweep(const ExperimentSpec& base, const std::string& param,
                                     const std::vector<std::string>& values,
                                     const TrainCallbacks& callbacks = {},
                                     int max_workers =
                                         static_cast<int>(std::thread::hardware_concurrency())) {
    const auto& names = sweep_parameter_names();
    if (std::find(names.begin(), names.end(), param) == names.end()) {
        std::string listed;
        for (const auto& n : names) listed += (listed.empty() ? "" : ", ") + n;
        throw std::invalid_argument("unknown sweep parameter '" + param +
                                    "' (valid: " + listed + ")");
    }
    std::filesystem::create_directories(base.output_dir);

    std::vector<RunSummary> summaries;
    std::vector<std::string> dirs;
    for (const auto& value : values) {
        ExperimentSpec point = base;
        apply_sweep_value(point, param, value);
        const std::string dir_name = param + "_" + detail::sanitize_component(value);
        point.output_dir = base.output_dir / dir_name;
        dirs.push_back(dir_name);
        summaries.push_back(run(point, callbacks, max_workers));
    }

    auto out = detail::open_out(base.output_dir / "manifest.csv");
    out << "# uavrl-sweep-manifest v1\nparam,value,dir\n";
    for (std::size_t i = 0; i < values.size(); ++i)
        out << param << ',' << values[i] << ',' << dirs[i] << '\n';
    if (!out) throw std::runtime_error("write failed: manifest.csv");

    return summaries;
}

struct ManifestEntry {
    std::string param;
    std::string value;
    std::string dir;
};

inline std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
    auto in = detail::open_in(path);
    detail::expect_line(in, "# uavrl-sweep-manifest v1", path.string());
    detail::expect_line(in, "param,value,dir", path.string());
    std::vector<ManifestEntry> entries;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = detail::split(line, ',');
        if (f.size() != 3) throw std::runtime_error(path.string() + ": bad manifest row");
        entries.push_back({f[0], f[1], f[2]});
    }
    return entries;
}

}  // namespace uavrl
