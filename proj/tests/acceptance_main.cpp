// Acceptance suite: one criterion per function, one PASS/FAIL line each.
// Exit code is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "uavrl/uavrl.hpp"

using namespace uavrl;
namespace fs = std::filesystem;

namespace {

struct Check {
    bool ok = true;
    std::string note;

    void expect(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            note += (note.empty() ? "" : "; ") + what;
        }
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<double> moving_average(const std::vector<double>& v, int window) {
    std::vector<double> out(v.size(), 0.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        acc += v[i];
        if (i >= static_cast<std::size_t>(window)) acc -= v[i - static_cast<std::size_t>(window)];
        const int n = std::min<int>(window, static_cast<int>(i) + 1);
        out[i] = acc / n;
    }
    return out;
}

// episode index at which the smoothed curve first reaches 90% of its final level
int episodes_to_90(const std::vector<double>& ma) {
    const double final_value = ma.back();
    const double threshold = 0.9 * final_value;
    for (std::size_t i = 0; i < ma.size(); ++i)
        if (ma[i] >= threshold) return static_cast<int>(i);
    return static_cast<int>(ma.size());
}

std::vector<double> averaged_rewards(const RunSummary& summary) {
    std::vector<double> rewards;
    rewards.reserve(summary.averaged.size());
    for (const auto& row : summary.averaged) rewards.push_back(row.mission_reward);
    return rewards;
}

// ---------------------------------------------------------------------------

Check criterion_channel_math() {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    const ChannelParams params{1e-5, 1e6, 1e-14, 5.0};

    auto close = [](double a, double b, double rel) {
        return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b));
    };

    c.expect(close(distance({0, 0, 200}, {0, 0}), 200.0, 1e-9), "distance at altitude");
    c.expect(close(distance({100, 0, 100}, {100, 100}), 141.4213562373095, 1e-9),
             "distance worked value");
    c.expect(close(channel_gain(200.0, params), 2.5e-10, 1e-9), "gain at 200 m");
    c.expect(close(uplink_rate(2.5e-10, {}, params), 16931580.110838335, 1e-9),
             "single-user rate");

    Rng rng(101);
    for (int i = 0; i < 1000; ++i) {
        const double d = rng.uniform(0.5, 3000);
        c.expect(close(channel_gain(d, params) * d * d, params.beta0, 1e-12),
                 "inverse-square identity");
    }
    for (int i = 0; i < 200; ++i) {
        const double g = rng.uniform(1e-12, 1e-8);
        const double other = rng.uniform(0, 1e-9);
        const double base = uplink_rate(g, std::vector<double>{other}, params);
        c.expect(uplink_rate(g * 1.001, std::vector<double>{other}, params) > base,
                 "rate increasing in target gain");
        c.expect(uplink_rate(g, std::vector<double>{other + 1e-11}, params) < base,
                 "rate decreasing in interference");
    }

    const double elapsed = seconds_since(t0);
    c.expect(elapsed < 1.0, "runtime " + std::to_string(elapsed) + "s exceeds 1s");
    return c;
}

Check criterion_gradient_correctness() {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();

    Rng rng(424242);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        NetConfig cfg;
        cfg.input_dim = 1 + rng.uniform_int(4);
        cfg.hidden = {4 + rng.uniform_int(16), 4 + rng.uniform_int(16)};
        cfg.outputs = kNumActions;
        cfg.head = (trial % 2 == 0) ? HeadKind::Plain : HeadKind::Dueling;
        cfg.combine = CombineMode::Mean;
        cfg.stream_hidden = 4 + rng.uniform_int(8);
        QNetwork net = make_network(cfg, rng.next_u64());

        std::vector<double> x(static_cast<std::size_t>(cfg.input_dim));
        for (auto& v : x) v = rng.uniform();
        const double err =
            gradient_check(net, x, rng.uniform_int(kNumActions), rng.uniform(-2, 2), rng);
        worst = std::max(worst, err);
        c.expect(err < 1e-4, "trial " + std::to_string(trial) + " error " + std::to_string(err));
    }

    const double elapsed = seconds_since(t0);
    c.expect(elapsed < 30.0, "runtime " + std::to_string(elapsed) + "s exceeds 30s");
    c.note = c.note.empty() ? "max rel err " + std::to_string(worst) : c.note;
    return c;
}

Check criterion_dueling_identifiability() {
    Check c;
    Rng rng(777);

    for (const auto mode : {CombineMode::Mean, CombineMode::Max}) {
        NetConfig cfg;
        cfg.head = HeadKind::Dueling;
        cfg.combine = mode;
        QNetwork net = make_network(cfg, rng.next_u64());
        for (int i = 0; i < 1000; ++i) {
            std::vector<double> x = {rng.uniform(), rng.uniform(), rng.uniform()};
            ForwardCache cache;
            forward(net, x, cache);
            const double scale = std::max(1.0, std::abs(cache.value));
            if (mode == CombineMode::Mean) {
                double mean = 0.0;
                for (double q : cache.q) mean += q - cache.value;
                mean /= static_cast<double>(cache.q.size());
                c.expect(std::abs(mean) <= 1e-10 * scale, "mean-mode centering");
            } else {
                double best = -1e300;
                for (double q : cache.q) best = std::max(best, q - cache.value);
                c.expect(std::abs(best) <= 1e-10 * scale, "max-mode zero at argmax");
            }
        }
    }

    // shift invariance, bit-exact on dyadic inputs
    const std::vector<double> base = {7, 0, -1, 2, 0.5, 0, 0.25};
    for (const auto mode : {CombineMode::Mean, CombineMode::Max}) {
        for (const double shift : {1.0, -4.0, 0.125, 32.0}) {
            std::vector<double> shifted = base;
            for (double& v : shifted) v += shift;
            const auto q0 = dueling_combine(2.5, base, mode);
            const auto q1 = dueling_combine(2.5, shifted, mode);
            for (std::size_t i = 0; i < q0.size(); ++i)
                c.expect(q0[i] == q1[i], "advantage shift invariance");
        }
    }
    return c;
}

Check criterion_oracle_equivalence() {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();

    // 10x10 single-altitude grid; a frozen cluster rides along but the
    // reward is trajectory-only, so the game is positional
    WorldConfig world;
    world.area_x = 450;
    world.area_y = 450;
    world.grid_step = 50;
    world.altitude_levels = {100};
    world.start = {0, 0, 100};
    world.target = {450, 450, 100};
    world.clusters = {{{250, 250}, 100, 3}};
    world.user_speed = 0.0;
    world.beta = 0.0;
    world.zeta = 1.0;
    world.rplus_kind = RplusKind::Exponential;
    world.step_reward_kind = StepRewardKind::Immediate;
    world.t_cons = 2000;

    const auto oracle = value_iteration_oracle(world, 0.9, 1e-12);
    const int tix = cell_ix(world.target, world);
    const int tiy = cell_iy(world.target, world);

    auto match_fraction = [&](const std::function<int(int, int)>& greedy) {
        int total = 0, matches = 0;
        for (int iy = 0; iy < world.cells_y(); ++iy) {
            for (int ix = 0; ix < world.cells_x(); ++ix) {
                if (ix == tix && iy == tiy) continue;
                const auto& row = oracle[static_cast<std::size_t>(cell_index(ix, iy, 0, world))];
                const double best = *std::max_element(row.begin(), row.end());
                ++total;
                if (row[static_cast<std::size_t>(greedy(ix, iy))] >= best - 1e-9) ++matches;
            }
        }
        return static_cast<double>(matches) / total;
    };

    AgentConfig tab;
    tab.epsilon = 0.2;
    tab.gamma = 0.9;
    tab.learning_rate = 0.2;
    tab.episodes = 6000;
    const TrainResult tab_result = train(world, tab, Algorithm::Tabular, 17);
    const double tab_match = match_fraction([&](int ix, int iy) {
        return argmax_lowest(tab_result.table.row(cell_index(ix, iy, 0, world)));
    });
    c.expect(tab_match == 1.0,
             "tabular greedy matches oracle on " + std::to_string(tab_match * 100) + "% only");

    AgentConfig dql;
    dql.epsilon = 0.7;
    dql.gamma = 0.9;
    dql.learning_rate = 1e-3;
    dql.episodes = 1200;
    const TrainResult dql_result = train(world, dql, Algorithm::Dql, 17);
    const double dql_match = match_fraction([&](int ix, int iy) {
        EnvState probe;
        probe.uav = {ix * world.grid_step, iy * world.grid_step, 100.0};
        probe.alt_index = 0;
        const auto q = forward(dql_result.net, normalized_state(probe, world));
        return argmax_lowest(q);
    });
    c.expect(dql_match >= 0.95,
             "dql greedy matches oracle on " + std::to_string(dql_match * 100) + "%");

    const double elapsed = seconds_since(t0);
    c.expect(elapsed < 300.0, "runtime " + std::to_string(elapsed) + "s exceeds 5min");
    c.note = "tabular " + std::to_string(tab_match * 100) + "%, dql " +
             std::to_string(dql_match * 100) + "%";
    return c;
}

Check criterion_rplus_trend() {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    const int episodes = 300;
    const int window = 50;

    struct Variant {
        Algorithm algo;
        RplusKind rplus;
        std::vector<double> ma;
    };
    std::vector<Variant> variants = {{Algorithm::Dql, RplusKind::Binary, {}},
                                     {Algorithm::Dql, RplusKind::Exponential, {}},
                                     {Algorithm::DuelingDql, RplusKind::Binary, {}},
                                     {Algorithm::DuelingDql, RplusKind::Exponential, {}}};

    const fs::path dir = fs::temp_directory_path() / "uavrl_acceptance" / "trend3";
    for (auto& variant : variants) {
        ExperimentSpec spec = make_preset("three_clusters");
        spec.world.beta = 2.0;
        spec.world.zeta = 1.0;
        spec.world.rplus_kind = variant.rplus;
        spec.world.step_reward_kind = StepRewardKind::Episode;
        spec.algorithm = variant.algo;
        spec.agent.episodes = episodes;
        spec.seeds = {1, 2, 3, 4, 5};
        spec.output_dir = dir / (std::string(algorithm_name(variant.algo)) + "_" +
                                 (variant.rplus == RplusKind::Binary ? "binary" : "exp"));
        const RunSummary summary = run(spec);
        for (const auto& rec : summary.runs)
            c.expect(rec.ok, "run failed: " + rec.error);
        if (!c.ok) return c;
        const auto rewards = averaged_rewards(summary);
        variant.ma = moving_average(rewards, window);

        double head = 0.0, tail = 0.0;
        for (int i = 0; i < window; ++i) head += rewards[static_cast<std::size_t>(i)];
        for (int i = episodes - window; i < episodes; ++i)
            tail += rewards[static_cast<std::size_t>(i)];
        head /= window;
        tail /= window;
        c.expect(tail > 2.0 * head,
                 std::string(algorithm_name(variant.algo)) + "/" +
                     (variant.rplus == RplusKind::Binary ? "binary" : "exp") +
                     " last-50 " + std::to_string(tail) + " vs first-50 " +
                     std::to_string(head));
    }

    for (const auto algo : {Algorithm::Dql, Algorithm::DuelingDql}) {
        int binary_t = 0, exp_t = 0;
        for (const auto& variant : variants) {
            if (variant.algo != algo) continue;
            const int t90 = episodes_to_90(variant.ma);
            if (variant.rplus == RplusKind::Binary) binary_t = t90;
            else exp_t = t90;
        }
        c.expect(exp_t < binary_t, std::string(algorithm_name(algo)) +
                                       ": exponential 90% at episode " + std::to_string(exp_t) +
                                       ", binary at " + std::to_string(binary_t));
    }

    const double elapsed = seconds_since(t0);
    c.expect(elapsed < 900.0, "runtime " + std::to_string(elapsed) + "s exceeds 15min");
    return c;
}

Check criterion_shaping_trend() {
    Check c;
    const int episodes = 250;
    const int window = 50;

    const fs::path dir = fs::temp_directory_path() / "uavrl_acceptance" / "trend5";
    for (const auto algo : {Algorithm::Dql, Algorithm::DuelingDql}) {
        double final_by_kind[2] = {0.0, 0.0};
        for (const auto kind : {StepRewardKind::Immediate, StepRewardKind::Episode}) {
            ExperimentSpec spec = make_preset("five_clusters");
            spec.world.beta = 1.0;
            spec.world.zeta = 1.0;
            spec.world.rplus_kind = RplusKind::Exponential;
            spec.world.step_reward_kind = kind;
            spec.algorithm = algo;
            spec.agent.episodes = episodes;
            spec.seeds = {1, 2, 3, 4, 5};
            spec.output_dir =
                dir / (std::string(algorithm_name(algo)) + "_" +
                       (kind == StepRewardKind::Immediate ? "immediate" : "episode"));
            const RunSummary summary = run(spec);
            for (const auto& rec : summary.runs) c.expect(rec.ok, "run failed: " + rec.error);
            if (!c.ok) return c;

            const auto rewards = averaged_rewards(summary);
            double tail = 0.0;
            for (int i = episodes - window; i < episodes; ++i)
                tail += rewards[static_cast<std::size_t>(i)];
            final_by_kind[kind == StepRewardKind::Episode ? 1 : 0] = tail / window;
        }
        c.expect(final_by_kind[1] >= final_by_kind[0],
                 std::string(algorithm_name(algo)) + ": episode " +
                     std::to_string(final_by_kind[1]) + " vs immediate " +
                     std::to_string(final_by_kind[0]));
    }
    return c;
}

Check criterion_constraint_compliance() {
    Check c;

    WorldConfig world = make_preset("three_clusters").world;
    world.t_cons = 150;
    Rng policy_rng(9001);

    for (int episode = 0; episode < 200; ++episode) {
        Rng env_rng(derive_seed(31337, static_cast<std::uint64_t>(episode)));
        EnvState s = reset(world, env_rng);
        std::vector<double> bits(s.users.size(), 0.0);
        std::vector<bool> retired(s.users.size(), false);

        while (!s.done) {
            step(s, static_cast<Action>(policy_rng.uniform_int(kNumActions)), world, env_rng);
            c.expect(s.step <= world.t_cons, "episode exceeded t_cons");
            for (std::size_t i = 0; i < s.users.size(); ++i) {
                const auto& u = s.users[i];
                if (retired[i])
                    c.expect(u.collected_bits == bits[i], "collected user re-served");
                if (u.collected_bits > bits[i]) {
                    // data accrued this step: the user must have been in range
                    c.expect(distance(s.uav, u.pos) <= world.d_cons + 1e-9,
                             "rate accrued beyond d_cons");
                }
                bits[i] = u.collected_bits;
                if (u.collected) retired[i] = true;
            }
        }
        c.expect(s.outcome != Outcome::Running, "episode finished without an outcome");
    }
    return c;
}

Check criterion_determinism() {
    Check c;

    ExperimentSpec spec = make_preset("three_clusters");
    spec.algorithm = Algorithm::Dql;
    spec.agent.episodes = 3;
    spec.world.t_cons = 80;
    spec.seeds = {2024};

    const fs::path base = fs::temp_directory_path() / "uavrl_acceptance";
    spec.output_dir = base / "det_a";
    fs::remove_all(spec.output_dir);
    const RunSummary a = run(spec);
    spec.output_dir = base / "det_b";
    fs::remove_all(spec.output_dir);
    const RunSummary b = run(spec);

    c.expect(a.runs[0].ok && b.runs[0].ok, "runs failed");
    if (c.ok) {
        c.expect(slurp(a.runs[0].metrics_path) == slurp(b.runs[0].metrics_path),
                 "metrics CSVs differ");
        c.expect(slurp(a.runs[0].trajectory_path) == slurp(b.runs[0].trajectory_path),
                 "trajectory CSVs differ");
        c.expect(slurp(a.average_path) == slurp(b.average_path), "averaged CSVs differ");
        c.expect(slurp(a.runs[0].model_path) == slurp(b.runs[0].model_path),
                 "model files differ");
    }
    return c;
}

}  // namespace

int main() {
    struct Entry {
        const char* name;
        std::function<Check()> fn;
    };
    const std::vector<Entry> criteria = {
        {"channel math worked values", criterion_channel_math},
        {"gradient correctness (100 randomized checks)", criterion_gradient_correctness},
        {"dueling identifiability and shift invariance", criterion_dueling_identifiability},
        {"oracle equivalence on the 10x10 instance", criterion_oracle_equivalence},
        {"exponential-vs-binary trend on three clusters", criterion_rplus_trend},
        {"episode-vs-immediate trend on five clusters", criterion_shaping_trend},
        {"constraint compliance under random play", criterion_constraint_compliance},
        {"byte-identical reruns", criterion_determinism},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Check result;
        try {
            result = criteria[i].fn();
        } catch (const std::exception& e) {
            result.ok = false;
            result.note = std::string("exception: ") + e.what();
        }
        const double elapsed = seconds_since(t0);
        std::printf("[%s] %zu. %s (%.1fs)%s%s\n", result.ok ? "PASS" : "FAIL", i + 1,
                    criteria[i].name, elapsed, result.note.empty() ? "" : " -- ",
                    result.note.c_str());
        std::fflush(stdout);
        if (!result.ok) ++failures;
    }
    return failures;
}
