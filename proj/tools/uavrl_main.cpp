#include <cstdio>
#include <cstdlib>
#include <string>

#include <CLI11.hpp>

#include "uavrl/uavrl.hpp"

namespace {

enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };

LogLevel log_level() {
    const char* env = std::getenv("UAVRL_LOG");
    if (!env) return LogLevel::Info;
    const std::string v = env;
    if (v == "quiet") return LogLevel::Quiet;
    if (v == "debug") return LogLevel::Debug;
    return LogLevel::Info;
}

struct Overrides {
    std::string scenario;
    std::string config_path;
    std::string algorithm;
    std::string rplus;
    std::string reward;
    std::string out_dir;
    int episodes = -1;
    long long seed = -1;
    double beta = -1.0;
    double zeta = -1.0;

    void add_common(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "experiment config file");
        cmd->add_option("--scenario", scenario,
                        "built-in scenario: three_clusters|five_clusters");
        cmd->add_option("--out", out_dir, "output directory");
    }

    uavrl::ExperimentSpec build() const {
        uavrl::ExperimentSpec spec;
        if (!config_path.empty()) {
            spec = uavrl::load_spec(config_path);
        } else if (!scenario.empty()) {
            spec = uavrl::make_preset(scenario);
        } else {
            throw std::invalid_argument("one of --config or --scenario is required");
        }
        if (!algorithm.empty()) spec.algorithm = uavrl::parse_algorithm(algorithm);
        if (episodes >= 0) spec.agent.episodes = episodes;
        if (seed >= 0) spec.seeds = {static_cast<std::uint64_t>(seed)};
        if (beta >= 0.0) spec.world.beta = beta;
        if (zeta >= 0.0) spec.world.zeta = zeta;
        if (!rplus.empty()) spec.world.rplus_kind = uavrl::parse_rplus(rplus);
        if (!reward.empty()) spec.world.step_reward_kind = uavrl::parse_step_reward(reward);
        if (!out_dir.empty()) spec.output_dir = out_dir;
        return spec;
    }
};

void print_summary(const uavrl::RunSummary& summary, LogLevel level) {
    if (level == LogLevel::Quiet) return;
    for (const auto& rec : summary.runs) {
        if (!rec.ok) {
            std::fprintf(stderr, "run seed=%llu FAILED: %s\n",
                         static_cast<unsigned long long>(rec.seed), rec.error.c_str());
            continue;
        }
        const auto& last = rec.episodes.back();
        std::fprintf(stderr,
                     "run seed=%llu: %zu episodes, final reward %.4f, %d users, %s\n",
                     static_cast<unsigned long long>(rec.seed), rec.episodes.size(),
                     last.mission_reward, last.users_collected,
                     uavrl::outcome_name(last.outcome));
    }
    std::printf("wrote %s\n", summary.dir.string().c_str());
}

uavrl::TrainCallbacks progress_callbacks(LogLevel level) {
    uavrl::TrainCallbacks callbacks;
    if (level == LogLevel::Debug) {
        callbacks.on_episode = [](const uavrl::EpisodeMetrics& m) {
            if (m.episode % 50 == 0)
                std::fprintf(stderr, "  episode %d: reward %.4f, %d users, %d steps\n",
                             m.episode, m.mission_reward, m.users_collected, m.steps);
        };
    }
    return callbacks;
}

int run_gradient_check(int trials) {
    uavrl::Rng rng(20240915);
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        uavrl::NetConfig cfg;
        cfg.input_dim = 1 + rng.uniform_int(4);
        cfg.hidden = {4 + rng.uniform_int(12), 4 + rng.uniform_int(12)};
        cfg.outputs = uavrl::kNumActions;
        cfg.head = (t % 2 == 0) ? uavrl::HeadKind::Plain : uavrl::HeadKind::Dueling;
        cfg.combine = uavrl::CombineMode::Mean;
        cfg.stream_hidden = 8;
        uavrl::QNetwork net = uavrl::make_network(cfg, rng.next_u64());
        std::vector<double> input(static_cast<std::size_t>(cfg.input_dim));
        for (auto& v : input) v = rng.uniform();
        const int action = rng.uniform_int(cfg.outputs);
        const double target = rng.uniform(-2.0, 2.0);
        worst = std::max(worst,
                         uavrl::gradient_check(net, input, action, target, rng));
    }
    std::printf("gradient check: %d trials, max relative error %.3e\n", trials, worst);
    return worst < 1e-4 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"UAV data-collection trajectory trainer"};
    app.require_subcommand(1);
    const LogLevel level = log_level();

    Overrides run_opts;
    auto* run_cmd = app.add_subcommand("run", "train one experiment and write CSV metrics");
    run_opts.add_common(run_cmd);
    run_cmd->add_option("--algorithm", run_opts.algorithm, "tabular|dql|dueling");
    run_cmd->add_option("--episodes", run_opts.episodes, "episodes per run");
    run_cmd->add_option("--seed", run_opts.seed, "single seed (replaces the config's list)");
    run_cmd->add_option("--beta", run_opts.beta, "throughput weight");
    run_cmd->add_option("--zeta", run_opts.zeta, "trajectory weight");
    run_cmd->add_option("--rplus", run_opts.rplus, "binary|exp");
    run_cmd->add_option("--reward", run_opts.reward, "immediate|episode");

    Overrides sweep_opts;
    std::string sweep_param;
    std::string sweep_values;
    auto* sweep_cmd = app.add_subcommand("sweep", "run one experiment per parameter value");
    sweep_opts.add_common(sweep_cmd);
    sweep_cmd->add_option("--param", sweep_param, "parameter to sweep")->required();
    sweep_cmd->add_option("--values", sweep_values, "comma-separated values")->required();
    sweep_cmd->add_option("--algorithm", sweep_opts.algorithm, "tabular|dql|dueling");
    sweep_cmd->add_option("--episodes", sweep_opts.episodes, "episodes per run");
    sweep_cmd->add_option("--seed", sweep_opts.seed,
                          "single seed (replaces the config's list)");

    int grad_trials = 100;
    auto* grad_cmd = app.add_subcommand("check-gradients",
                                        "verify backpropagation against finite differences");
    grad_cmd->add_option("--trials", grad_trials, "number of randomized checks");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) {
            const auto spec = run_opts.build();
            print_summary(uavrl::run(spec, progress_callbacks(level)), level);
        } else if (sweep_cmd->parsed()) {
            const auto base = sweep_opts.build();
            std::vector<std::string> values;
            for (auto& v : uavrl::detail::split(sweep_values, ','))
                if (!v.empty()) values.push_back(v);
            const auto summaries =
                uavrl::sweep(base, sweep_param, values, progress_callbacks(level));
            for (const auto& s : summaries) print_summary(s, level);
            std::printf("wrote %s\n", (base.output_dir / "manifest.csv").string().c_str());
        } else if (grad_cmd->parsed()) {
            return run_gradient_check(grad_trials);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
