#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "softcompose/experiments.hpp"
#include "softcompose/serialize.hpp"

namespace {

softcompose::ExperimentConfig load_config(const std::string& path,
                                          const std::uint64_t* seed_override) {
    auto config = softcompose::ExperimentConfig::from_json(
        nlohmann::json::parse(softcompose::read_text_file(path)));
    if (seed_override) config.seed = *seed_override;
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"softcompose: exact tabular solver and Q-function composition "
                 "for total-reward entropy-regularised MDPs"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool learn = false;
    bool baseline = false;
    double tau = 1.0;

    auto add_common = [&](CLI::App* cmd, bool needs_config) {
        if (needs_config)
            cmd->add_option("--config", config_path, "experiment config (JSON)")->required();
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--seed", seed, "override the config's rng seed")
            ->each([&seed_set](const std::string&) { seed_set = true; });
    };

    CLI::App* solve = app.add_subcommand("solve", "solve each base task exactly");
    add_common(solve, true);
    solve->add_flag("--learn", learn, "use tabular soft Q-learning instead of exact DP");

    CLI::App* compose = app.add_subcommand("compose", "compose solved Q tables");
    add_common(compose, true);

    CLI::App* eval = app.add_subcommand("eval", "run seeded evaluation episodes");
    add_common(eval, true);

    CLI::App* sweep = app.add_subcommand("sweep", "two-task weight sweep");
    add_common(sweep, true);

    CLI::App* temporal = app.add_subcommand("temporal", "greedy recompose-and-collect runs");
    add_common(temporal, true);
    temporal->add_flag("--baseline", baseline,
                       "also solve collect-all exactly on the product space");

    CLI::App* counter = app.add_subcommand(
        "counterexample", "two-state demonstration that soft-optimal policies are stochastic");
    counter->add_option("--tau", tau, "temperature (> 0)");
    counter->add_option("--out", out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        const std::uint64_t* seed_ptr = seed_set ? &seed : nullptr;
        if (solve->parsed())
            softcompose::cmd_solve(load_config(config_path, seed_ptr), out_dir, learn);
        else if (compose->parsed())
            softcompose::cmd_compose(load_config(config_path, seed_ptr), out_dir);
        else if (eval->parsed())
            softcompose::cmd_eval(load_config(config_path, seed_ptr), out_dir);
        else if (sweep->parsed())
            softcompose::cmd_sweep(load_config(config_path, seed_ptr), out_dir);
        else if (temporal->parsed())
            softcompose::cmd_temporal(load_config(config_path, seed_ptr), out_dir, baseline);
        else if (counter->parsed())
            softcompose::cmd_counterexample(tau, out_dir);
    } catch (const softcompose::DivergenceError& e) {
        std::fprintf(stderr, "solver divergence: %s\n", e.what());
        return 3;
    } catch (const softcompose::ValidationError& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
