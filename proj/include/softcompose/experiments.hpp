#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "softcompose/gridworld.hpp"
#include "softcompose/mdp.hpp"
#include "softcompose/solver.hpp"

namespace softcompose {

struct ExperimentConfig {
    grid::GridSpec grid{10, 10, {}, 0};
    std::vector<grid::Item> items;  // empty -> full six-item layout from grid.rng_seed
    std::vector<std::string> tasks;
    double temperature = 1.0;
    std::vector<double> weights;  // empty -> uniform where needed
    int episodes = 1000;
    int max_steps = 0;  // 0 -> width * height
    double tolerance = 1e-10;
    std::uint64_t seed = 0;
    double wrong_goal_reward = -1e3;
    std::string mode = "or";  // or | max | and
    std::string eval_task;    // e.g. "PurpleOrBlue"; default joins `tasks` with Or
    std::string eval_q = "composed_q.csv";
    double sweep_step = 0.05;
    int sweep_runs = 80;
    int sweep_episodes = 100;

    static ExperimentConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

/// Quantile summary using linear interpolation between order statistics
/// (the same rule as numpy's default).
struct SummaryStats {
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double min = 0.0;
    double max = 0.0;
};

SummaryStats summarize(std::vector<double> values);

struct ReturnsReport {
    std::vector<double> returns;       // per episode, in episode order
    std::vector<int> final_states;     // per episode
    SummaryStats summary;
    int episodes = 0;
};

/// Seeded greedy (tau = 0) or Boltzmann (tau > 0) evaluation of a Q
/// table against `env`, with uniformly sampled non-terminal starts and
/// per-episode derived seeds.
ReturnsReport evaluate_policy(const TabularMdp& env, const QTable& q, Temperature tau,
                              int episodes, int max_steps, std::uint64_t seed);

/// Six items, one per (shape, color) pair, on distinct free cells drawn
/// from the grid's rng_seed.
std::vector<grid::Item> sample_full_layout(const grid::GridGeometry& geom,
                                           std::uint64_t seed);

/// Union environment: absorbing set is every cell matched by any of the
/// named tasks, all rewarding +1.
TabularMdp build_union_mdp(const grid::GridGeometry& geom,
                           const std::vector<grid::Item>& items,
                           const std::vector<grid::GridTask>& tasks);

/// Splits "PurpleOrBlue" into GridTasks {Purple, Blue}.
std::vector<grid::GridTask> parse_task_union(const std::string& name);

// CLI commands. Each writes CSV/PGM/PPM artifacts plus report.json into
// out_dir and is byte-deterministic given config + seed.
void cmd_solve(const ExperimentConfig& config, const std::string& out_dir, bool learn);
void cmd_compose(const ExperimentConfig& config, const std::string& out_dir);
void cmd_eval(const ExperimentConfig& config, const std::string& out_dir);
void cmd_sweep(const ExperimentConfig& config, const std::string& out_dir);
void cmd_temporal(const ExperimentConfig& config, const std::string& out_dir, bool baseline);

struct CounterexampleReport {
    double tau = 0.0;
    double epsilon = 0.0;
    double v_deterministic = 0.0;  // V_pi(s) for always-Right
    double v_stochastic = 0.0;     // V_{pi_eps}(s)
    double v_optimal = 0.0;        // soft-optimal V*(s)
    bool stochastic_beats_deterministic = false;
};

/// Two-state demonstration that any positive temperature makes the
/// optimal policy stochastic; epsilon is half the smaller of the two
/// sufficient bounds tau (log 2 - 1/2) / (2 + tau) and exp(-1/tau) / 2
/// (the first is not sufficient on its own at small tau).
CounterexampleReport run_counterexample(double tau);

void cmd_counterexample(double tau, const std::string& out_dir);

}  // namespace softcompose
