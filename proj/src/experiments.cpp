#include "softcompose/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "softcompose/compose.hpp"
#include "softcompose/rng.hpp"
#include "softcompose/serialize.hpp"

namespace softcompose {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

double quantile(const std::vector<double>& sorted, double p) {
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    const double h = p * static_cast<double>(n - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::string join_or(const std::vector<std::string>& names) {
    std::string out;
    for (const std::string& n : names) {
        if (!out.empty()) out += "Or";
        out += n;
    }
    return out;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ValidationError("cannot create output directory '" + dir + "'");
}

std::string out_path(const std::string& dir, const std::string& file) {
    return (fs::path(dir) / file).string();
}

std::vector<grid::GridTask> parse_tasks(const std::vector<std::string>& names) {
    std::vector<grid::GridTask> tasks;
    for (const std::string& n : names) tasks.push_back(grid::GridTask::parse(n));
    return tasks;
}

struct Scenario {
    grid::GridGeometry geom;
    std::vector<grid::Item> items;
};

Scenario build_scenario(const ExperimentConfig& config) {
    Scenario sc;
    sc.geom = grid::GridGeometry::build(config.grid);
    sc.items = config.items.empty() ? sample_full_layout(sc.geom, config.grid.rng_seed)
                                    : config.items;
    return sc;
}

TaskLibrary build_library(const ExperimentConfig& config, const Scenario& sc) {
    const double lib_tau = config.temperature > 0.0 ? config.temperature : 1.0;
    return grid::build_task_library(sc.geom, sc.items, parse_tasks(config.tasks), lib_tau,
                                    config.wrong_goal_reward);
}

json base_report(const ExperimentConfig& config, const char* command) {
    json report;
    report["command"] = command;
    report["config"] = config.to_json();
    report["rng_algorithm"] = kRngAlgorithm;
    return report;
}

json summary_to_json(const SummaryStats& s) {
    return json{{"median", s.median}, {"q1", s.q1}, {"q3", s.q3},
                {"min", s.min},       {"max", s.max}};
}

json qtable_to_json_rows(const QTable& q) {
    json rows = json::array();
    for (int s = 0; s < q.n_states; ++s) {
        json row = json::array();
        for (int a = 0; a < q.n_actions; ++a) row.push_back(q.at(s, a));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    ExperimentConfig c;
    if (j.contains("grid")) c.grid = grid_spec_from_json(j.at("grid"));
    if (j.contains("items")) c.items = items_from_json(j.at("items"));
    if (j.contains("tasks")) c.tasks = j.at("tasks").get<std::vector<std::string>>();
    if (j.contains("temperature")) c.temperature = j.at("temperature").get<double>();
    if (j.contains("weights")) c.weights = j.at("weights").get<std::vector<double>>();
    if (j.contains("episodes")) c.episodes = j.at("episodes").get<int>();
    if (j.contains("max_steps")) c.max_steps = j.at("max_steps").get<int>();
    if (j.contains("tolerance")) c.tolerance = j.at("tolerance").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("wrong_goal_reward"))
        c.wrong_goal_reward = j.at("wrong_goal_reward").get<double>();
    if (j.contains("mode")) c.mode = j.at("mode").get<std::string>();
    if (j.contains("eval_task")) c.eval_task = j.at("eval_task").get<std::string>();
    if (j.contains("eval_q")) c.eval_q = j.at("eval_q").get<std::string>();
    if (j.contains("sweep_step")) c.sweep_step = j.at("sweep_step").get<double>();
    if (j.contains("sweep_runs")) c.sweep_runs = j.at("sweep_runs").get<int>();
    if (j.contains("sweep_episodes")) c.sweep_episodes = j.at("sweep_episodes").get<int>();
    if (c.episodes < 1) throw ValidationError("episode count must be >= 1");
    if (!(c.tolerance > 0.0)) throw ValidationError("tolerance must be positive");
    return c;
}

json ExperimentConfig::to_json() const {
    json j;
    j["grid"] = grid_spec_to_json(grid);
    j["items"] = items_to_json(items);
    j["tasks"] = tasks;
    j["temperature"] = temperature;
    j["weights"] = weights;
    j["episodes"] = episodes;
    j["max_steps"] = max_steps;
    j["tolerance"] = tolerance;
    j["seed"] = seed;
    j["wrong_goal_reward"] = wrong_goal_reward;
    j["mode"] = mode;
    j["eval_task"] = eval_task;
    j["eval_q"] = eval_q;
    j["sweep_step"] = sweep_step;
    j["sweep_runs"] = sweep_runs;
    j["sweep_episodes"] = sweep_episodes;
    return j;
}

SummaryStats summarize(std::vector<double> values) {
    if (values.empty()) throw ValidationError("summarize: empty sample");
    std::sort(values.begin(), values.end());
    SummaryStats s;
    s.min = values.front();
    s.max = values.back();
    s.q1 = quantile(values, 0.25);
    s.median = quantile(values, 0.5);
    s.q3 = quantile(values, 0.75);
    return s;
}

ReturnsReport evaluate_policy(const TabularMdp& env, const QTable& q, Temperature tau,
                              int episodes, int max_steps, std::uint64_t seed) {
    if (episodes < 1) throw ValidationError("evaluate_policy: episodes must be >= 1");
    if (q.n_states != env.n_states || q.n_actions != env.n_actions)
        throw ValidationError("evaluate_policy: Q shape does not match environment");

    StochasticPolicy policy;
    if (tau.positive())
        policy = boltzmann_policy(q, StochasticPolicy::uniform(q.n_states, q.n_actions), tau);
    else
        policy = greedy_policy(q);

    std::vector<int> starts;
    for (int s = 0; s < env.n_states; ++s)
        if (!env.is_terminal(s)) starts.push_back(s);
    if (starts.empty()) throw ValidationError("evaluate_policy: no non-terminal start states");

    ReturnsReport report;
    report.episodes = episodes;
    for (int ep = 0; ep < episodes; ++ep) {
        const std::uint64_t ep_seed = SplitMix64::derive(seed, static_cast<std::uint64_t>(ep));
        SplitMix64 rng(ep_seed);
        const int start = starts[rng.next_int(static_cast<int>(starts.size()))];
        const grid::Trajectory traj = grid::rollout(env, policy, start, max_steps, rng.next());
        report.returns.push_back(traj.total_return);
        report.final_states.push_back(traj.final_state);
    }
    report.summary = summarize(report.returns);
    return report;
}

std::vector<grid::Item> sample_full_layout(const grid::GridGeometry& geom,
                                           std::uint64_t seed) {
    if (geom.n_cells < 6)
        throw ValidationError("grid too small for the six-item layout");
    SplitMix64 rng(SplitMix64::derive(seed, 0x1a7e57));
    std::vector<int> cells(geom.cell_of_state);
    // Partial Fisher-Yates: the first six entries become the item cells.
    for (int i = 0; i < 6; ++i) {
        const int j = i + rng.next_int(static_cast<int>(cells.size()) - i);
        std::swap(cells[i], cells[j]);
    }
    const grid::Shape shapes[] = {grid::Shape::square, grid::Shape::circle};
    const grid::Color colors[] = {grid::Color::blue, grid::Color::beige,
                                  grid::Color::purple};
    std::vector<grid::Item> items;
    int i = 0;
    for (grid::Shape sh : shapes)
        for (grid::Color co : colors) {
            const int c = cells[i++];
            items.push_back({sh, co, c % geom.width, c / geom.width});
        }
    return items;
}

TabularMdp build_union_mdp(const grid::GridGeometry& geom,
                           const std::vector<grid::Item>& items,
                           const std::vector<grid::GridTask>& tasks) {
    if (tasks.empty()) throw ValidationError("build_union_mdp: no tasks");
    std::vector<grid::Item> matched;
    for (const grid::Item& it : items)
        for (const grid::GridTask& t : tasks)
            if (t.matches(it)) {
                matched.push_back(it);
                break;
            }
    if (matched.empty()) throw ValidationError("union task matches no placed item");
    TabularMdp mdp = grid::build_single_goal_mdp(geom, geom.cell(matched[0].x, matched[0].y));
    for (std::size_t k = 1; k < matched.size(); ++k) {
        const int s = geom.state_of_cell[geom.cell(matched[k].x, matched[k].y)];
        mdp.absorbing[s] = 1;
        for (int a = 0; a < mdp.n_actions; ++a) {
            mdp.row(s, a) = {{mdp.virtual_goal, 1.0}};
            mdp.reward(s, a) = grid::kGoalReward;
        }
    }
    return mdp;
}

std::vector<grid::GridTask> parse_task_union(const std::string& name) {
    if (name.empty()) throw ValidationError("empty task name");
    std::vector<grid::GridTask> tasks;
    std::size_t pos = 0;
    while (pos <= name.size()) {
        const std::size_t next = name.find("Or", pos);
        const std::string part =
            next == std::string::npos ? name.substr(pos) : name.substr(pos, next - pos);
        if (!part.empty()) tasks.push_back(grid::GridTask::parse(part));
        if (next == std::string::npos) break;
        pos = next + 2;
    }
    if (tasks.empty()) throw ValidationError("task union '" + name + "' parsed to nothing");
    return tasks;
}

void cmd_solve(const ExperimentConfig& config, const std::string& out_dir, bool learn) {
    if (config.tasks.empty()) throw ValidationError("solve: config names no tasks");
    ensure_dir(out_dir);
    const Scenario sc = build_scenario(config);
    const TaskLibrary lib = build_library(config, sc);

    SolveOptions opts;
    opts.tol = config.tolerance;
    json report = base_report(config, "solve");
    report["tasks"] = json::array();

    for (std::size_t k = 0; k < config.tasks.size(); ++k) {
        const std::string& name = config.tasks[k];
        const TabularMdp env = build_composite_reward_mdp(lib, lib.task_rewards[k]);
        SolveResult solved;
        try {
            if (learn) {
                QLearningOptions ql;
                ql.episodes = config.episodes;
                solved.q = soft_q_learning(env, lib.reference, Temperature(config.temperature),
                                           ql, config.seed + k);
                if (config.temperature > 0.0) {
                    solved.value = value_from_q_soft(solved.q, lib.reference,
                                                     Temperature(config.temperature));
                    solved.policy = boltzmann_policy(solved.q, lib.reference,
                                                     Temperature(config.temperature));
                } else {
                    solved.value = value_from_q_max(solved.q);
                    solved.policy = greedy_policy(solved.q);
                }
                solved.iterations = config.episodes;
            } else if (config.temperature > 0.0) {
                solved = soft_value_iteration(env, lib.reference,
                                              Temperature(config.temperature), opts);
            } else {
                solved = standard_value_iteration(env, opts);
            }
        } catch (const DivergenceError& e) {
            throw DivergenceError("task '" + name + "': " + e.what(), e.last_iterate,
                                  e.iterations);
        }
        write_text_file(out_path(out_dir, name + "_q.csv"), qtable_to_csv(solved.q));
        write_text_file(out_path(out_dir, name + "_v.csv"),
                        value_table_to_csv(solved.value));
        write_text_file(out_path(out_dir, name + "_policy.csv"),
                        policy_to_csv(solved.policy));
        grid::render_value_heatmap(solved.value, sc.geom, out_path(out_dir, name + "_v.pgm"));
        report["tasks"].push_back(json{{"name", name},
                                       {"iterations", solved.iterations},
                                       {"residual", solved.residual},
                                       {"learned", learn}});
    }
    write_text_file(out_path(out_dir, "report.json"), report.dump(2) + "\n");
}

void cmd_compose(const ExperimentConfig& config, const std::string& out_dir) {
    if (config.tasks.empty()) throw ValidationError("compose: config names no tasks");
    ensure_dir(out_dir);
    const Scenario sc = build_scenario(config);
    const TaskLibrary lib = build_library(config, sc);
    const Temperature tau(config.temperature > 0.0 ? config.temperature : 1.0);

    std::vector<QTable> q_list;
    for (const std::string& name : config.tasks)
        q_list.push_back(qtable_from_csv(read_text_file(out_path(out_dir, name + "_q.csv"))));
    for (const QTable& q : q_list)
        if (q.n_states != lib.base.n_states || q.n_actions != lib.base.n_actions)
            throw ValidationError("compose: solved table shape does not match layout");

    json report = base_report(config, "compose");
    QTable composed;
    ValueTable composed_v;

    if (config.mode == "or") {
        const WeightVector w(config.weights.empty()
                                 ? std::vector<double>(q_list.size(), 1.0 / q_list.size())
                                 : config.weights);
        composed = compose_or(q_list, w, tau);
        const std::vector<double> reward =
            compose_or_reward(lib.task_rewards, w, tau, lib.base);
        QTable reward_table(lib.base.n_states, lib.base.n_actions);
        reward_table.values = reward;
        write_text_file(out_path(out_dir, "composite_reward.csv"),
                        qtable_to_csv(reward_table));
        composed_v = value_from_q_soft(composed, lib.reference, tau);
    } else if (config.mode == "max") {
        composed = compose_max(q_list);
        composed_v = value_from_q_max(composed);
    } else if (config.mode == "and") {
        if (q_list.size() != 2)
            throw ValidationError("compose: mode 'and' needs exactly two tasks");
        composed = compose_and_average(q_list);
        const StochasticPolicy pi1 = boltzmann_policy(q_list[0], lib.reference, tau);
        const StochasticPolicy pi2 = boltzmann_policy(q_list[1], lib.reference, tau);
        const StochasticPolicy pi_ave = boltzmann_policy(composed, lib.reference, tau);
        SolveOptions opts;
        opts.tol = config.tolerance;
        const AndBounds bounds =
            compute_and_bounds(lib.base, pi1, pi2, pi_ave, tau, opts);
        json jb;
        jb["schema"] = "softcompose-and-bounds-v1";
        jb["c_star"] = qtable_to_json_rows(bounds.c_star);
        jb["f_star"] = qtable_to_json_rows(bounds.f_star);
        json div = json::array();
        for (double d : bounds.divergence)
            div.push_back(std::isinf(d) ? json("inf") : json(d));
        jb["divergence"] = std::move(div);
        jb["unbounded"] = bounds.unbounded;
        write_text_file(out_path(out_dir, "and_bounds.json"), jb.dump(2) + "\n");
        composed_v = value_from_q_soft(composed, lib.reference, tau);
    } else {
        throw ValidationError("compose: unknown mode '" + config.mode + "'");
    }

    write_text_file(out_path(out_dir, "composed_q.csv"), qtable_to_csv(composed));
    grid::render_value_heatmap(composed_v, sc.geom, out_path(out_dir, "composed_v.pgm"));
    report["mode"] = config.mode;
    write_text_file(out_path(out_dir, "report.json"), report.dump(2) + "\n");
}

void cmd_eval(const ExperimentConfig& config, const std::string& out_dir) {
    ensure_dir(out_dir);
    const Scenario sc = build_scenario(config);
    const std::string union_name =
        config.eval_task.empty() ? join_or(config.tasks) : config.eval_task;
    const TabularMdp env =
        build_union_mdp(sc.geom, sc.items, parse_task_union(union_name));

    const QTable q = qtable_from_csv(read_text_file(out_path(out_dir, config.eval_q)));
    const int max_steps =
        config.max_steps > 0 ? config.max_steps : sc.geom.width * sc.geom.height;
    const ReturnsReport rr = evaluate_policy(env, q, Temperature(config.temperature),
                                             config.episodes, max_steps, config.seed);

    std::string csv = "episode,return,final_state\n";
    for (int ep = 0; ep < rr.episodes; ++ep)
        csv += std::to_string(ep) + "," + format_double(rr.returns[ep]) + "," +
               std::to_string(rr.final_states[ep]) + "\n";
    write_text_file(out_path(out_dir, "returns.csv"), csv);

    json report = base_report(config, "eval");
    report["eval_task"] = union_name;
    report["episodes"] = rr.episodes;
    report["summary"] = summary_to_json(rr.summary);
    write_text_file(out_path(out_dir, "report.json"), report.dump(2) + "\n");
}

void cmd_sweep(const ExperimentConfig& config, const std::string& out_dir) {
    if (config.tasks.size() != 2)
        throw ValidationError("sweep: exactly two library tasks required");
    const double step = config.sweep_step;
    const double n_steps_d = 1.0 / step;
    const int n_steps = static_cast<int>(std::lround(n_steps_d));
    if (std::abs(n_steps_d - n_steps) > 1e-9)
        throw ValidationError("sweep: step must divide 1");
    ensure_dir(out_dir);

    const Scenario sc = build_scenario(config);
    const TaskLibrary lib = build_library(config, sc);
    const Temperature tau(config.temperature > 0.0 ? config.temperature : 1.0);
    SolveOptions opts;
    opts.tol = config.tolerance;

    std::vector<QTable> q_list;
    for (std::size_t k = 0; k < 2; ++k) {
        const TabularMdp env = build_composite_reward_mdp(lib, lib.task_rewards[k]);
        q_list.push_back(soft_value_iteration(env, lib.reference, tau, opts).q);
    }

    const std::vector<grid::GridTask> tasks = parse_tasks(config.tasks);
    const TabularMdp env = build_union_mdp(sc.geom, sc.items, tasks);
    std::vector<char> is_task1(env.n_states, 0), is_task2(env.n_states, 0);
    for (const grid::Item& it : sc.items) {
        const int s = sc.geom.state_of_cell[sc.geom.cell(it.x, it.y)];
        if (tasks[0].matches(it)) is_task1[s] = 1;
        if (tasks[1].matches(it)) is_task2[s] = 1;
    }

    const int max_steps =
        config.max_steps > 0 ? config.max_steps : sc.geom.width * sc.geom.height;
    std::string csv = "weight,fraction_task1,fraction_task2\n";
    json fractions = json::array();
    for (int i = 0; i <= n_steps; ++i) {
        const double w1 = static_cast<double>(i) / n_steps;
        const WeightVector w({w1, 1.0 - w1});
        const QTable composed = compose_or(q_list, w, tau);
        const StochasticPolicy policy = boltzmann_policy(
            composed, StochasticPolicy::uniform(composed.n_states, composed.n_actions), tau);

        std::vector<int> starts;
        for (int s = 0; s < env.n_states; ++s)
            if (!env.is_terminal(s)) starts.push_back(s);

        long hits1 = 0, hits2 = 0, total = 0;
        for (int run = 0; run < config.sweep_runs; ++run) {
            const std::uint64_t run_seed = SplitMix64::derive(
                config.seed, static_cast<std::uint64_t>(i) * 10000 + run);
            for (int ep = 0; ep < config.sweep_episodes; ++ep) {
                SplitMix64 rng(SplitMix64::derive(run_seed, static_cast<std::uint64_t>(ep)));
                const int start = starts[rng.next_int(static_cast<int>(starts.size()))];
                const grid::Trajectory traj =
                    grid::rollout(env, policy, start, max_steps, rng.next());
                ++total;
                if (!traj.terminal) continue;
                // Final state is g; the collected cell is the last step's state.
                const int last = traj.steps.back().state;
                if (is_task1[last]) ++hits1;
                if (is_task2[last]) ++hits2;
            }
        }
        const double f1 = static_cast<double>(hits1) / total;
        const double f2 = static_cast<double>(hits2) / total;
        csv += format_double(w1) + "," + format_double(f1) + "," + format_double(f2) + "\n";
        fractions.push_back(json{{"weight", w1}, {"fraction_task1", f1},
                                 {"fraction_task2", f2}});

        const ValueTable v = value_from_q_soft(composed, lib.reference, tau);
        char name[32];
        std::snprintf(name, sizeof(name), "sweep_w%03d.pgm", i);
        grid::render_value_heatmap(v, sc.geom, out_path(out_dir, name));
    }
    write_text_file(out_path(out_dir, "sweep.csv"), csv);
    json report = base_report(config, "sweep");
    report["fractions"] = std::move(fractions);
    write_text_file(out_path(out_dir, "report.json"), report.dump(2) + "\n");
}

void cmd_temporal(const ExperimentConfig& config, const std::string& out_dir,
                  bool baseline) {
    ensure_dir(out_dir);
    const Scenario sc = build_scenario(config);
    if (sc.items.empty()) throw ValidationError("temporal: no items placed");
    const Temperature tau(std::max(config.temperature, 0.0));

    grid::TemporalOptions topts;
    topts.solver_tol = config.tolerance;
    topts.max_steps = config.max_steps > 0
                          ? config.max_steps
                          : sc.geom.width * sc.geom.height *
                                static_cast<int>(sc.items.size());

    std::vector<double> returns;
    std::string csv = "episode,start,return,collected_all,steps\n";
    int collected_all = 0;
    for (int ep = 0; ep < config.episodes; ++ep) {
        const std::uint64_t ep_seed = SplitMix64::derive(config.seed, ep);
        SplitMix64 rng(ep_seed);
        const int start = rng.next_int(sc.geom.n_cells);
        const grid::Trajectory traj =
            grid::rollout_temporal(sc.geom, sc.items, tau, start, rng.next(), topts);
        returns.push_back(traj.total_return);
        collected_all += traj.terminal ? 1 : 0;
        csv += std::to_string(ep) + "," + std::to_string(start) + "," +
               format_double(traj.total_return) + "," +
               std::to_string(traj.terminal ? 1 : 0) + "," +
               std::to_string(traj.steps.size()) + "\n";
        if (ep < 3)
            grid::render_trajectory(
                traj, sc.geom, sc.items,
                out_path(out_dir, "temporal_ep" + std::to_string(ep) + ".ppm"));
    }
    write_text_file(out_path(out_dir, "returns.csv"), csv);

    json report = base_report(config, "temporal");
    report["episodes"] = config.episodes;
    report["collected_all_fraction"] =
        static_cast<double>(collected_all) / config.episodes;
    report["summary"] = summary_to_json(summarize(returns));

    if (baseline) {
        const std::vector<double> optimal =
            grid::collect_all_optimal_returns(sc.geom, sc.items);
        std::string bcsv = "state,optimal_return\n";
        for (int s = 0; s < static_cast<int>(optimal.size()); ++s)
            bcsv += std::to_string(s) + "," + format_double(optimal[s]) + "\n";
        write_text_file(out_path(out_dir, "baseline.csv"), bcsv);
        report["baseline"] = "collect-all product-space value iteration";
    }
    write_text_file(out_path(out_dir, "report.json"), report.dump(2) + "\n");
}

CounterexampleReport run_counterexample(double tau) {
    if (!(tau > 0.0))
        throw ValidationError("counterexample requires tau > 0; the claim is vacuous at 0");
    const TabularMdp mdp = two_state_mdp();
    const StochasticPolicy ref = StochasticPolicy::uniform(2, 2);
    const Temperature t(tau);

    CounterexampleReport report;
    report.tau = tau;
    // V_{pi_eps} > V_pi reduces to tau * H(eps) > eps * (1 + tau log 2)
    // with H the natural entropy. The tau (log 2 - 1/2) / (2 + tau)
    // bound alone is loose at small tau, where the inequality needs
    // eps < exp(-1/tau) / 2; stay strictly inside both.
    report.epsilon = 0.5 * std::min(tau * (std::log(2.0) - 0.5) / (2.0 + tau),
                                    0.5 * std::exp(-1.0 / tau));

    StochasticPolicy det = StochasticPolicy::deterministic(2, 2, kActionRight);
    StochasticPolicy eps(2, 2);
    eps.at(0, kActionLeft) = report.epsilon;
    eps.at(0, kActionRight) = 1.0 - report.epsilon;
    eps.at(1, 0) = 0.5;
    eps.at(1, 1) = 0.5;

    report.v_deterministic = policy_evaluation(mdp, det, ref, t)[0];
    report.v_stochastic = policy_evaluation(mdp, eps, ref, t)[0];
    SolveOptions opts;
    opts.tol = 1e-13;
    report.v_optimal = soft_value_iteration(mdp, ref, t, opts).value[0];
    report.stochastic_beats_deterministic = report.v_stochastic > report.v_deterministic;
    return report;
}

void cmd_counterexample(double tau, const std::string& out_dir) {
    const CounterexampleReport r = run_counterexample(tau);
    ensure_dir(out_dir);
    json j;
    j["command"] = "counterexample";
    j["rng_algorithm"] = kRngAlgorithm;
    j["tau"] = r.tau;
    j["epsilon"] = r.epsilon;
    j["v_deterministic"] = r.v_deterministic;
    j["v_stochastic"] = r.v_stochastic;
    j["v_optimal"] = r.v_optimal;
    j["stochastic_beats_deterministic"] = r.stochastic_beats_deterministic;
    write_text_file(out_path(out_dir, "report.json"), j.dump(2) + "\n");
    if (!r.stochastic_beats_deterministic)
        throw ValidationError("counterexample inequality failed; see report.json");
}

}  // namespace softcompose
