#include "softcompose/gridworld.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "softcompose/compose.hpp"
#include "softcompose/rng.hpp"

namespace softcompose {
namespace grid {

namespace {

// N, S, E, W
constexpr int kDx[kNumActions] = {0, 0, 1, -1};
constexpr int kDy[kNumActions] = {-1, 1, 0, 0};

void check_items(const GridGeometry& geom, const std::vector<Item>& items) {
    std::vector<char> taken(geom.wall.size(), 0);
    for (const Item& it : items) {
        const std::string at = "(" + std::to_string(it.x) + ", " + std::to_string(it.y) + ")";
        if (it.x < 0 || it.x >= geom.width || it.y < 0 || it.y >= geom.height)
            throw ValidationError("item at " + at + " out of bounds");
        const int c = geom.cell(it.x, it.y);
        if (geom.wall[c]) throw ValidationError("item at " + at + " sits on a wall");
        if (taken[c]) throw ValidationError("two items share cell " + at);
        taken[c] = 1;
    }
}

}  // namespace

std::string to_string(Shape s) { return s == Shape::square ? "square" : "circle"; }
std::string to_string(Color c) {
    switch (c) {
        case Color::blue: return "blue";
        case Color::beige: return "beige";
        default: return "purple";
    }
}

Shape shape_from_string(const std::string& s) {
    if (s == "square") return Shape::square;
    if (s == "circle") return Shape::circle;
    throw ValidationError("unknown shape '" + s + "'");
}

Color color_from_string(const std::string& s) {
    if (s == "blue") return Color::blue;
    if (s == "beige") return Color::beige;
    if (s == "purple") return Color::purple;
    throw ValidationError("unknown color '" + s + "'");
}

bool GridTask::matches(const Item& item) const {
    if (color && *color != item.color) return false;
    if (shape && *shape != item.shape) return false;
    return color || shape;
}

GridTask GridTask::parse(const std::string& name) {
    GridTask task;
    task.name = name;
    auto contains = [&name](const char* word) { return name.find(word) != std::string::npos; };
    if (contains("Blue")) task.color = Color::blue;
    if (contains("Beige")) task.color = Color::beige;
    if (contains("Purple")) task.color = Color::purple;
    if (contains("Square")) task.shape = Shape::square;
    if (contains("Circle")) task.shape = Shape::circle;
    if (!task.color && !task.shape)
        throw ValidationError("task name '" + name + "' names no color or shape");
    return task;
}

GridGeometry GridGeometry::build(const GridSpec& spec) {
    if (spec.width <= 0 || spec.height <= 0)
        throw ValidationError("grid dimensions must be positive");
    GridGeometry geom;
    geom.width = spec.width;
    geom.height = spec.height;
    geom.wall.assign(static_cast<std::size_t>(spec.width) * spec.height, 0);
    for (const auto& [x, y] : spec.walls) {
        if (x < 0 || x >= spec.width || y < 0 || y >= spec.height)
            throw ValidationError("wall at (" + std::to_string(x) + ", " +
                                  std::to_string(y) + ") out of bounds");
        geom.wall[geom.cell(x, y)] = 1;
    }
    geom.state_of_cell.assign(geom.wall.size(), -1);
    for (int c = 0; c < static_cast<int>(geom.wall.size()); ++c) {
        if (geom.wall[c]) continue;
        geom.state_of_cell[c] = geom.n_cells++;
        geom.cell_of_state.push_back(c);
    }
    if (geom.n_cells == 0) throw ValidationError("grid has no free cells");

    // Interior connectivity.
    std::vector<char> seen(geom.wall.size(), 0);
    std::deque<int> frontier{geom.cell_of_state[0]};
    seen[geom.cell_of_state[0]] = 1;
    int reached = 0;
    while (!frontier.empty()) {
        const int c = frontier.front();
        frontier.pop_front();
        ++reached;
        const int x = c % geom.width, y = c / geom.width;
        for (int a = 0; a < kNumActions; ++a) {
            const int nx = x + kDx[a], ny = y + kDy[a];
            if (nx < 0 || nx >= geom.width || ny < 0 || ny >= geom.height) continue;
            const int nc = geom.cell(nx, ny);
            if (geom.wall[nc] || seen[nc]) continue;
            seen[nc] = 1;
            frontier.push_back(nc);
        }
    }
    if (reached != geom.n_cells)
        throw ValidationError("grid free cells are not connected");
    return geom;
}

namespace {

/// Shared kernel: moves with wall/border bumps; `absorbing_cells` rows
/// jump to the virtual goal.
TabularMdp build_grid_mdp(const GridGeometry& geom, const std::vector<char>& absorbing_cells) {
    TabularMdp mdp;
    mdp.n_states = geom.n_cells + 1;
    mdp.n_actions = kNumActions;
    mdp.deterministic = true;
    mdp.virtual_goal = geom.n_cells;
    mdp.absorbing.assign(mdp.n_states, 0);
    mdp.transitions.resize(static_cast<std::size_t>(mdp.n_states) * kNumActions);
    mdp.rewards.assign(static_cast<std::size_t>(mdp.n_states) * kNumActions, 0.0);

    for (int s = 0; s < geom.n_cells; ++s) {
        const int c = geom.cell_of_state[s];
        if (absorbing_cells[c]) {
            mdp.absorbing[s] = 1;
            for (int a = 0; a < kNumActions; ++a) {
                mdp.row(s, a) = {{mdp.virtual_goal, 1.0}};
                mdp.reward(s, a) = kGoalReward;
            }
            continue;
        }
        const int x = c % geom.width, y = c / geom.width;
        for (int a = 0; a < kNumActions; ++a) {
            const int nx = x + kDx[a], ny = y + kDy[a];
            int target = s;
            if (nx >= 0 && nx < geom.width && ny >= 0 && ny < geom.height &&
                !geom.wall[geom.cell(nx, ny)])
                target = geom.state_of_cell[geom.cell(nx, ny)];
            mdp.row(s, a) = {{target, 1.0}};
            mdp.reward(s, a) = kStepReward;
        }
    }
    for (int a = 0; a < kNumActions; ++a)
        mdp.row(mdp.virtual_goal, a) = {{mdp.virtual_goal, 1.0}};
    return mdp;
}

}  // namespace

TabularMdp build_mdp(const GridGeometry& geom, const std::vector<Item>& items,
                     const GridTask& task) {
    check_items(geom, items);
    std::vector<char> goal(geom.wall.size(), 0);
    int n_goals = 0;
    for (const Item& it : items) {
        if (!task.matches(it)) continue;
        goal[geom.cell(it.x, it.y)] = 1;
        ++n_goals;
    }
    if (n_goals == 0)
        throw ValidationError("task '" + task.name + "' matches no placed item");
    return build_grid_mdp(geom, goal);
}

TabularMdp build_single_goal_mdp(const GridGeometry& geom, int goal_cell) {
    if (goal_cell < 0 || goal_cell >= static_cast<int>(geom.wall.size()) ||
        geom.wall[goal_cell])
        throw ValidationError("goal cell is out of bounds or a wall");
    std::vector<char> goal(geom.wall.size(), 0);
    goal[goal_cell] = 1;
    return build_grid_mdp(geom, goal);
}

TaskLibrary build_task_library(const GridGeometry& geom, const std::vector<Item>& items,
                               const std::vector<GridTask>& tasks, double temperature,
                               double wrong_goal_reward) {
    check_items(geom, items);
    if (tasks.empty()) throw ValidationError("task library needs at least one task");
    std::vector<char> shared_goal(geom.wall.size(), 0);
    for (const Item& it : items)
        for (const GridTask& t : tasks)
            if (t.matches(it)) shared_goal[geom.cell(it.x, it.y)] = 1;

    TaskLibrary lib;
    lib.base = build_grid_mdp(geom, shared_goal);
    lib.temperature = temperature;
    lib.reference = StochasticPolicy::uniform(lib.base.n_states, lib.base.n_actions);

    const std::size_t n_pairs =
        static_cast<std::size_t>(lib.base.n_states) * lib.base.n_actions;
    for (const GridTask& t : tasks) {
        bool any = false;
        std::vector<double> rewards = lib.base.rewards;  // step/goal base values
        for (const Item& it : items) {
            const int c = geom.cell(it.x, it.y);
            if (!shared_goal[c]) continue;
            const int s = geom.state_of_cell[c];
            const double r = t.matches(it) ? kGoalReward : wrong_goal_reward;
            if (t.matches(it)) any = true;
            for (int a = 0; a < kNumActions; ++a)
                rewards[static_cast<std::size_t>(s) * kNumActions + a] = r;
        }
        if (!any)
            throw ValidationError("task '" + t.name + "' matches no placed item");
        lib.task_rewards.push_back(std::move(rewards));
        lib.task_names.push_back(t.name);
    }
    lib.base.rewards.assign(n_pairs, 0.0);  // library base carries no rewards
    return lib;
}

StepOutcome step(const TabularMdp& mdp, int state, int action) {
    if (state < 0 || state >= mdp.n_states) throw ValidationError("step: state out of range");
    if (action < 0 || action >= mdp.n_actions)
        throw ValidationError("step: action index out of range");
    StepOutcome out;
    out.next_state = mdp.next_state(state, action);
    out.reward = mdp.reward(state, action);
    out.done = mdp.absorbing[state] != 0;
    return out;
}

Trajectory rollout(const TabularMdp& mdp, const StochasticPolicy& policy, int start,
                   int max_steps, std::uint64_t seed) {
    if (policy.n_states != mdp.n_states || policy.n_actions != mdp.n_actions)
        throw ValidationError("rollout: policy shape mismatch");
    Trajectory traj;
    traj.final_state = start;
    SplitMix64 rng(seed);
    int s = start;
    for (int t = 0; t < max_steps; ++t) {
        if (s == mdp.virtual_goal) break;
        const std::span<const double> row{
            policy.probs.data() + static_cast<std::size_t>(s) * policy.n_actions,
            static_cast<std::size_t>(policy.n_actions)};
        const int a = rng.next_discrete(row);
        const StepOutcome out = step(mdp, s, a);
        traj.steps.push_back({s, a, out.reward});
        traj.total_return += out.reward;
        s = out.next_state;
        traj.final_state = s;
        if (out.done) {
            traj.terminal = true;
            break;
        }
    }
    return traj;
}

Trajectory rollout_temporal(const GridGeometry& geom, std::vector<Item> items,
                            Temperature tau, int start, std::uint64_t seed,
                            const TemporalOptions& opts) {
    if (items.empty()) throw ValidationError("rollout_temporal: empty item library");
    check_items(geom, items);
    const int cap = opts.max_steps > 0
                        ? opts.max_steps
                        : geom.width * geom.height * static_cast<int>(items.size());
    SplitMix64 rng(seed);
    SolveOptions solve_opts;
    solve_opts.tol = opts.solver_tol;

    Trajectory traj;
    traj.final_state = start;
    int s = start;

    auto solve_library = [&](const std::vector<Item>& remaining) {
        std::vector<QTable> qs;
        qs.reserve(remaining.size());
        for (const Item& it : remaining) {
            const TabularMdp task = build_single_goal_mdp(geom, geom.cell(it.x, it.y));
            if (tau.positive()) {
                const auto ref = StochasticPolicy::uniform(task.n_states, task.n_actions);
                qs.push_back(soft_value_iteration(task, ref, tau, solve_opts).q);
            } else {
                qs.push_back(standard_value_iteration(task, solve_opts).q);
            }
        }
        return tau.positive()
                   ? compose_or(qs, WeightVector(std::vector<double>(
                                    qs.size(), 1.0 / static_cast<double>(qs.size()))), tau)
                   : compose_max(qs);
    };

    QTable composed = solve_library(items);
    StochasticPolicy boltzmann;
    if (tau.positive())
        boltzmann = boltzmann_policy(
            composed, StochasticPolicy::uniform(composed.n_states, composed.n_actions), tau);

    int taken = 0;
    while (!items.empty() && taken < cap) {
        const int cell = geom.cell_of_state[s];
        auto held = std::find_if(items.begin(), items.end(), [&](const Item& it) {
            return geom.cell(it.x, it.y) == cell;
        });
        if (held != items.end()) {
            traj.steps.push_back({s, 0, kGoalReward});
            traj.total_return += kGoalReward;
            ++taken;
            items.erase(held);
            if (items.empty()) break;
            composed = solve_library(items);
            if (tau.positive())
                boltzmann = boltzmann_policy(
                    composed, StochasticPolicy::uniform(composed.n_states, composed.n_actions),
                    tau);
            continue;
        }
        int a;
        if (tau.positive()) {
            const std::span<const double> row{
                boltzmann.probs.data() + static_cast<std::size_t>(s) * boltzmann.n_actions,
                static_cast<std::size_t>(boltzmann.n_actions)};
            a = rng.next_discrete(row);
        } else {
            a = 0;
            for (int ai = 1; ai < kNumActions; ++ai)
                if (composed.at(s, ai) > composed.at(s, a)) a = ai;
        }
        const int x = geom.cell_of_state[s] % geom.width;
        const int y = geom.cell_of_state[s] / geom.width;
        const int nx = x + kDx[a], ny = y + kDy[a];
        int sn = s;
        if (nx >= 0 && nx < geom.width && ny >= 0 && ny < geom.height &&
            !geom.wall[geom.cell(nx, ny)])
            sn = geom.state_of_cell[geom.cell(nx, ny)];
        traj.steps.push_back({s, a, kStepReward});
        traj.total_return += kStepReward;
        s = sn;
        traj.final_state = s;
        ++taken;
    }
    traj.terminal = items.empty();
    return traj;
}

std::vector<double> collect_all_optimal_returns(const GridGeometry& geom,
                                                const std::vector<Item>& items,
                                                const SolveOptions& opts) {
    check_items(geom, items);
    const int k = static_cast<int>(items.size());
    if (k == 0) throw ValidationError("collect_all_optimal_returns: no items");
    if (k > 16) throw ValidationError("collect_all_optimal_returns: too many items");
    const int masks = 1 << k;
    std::vector<int> item_at_cell(geom.wall.size(), -1);
    for (int i = 0; i < k; ++i) item_at_cell[geom.cell(items[i].x, items[i].y)] = i;

    // Product MDP over (cell state, remaining-item mask).
    TabularMdp prod;
    prod.n_states = geom.n_cells * masks + 1;
    prod.n_actions = kNumActions;
    prod.deterministic = true;
    prod.virtual_goal = geom.n_cells * masks;
    prod.absorbing.assign(prod.n_states, 0);
    prod.transitions.resize(static_cast<std::size_t>(prod.n_states) * kNumActions);
    prod.rewards.assign(static_cast<std::size_t>(prod.n_states) * kNumActions, 0.0);

    auto id = [&](int s, int mask) { return s * masks + mask; };
    for (int s = 0; s < geom.n_cells; ++s) {
        const int c = geom.cell_of_state[s];
        const int x = c % geom.width, y = c / geom.width;
        const int item = item_at_cell[c];
        for (int mask = 0; mask < masks; ++mask) {
            const int ps = id(s, mask);
            if (mask == 0) {
                // Nothing left; unreachable padding, modelled absorbing.
                prod.absorbing[ps] = 1;
                for (int a = 0; a < kNumActions; ++a)
                    prod.row(ps, a) = {{prod.virtual_goal, 1.0}};
                continue;
            }
            if (item >= 0 && (mask & (1 << item))) {
                const int rest = mask & ~(1 << item);
                const int target = rest == 0 ? prod.virtual_goal : id(s, rest);
                if (rest == 0) prod.absorbing[ps] = 1;
                for (int a = 0; a < kNumActions; ++a) {
                    prod.row(ps, a) = {{target, 1.0}};
                    prod.reward(ps, a) = kGoalReward;
                }
                continue;
            }
            for (int a = 0; a < kNumActions; ++a) {
                const int nx = x + kDx[a], ny = y + kDy[a];
                int tgt = s;
                if (nx >= 0 && nx < geom.width && ny >= 0 && ny < geom.height &&
                    !geom.wall[geom.cell(nx, ny)])
                    tgt = geom.state_of_cell[geom.cell(nx, ny)];
                prod.row(ps, a) = {{id(tgt, mask), 1.0}};
                prod.reward(ps, a) = kStepReward;
            }
        }
    }
    for (int a = 0; a < kNumActions; ++a)
        prod.row(prod.virtual_goal, a) = {{prod.virtual_goal, 1.0}};

    const SolveResult solved = standard_value_iteration(prod, opts);
    std::vector<double> out(geom.n_cells);
    const int full = masks - 1;
    for (int s = 0; s < geom.n_cells; ++s) out[s] = solved.value[id(s, full)];
    return out;
}

std::vector<int> bfs_distances(const GridGeometry& geom, const std::vector<int>& targets) {
    std::vector<int> dist(geom.n_cells, -1);
    std::deque<int> frontier;
    for (int c : targets) {
        const int s = geom.state_of_cell[c];
        if (s >= 0 && dist[s] < 0) {
            dist[s] = 0;
            frontier.push_back(s);
        }
    }
    while (!frontier.empty()) {
        const int s = frontier.front();
        frontier.pop_front();
        const int c = geom.cell_of_state[s];
        const int x = c % geom.width, y = c / geom.width;
        for (int a = 0; a < kNumActions; ++a) {
            const int nx = x + kDx[a], ny = y + kDy[a];
            if (nx < 0 || nx >= geom.width || ny < 0 || ny >= geom.height) continue;
            const int nc = geom.cell(nx, ny);
            if (geom.wall[nc]) continue;
            const int ns = geom.state_of_cell[nc];
            if (dist[ns] >= 0) continue;
            dist[ns] = dist[s] + 1;
            frontier.push_back(ns);
        }
    }
    return dist;
}

}  // namespace grid
}  // namespace softcompose
