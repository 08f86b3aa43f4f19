#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "softcompose/mdp.hpp"
#include "softcompose/solver.hpp"

namespace softcompose {
namespace grid {

enum class Shape { square, circle };
enum class Color { blue, beige, purple };

std::string to_string(Shape s);
std::string to_string(Color c);
Shape shape_from_string(const std::string& s);
Color color_from_string(const std::string& s);

struct GridSpec {
    int width = 0;
    int height = 0;
    std::vector<std::pair<int, int>> walls;  // (x, y) cells
    std::uint64_t rng_seed = 0;
};

struct Item {
    Shape shape;
    Color color;
    int x = 0;
    int y = 0;
};

/// Task predicate over items: any unset field is a wildcard. At least
/// one field must be set.
struct GridTask {
    std::optional<Color> color;
    std::optional<Shape> shape;
    std::string name;

    bool matches(const Item& item) const;

    /// Parses names like "Purple", "Square" or "BeigeSquare".
    static GridTask parse(const std::string& name);
};

/// Compiled grid layout: cell <-> state index maps over non-wall cells.
/// State n_cells is reserved for the virtual goal of derived MDPs.
struct GridGeometry {
    int width = 0;
    int height = 0;
    std::vector<char> wall;          // size width * height, x + y * width
    std::vector<int> state_of_cell;  // -1 for walls
    std::vector<int> cell_of_state;  // size n_cells
    int n_cells = 0;

    int cell(int x, int y) const { return x + y * width; }
    bool is_wall(int x, int y) const { return wall[cell(x, y)] != 0; }

    /// Validates bounds and interior connectivity.
    static GridGeometry build(const GridSpec& spec);
};

inline constexpr int kNumActions = 4;  // N, S, E, W
inline constexpr double kStepReward = -0.1;
inline constexpr double kGoalReward = 1.0;

/// Single-task MDP: states are agent cells plus the virtual goal; cells
/// holding task-matching items are absorbing with reward +1, every other
/// transition rewards -0.1, and moves into walls or the border stay put.
/// Non-matching items are pass-through decoration.
TabularMdp build_mdp(const GridGeometry& geom, const std::vector<Item>& items,
                     const GridTask& task);

/// Single-goal MDP with the absorbing set {cell}; used by the temporal
/// agent's per-item tasks.
TabularMdp build_single_goal_mdp(const GridGeometry& geom, int goal_cell);

/// Task library over shared dynamics: the absorbing set is every cell
/// holding an item matched by at least one task; each task rewards +1 on
/// its own items and `wrong_goal_reward` on the rest of the set.
TaskLibrary build_task_library(const GridGeometry& geom, const std::vector<Item>& items,
                               const std::vector<GridTask>& tasks, double temperature,
                               double wrong_goal_reward = -1e3);

struct Step {
    int state = 0;
    int action = 0;
    double reward = 0.0;
};

struct Trajectory {
    std::vector<Step> steps;
    bool terminal = false;  // truncation leaves this false
    int final_state = 0;
    double total_return = 0.0;
};

struct StepOutcome {
    int next_state = 0;
    double reward = 0.0;
    bool done = false;
};

/// Pure transition function for deterministic MDPs; done iff `state` is
/// in the absorbing set (the +1 transition into the virtual goal).
StepOutcome step(const TabularMdp& mdp, int state, int action);

/// Samples actions from the policy until done or max_steps. Identical
/// seeds yield identical trajectories.
Trajectory rollout(const TabularMdp& mdp, const StochasticPolicy& policy, int start,
                   int max_steps, std::uint64_t seed);

struct TemporalOptions {
    int max_steps = 0;          // 0 means width * height * n_items
    double solver_tol = 1e-10;
};

/// Multi-collection rollout: per remaining item, solves its single-goal
/// task on the current layout, composes (max at tau = 0, equal-weight
/// log-sum-exp otherwise) and acts greedily / Boltzmann. Collecting an
/// item removes it and recomposes on the reduced layout; terminates when
/// no items remain.
Trajectory rollout_temporal(const GridGeometry& geom, std::vector<Item> items,
                            Temperature tau, int start, std::uint64_t seed,
                            const TemporalOptions& opts = {});

/// Optimal collect-all return per start cell (index by state), from
/// standard value iteration on the (cell, remaining-items) product MDP.
std::vector<double> collect_all_optimal_returns(const GridGeometry& geom,
                                                const std::vector<Item>& items,
                                                const SolveOptions& opts = {});

/// BFS move counts from every non-wall cell to the nearest of `targets`
/// (cell indices); unreachable cells get -1. Indexed by state.
std::vector<int> bfs_distances(const GridGeometry& geom, const std::vector<int>& targets);

/// Grayscale PGM (P2) heatmap of a per-state value table, min-max
/// normalised over non-wall cells; walls render 0 and zero-range images
/// render mid-gray. A sidecar CSV `<path>.csv` holds the raw values.
void render_value_heatmap(const ValueTable& v, const GridGeometry& geom,
                          const std::string& path);

/// Colour PPM (P3) overlay: walls black, free cells white, visited cells
/// highlighted, items in their own colours.
void render_trajectory(const Trajectory& traj, const GridGeometry& geom,
                       const std::vector<Item>& items, const std::string& path);

}  // namespace grid
}  // namespace softcompose
