#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace softcompose {

/// Thrown for malformed inputs (shape mismatches, invariant violations
/// raised as hard errors, bad configs). Maps to CLI exit code 2.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown when an iterative solver fails to reach its tolerance.
/// Carries the last iterate so callers can inspect it. Exit code 3.
struct DivergenceError : std::runtime_error {
    DivergenceError(const std::string& what, std::vector<double> last, int iters)
        : std::runtime_error(what), last_iterate(std::move(last)), iterations(iters) {}
    std::vector<double> last_iterate;
    int iterations = 0;
};

/// Sparse transition row: (next state, probability) pairs.
using TransitionRow = std::vector<std::pair<int, double>>;

/// Per-state value table.
struct ValueTable {
    std::vector<double> values;

    ValueTable() = default;
    explicit ValueTable(int n_states, double fill = 0.0) : values(n_states, fill) {}

    double& operator[](int s) { return values[s]; }
    double operator[](int s) const { return values[s]; }
    int size() const { return static_cast<int>(values.size()); }
};

/// Per-(state, action) table, row-major. Houses Q-functions and, when
/// exponentiated, desirability tables.
struct QTable {
    int n_states = 0;
    int n_actions = 0;
    std::vector<double> values;

    QTable() = default;
    QTable(int ns, int na, double fill = 0.0)
        : n_states(ns), n_actions(na), values(static_cast<std::size_t>(ns) * na, fill) {}

    double& at(int s, int a) { return values[static_cast<std::size_t>(s) * n_actions + a]; }
    double at(int s, int a) const { return values[static_cast<std::size_t>(s) * n_actions + a]; }
};

/// Row-stochastic action distribution per state. Houses pi, the reference
/// policy, and Boltzmann policies.
struct StochasticPolicy {
    int n_states = 0;
    int n_actions = 0;
    std::vector<double> probs;

    StochasticPolicy() = default;
    StochasticPolicy(int ns, int na, double fill = 0.0)
        : n_states(ns), n_actions(na), probs(static_cast<std::size_t>(ns) * na, fill) {}

    /// Uniform policy over all actions.
    static StochasticPolicy uniform(int ns, int na);
    /// Deterministic policy selecting `action` in every state.
    static StochasticPolicy deterministic(int ns, int na, int action);

    double& at(int s, int a) { return probs[static_cast<std::size_t>(s) * n_actions + a]; }
    double at(int s, int a) const { return probs[static_cast<std::size_t>(s) * n_actions + a]; }
};

/// Finite total-reward MDP with an absorbing set and a virtual goal
/// state g. Every absorbing state and g itself transition to g with
/// probability 1 under all actions; rewards from g are 0.
struct TabularMdp {
    int n_states = 0;
    int n_actions = 0;
    bool deterministic = false;              // every row is a point mass
    std::vector<TransitionRow> transitions;  // indexed s * n_actions + a
    std::vector<double> rewards;             // indexed s * n_actions + a
    std::vector<char> absorbing;             // membership mask over states
    int virtual_goal = -1;

    const TransitionRow& row(int s, int a) const {
        return transitions[static_cast<std::size_t>(s) * n_actions + a];
    }
    TransitionRow& row(int s, int a) {
        return transitions[static_cast<std::size_t>(s) * n_actions + a];
    }
    double reward(int s, int a) const {
        return rewards[static_cast<std::size_t>(s) * n_actions + a];
    }
    double& reward(int s, int a) {
        return rewards[static_cast<std::size_t>(s) * n_actions + a];
    }
    bool is_terminal(int s) const { return absorbing[s] || s == virtual_goal; }

    /// Successor state for deterministic kernels.
    int next_state(int s, int a) const;
};

/// Shared dynamics plus per-task reward tables that differ only on the
/// absorbing set. Exact composition additionally requires the base
/// dynamics to be deterministic.
struct TaskLibrary {
    TabularMdp base;              // rewards field unused (kept zero)
    StochasticPolicy reference;   // pi-bar
    std::vector<std::vector<double>> task_rewards;
    std::vector<std::string> task_names;  // optional labels, may be empty
    double temperature = 1.0;
};

/// One broken invariant; `state`/`action` are -1 when not applicable.
struct Violation {
    std::string message;
    int state = -1;
    int action = -1;
};

/// Checks all TabularMdp invariants. Violations are data, not failures:
/// the report is empty iff the MDP is well formed.
std::vector<Violation> validate(const TabularMdp& mdp);

/// Checks TaskLibrary invariants (base validity, reward agreement off the
/// absorbing set, determinism, reference rows stochastic, temperature > 0).
std::vector<Violation> validate(const TaskLibrary& library);

/// KL divergence sum_i p_i log(p_i / q_i) with 0 log(0/q) = 0.
/// Throws ValidationError if p is not absolutely continuous w.r.t. q.
double kl_divergence(std::span<const double> p, std::span<const double> q);

struct ProperCheck {
    bool proper = false;
    double residual_mass = 0.0;  // max over starts of mass outside G u {g}
};

/// Decides properness structurally (every state reaches the absorbing
/// set with positive probability through the policy's support) and also
/// propagates state occupancy `horizon` steps from every start state to
/// report the worst-case probability mass still outside the absorbing
/// set. horizon must be positive.
ProperCheck is_proper(const StochasticPolicy& policy, const TabularMdp& mdp, int horizon);

/// Assembles a full MDP from the library's shared dynamics and one
/// reward table. The result passes validate().
TabularMdp build_composite_reward_mdp(const TaskLibrary& library,
                                      const std::vector<double>& rewards);

/// The two-state MDP with a single non-absorbing state s, actions
/// Left (self-loop) and Right (to g), both rewarding -1. State 0 is s,
/// state 1 is g. Action 0 is Left, action 1 is Right.
TabularMdp two_state_mdp();

inline constexpr int kActionLeft = 0;
inline constexpr int kActionRight = 1;

/// Sup-norm distance between two equally sized vectors.
double sup_norm_diff(std::span<const double> a, std::span<const double> b);

}  // namespace softcompose
