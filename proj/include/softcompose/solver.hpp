#pragma once

#include <cmath>
#include <cstdint>

#include "softcompose/mdp.hpp"

namespace softcompose {

/// Regularisation temperature. Zero selects the standard max-operator
/// backup; solvers that require strict positivity say so.
struct Temperature {
    double tau = 1.0;

    explicit Temperature(double t) : tau(t) {
        if (!(t >= 0.0) || !std::isfinite(t))
            throw ValidationError("temperature must be finite and nonnegative");
    }
    bool positive() const { return tau > 0.0; }
};

struct SolveOptions {
    double tol = 1e-10;
    int max_iter = 200000;
    // Residual failing to shrink over this many sweeps triggers the
    // divergence error; improper-policy iteration can drift slowly.
    int stall_window = 100;
};

struct SolveResult {
    ValueTable value;
    QTable q;
    StochasticPolicy policy;
    int iterations = 0;
    double residual = 0.0;
};

/// Q(s,a) = r(s,a) + E_{s' ~ rho(s,a)} V(s'), with V at the virtual goal
/// treated as 0 regardless of the table's entry.
QTable q_from_v(const TabularMdp& mdp, const ValueTable& v);

/// One application of the policy Bellman operator:
/// [T_pi V](s) = E_{a~pi} Q(s,a) - tau KL[pi_s || ref_s].
ValueTable bellman_policy_op(const TabularMdp& mdp, const StochasticPolicy& pi,
                             const StochasticPolicy& ref, Temperature tau,
                             const ValueTable& v);

/// Soft backup [LV](s) = tau log sum_a ref(a|s) exp(Q(s,a)/tau),
/// max-shifted. Requires tau > 0; use standard_bellman_op at tau = 0.
ValueTable soft_bellman_op(const TabularMdp& mdp, const StochasticPolicy& ref,
                           Temperature tau, const ValueTable& v);

/// Standard backup [TV](s) = max_a Q(s,a).
ValueTable standard_bellman_op(const TabularMdp& mdp, const ValueTable& v);

/// Boltzmann policy pi(a|s) proportional to ref(a|s) exp(Q(s,a)/tau).
StochasticPolicy boltzmann_policy(const QTable& q, const StochasticPolicy& ref,
                                  Temperature tau);

/// Deterministic greedy policy of a Q table; ties break to the lowest
/// action index.
StochasticPolicy greedy_policy(const QTable& q);

/// Iterates the soft backup to its fixed point. Throws DivergenceError
/// (carrying the last iterate) when the residual stalls or the budget is
/// exhausted, which signals that no proper policy exists.
SolveResult soft_value_iteration(const TabularMdp& mdp, const StochasticPolicy& ref,
                                 Temperature tau, const SolveOptions& opts = {},
                                 const ValueTable* v0 = nullptr);

/// The tau = 0 limit: max-backup value iteration with a greedy policy.
SolveResult standard_value_iteration(const TabularMdp& mdp, const SolveOptions& opts = {},
                                     const ValueTable* v0 = nullptr);

/// Fixed point of T_pi. Solves the induced affine system exactly when
/// n_states <= 2000, otherwise iterates; the two routes agree within tol.
/// Properness of pi is checked first unless check_proper is false.
ValueTable policy_evaluation(const TabularMdp& mdp, const StochasticPolicy& pi,
                             const StochasticPolicy& ref, Temperature tau,
                             const SolveOptions& opts = {}, bool check_proper = true);

/// Alternates exact policy evaluation with Boltzmann improvement until
/// the value change between rounds drops below tol.
SolveResult soft_policy_iteration(const TabularMdp& mdp, const StochasticPolicy& ref,
                                  Temperature tau, const StochasticPolicy& pi0,
                                  const SolveOptions& opts = {});

/// Step-size schedule: alpha_n = base * decay / (decay + n) where n is
/// the per-pair visit count.
struct LearningSchedule {
    double base = 1.0;
    double decay = 200.0;

    double rate(std::uint64_t visits) const { return base * decay / (decay + visits); }
};

struct QLearningOptions {
    LearningSchedule schedule;
    int episodes = 10000;
    int max_episode_steps = 0;   // 0 means 10 * n_states
    double epsilon = 0.1;        // exploration when tau = 0
};

/// Tabular one-step TD with the soft backup target (max backup at
/// tau = 0). Behaviour is the Boltzmann policy of the current table, or
/// epsilon-greedy at tau = 0. Episodes start uniformly over
/// non-terminal states.
QTable soft_q_learning(const TabularMdp& mdp, const StochasticPolicy& ref,
                       Temperature tau, const QLearningOptions& opts,
                       std::uint64_t seed);

/// tau log sum_a ref(a|s) exp(Q(s,a)/tau) per state; the value implied
/// by a Q table.
ValueTable value_from_q_soft(const QTable& q, const StochasticPolicy& ref, Temperature tau);

/// max_a Q(s,a) per state.
ValueTable value_from_q_max(const QTable& q);

}  // namespace softcompose
