#pragma once

#include <span>
#include <vector>

#include "softcompose/mdp.hpp"
#include "softcompose/solver.hpp"

namespace softcompose {

/// Nonnegative weights with unit 1-norm, one per library task.
class WeightVector {
public:
    explicit WeightVector(std::vector<double> w);

    /// One-hot weight on task `index` among `n` tasks.
    static WeightVector one_hot(int n, int index);

    const std::vector<double>& weights() const { return weights_; }
    double operator[](int k) const { return weights_[k]; }
    int size() const { return static_cast<int>(weights_.size()); }
    double min_positive() const;

private:
    std::vector<double> weights_;
};

/// Z(s,a) = exp(Q(s,a)/tau). Throws on positive overflow; composition
/// paths use max-shifted arithmetic instead of raw desirability.
QTable desirability(const QTable& q, Temperature tau);

/// Weighted log-sum-exp composition, per entry and max-shifted:
/// Q(s,a) = tau log sum_k w_k exp(Q_k(s,a)/tau). Optimal for the
/// composite reward when the inputs are the library's optimal tables.
QTable compose_or(const std::vector<QTable>& q_list, const WeightVector& w,
                  Temperature tau);

/// Composite reward: weighted log-sum-exp on absorbing-set entries,
/// shared values copied unchanged elsewhere. Throws when the tables
/// disagree off the absorbing set.
std::vector<double> compose_or_reward(const std::vector<std::vector<double>>& r_list,
                                      const WeightVector& w, Temperature tau,
                                      const TabularMdp& base);

/// Entrywise maximum; the tau -> 0 limit of compose_or.
QTable compose_max(const std::vector<QTable>& q_list);

/// Entrywise mean of exactly two tables.
QTable compose_and_average(const std::vector<QTable>& q_list);

/// Renyi divergence of order 1/2: -2 log sum_i sqrt(p_i q_i).
/// Disjoint supports yield +infinity (a vacuous bound, not an error).
double renyi_half(std::span<const double> p, std::span<const double> q);

/// Upper bound on Q_ave - Q*: fixed point of
/// C <- E_{s'}[(tau/2) D_half(pi1_{s'} || pi2_{s'}) + E_{a'~pi_ave} C(s',a')]
/// where pi_ave is the normalised geometric mean of the two policies,
/// iterated from 0 with values at absorbing states and the virtual goal
/// pinned to 0. Converges iff pi_ave is proper; non-convergence raises
/// DivergenceError.
QTable and_bound_c(const TabularMdp& mdp, const StochasticPolicy& pi1,
                   const StochasticPolicy& pi2, Temperature tau,
                   const SolveOptions& opts = {});

/// Upper bound on Q* - Q_{pi_ave}: fixed point of
/// F <- E_{s'}[E_{a' ~ pi_ave}[C*(s',a') + F(s',a')]],
/// same boundary convention as and_bound_c.
QTable and_bound_f(const TabularMdp& mdp, const QTable& c_star,
                   const StochasticPolicy& pi_ave, Temperature tau,
                   const SolveOptions& opts = {});

/// Both error bounds for a two-task AND composition, plus the per-state
/// order-1/2 divergence of the two optimal policies.
struct AndBounds {
    QTable c_star;
    QTable f_star;
    std::vector<double> divergence;  // per state, 0 at terminal states
    bool unbounded = false;          // some divergence was infinite
};

AndBounds compute_and_bounds(const TabularMdp& mdp, const StochasticPolicy& pi1,
                             const StochasticPolicy& pi2, const StochasticPolicy& pi_ave,
                             Temperature tau, const SolveOptions& opts = {});

/// Sup-norm of UZ - Z for the desirability operator
/// [UZ](s,a) = exp(r(s,a)/tau) sum_{a'} ref(a'|f(s,a)) Z(f(s,a),a'),
/// with Z at the virtual goal taken as 1. Small residual certifies that
/// z is (near) the optimal desirability for `composite_rewards`.
double desirability_residual(const TaskLibrary& library,
                             const std::vector<double>& composite_rewards,
                             const QTable& z);

}  // namespace softcompose
