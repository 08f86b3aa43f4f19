#include "softcompose/solver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

#include "softcompose/rng.hpp"

namespace softcompose {

namespace {

void check_shapes(const TabularMdp& mdp, const ValueTable& v) {
    if (v.size() != mdp.n_states)
        throw ValidationError("value table size does not match mdp");
}

void check_shapes(const TabularMdp& mdp, const StochasticPolicy& pi) {
    if (pi.n_states != mdp.n_states || pi.n_actions != mdp.n_actions)
        throw ValidationError("policy shape does not match mdp");
}

/// tau * log sum_a ref_a exp(q_a / tau), max-shifted over ref's support.
double lse_backup(std::span<const double> q, std::span<const double> ref, double tau) {
    double qmax = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < q.size(); ++a)
        if (ref[a] > 0.0) qmax = std::max(qmax, q[a]);
    if (!std::isfinite(qmax))
        throw ValidationError("reference policy has empty support at some state");
    double sum = 0.0;
    for (std::size_t a = 0; a < q.size(); ++a)
        if (ref[a] > 0.0) sum += ref[a] * std::exp((q[a] - qmax) / tau);
    return qmax + tau * std::log(sum);
}

std::span<const double> q_row(const QTable& q, int s) {
    return {q.values.data() + static_cast<std::size_t>(s) * q.n_actions,
            static_cast<std::size_t>(q.n_actions)};
}

std::span<const double> policy_row(const StochasticPolicy& pi, int s) {
    return {pi.probs.data() + static_cast<std::size_t>(s) * pi.n_actions,
            static_cast<std::size_t>(pi.n_actions)};
}

/// Shared fixed-point loop with stall detection. `backup` maps the
/// previous iterate to the next one (Jacobi semantics).
template <typename Backup>
std::pair<ValueTable, std::pair<int, double>> iterate_to_fixed_point(
    ValueTable v, const SolveOptions& opts, const char* who, Backup&& backup) {
    std::vector<double> history;
    history.reserve(opts.max_iter);
    for (int iter = 1; iter <= opts.max_iter; ++iter) {
        ValueTable next = backup(v);
        const double residual = sup_norm_diff(next.values, v.values);
        v = std::move(next);
        if (residual < opts.tol) return {std::move(v), {iter, residual}};
        history.push_back(residual);
        const int i = static_cast<int>(history.size()) - 1;
        if (i >= opts.stall_window && history[i] >= history[i - opts.stall_window])
            throw DivergenceError(
                std::string(who) + ": residual " + std::to_string(residual) +
                    " stalled after " + std::to_string(iter) +
                    " sweeps; no proper policy or budget too small",
                v.values, iter);
    }
    throw DivergenceError(
        std::string(who) + ": residual " +
            std::to_string(history.empty() ? 0.0 : history.back()) + " above tol " +
            std::to_string(opts.tol) + " after " + std::to_string(opts.max_iter) + " sweeps",
        v.values, opts.max_iter);
}

}  // namespace

QTable q_from_v(const TabularMdp& mdp, const ValueTable& v) {
    check_shapes(mdp, v);
    QTable q(mdp.n_states, mdp.n_actions);
    for (int s = 0; s < mdp.n_states; ++s) {
        for (int a = 0; a < mdp.n_actions; ++a) {
            double ev = 0.0;
            for (const auto& [sn, p] : mdp.row(s, a))
                if (sn != mdp.virtual_goal) ev += p * v[sn];
            q.at(s, a) = mdp.reward(s, a) + ev;
        }
    }
    return q;
}

ValueTable bellman_policy_op(const TabularMdp& mdp, const StochasticPolicy& pi,
                             const StochasticPolicy& ref, Temperature tau,
                             const ValueTable& v) {
    check_shapes(mdp, pi);
    check_shapes(mdp, ref);
    const QTable q = q_from_v(mdp, v);
    ValueTable out(mdp.n_states);
    for (int s = 0; s < mdp.n_states; ++s) {
        if (s == mdp.virtual_goal) continue;  // no reward or penalty after g
        double eq = 0.0;
        for (int a = 0; a < mdp.n_actions; ++a) eq += pi.at(s, a) * q.at(s, a);
        double penalty = 0.0;
        if (tau.positive()) penalty = tau.tau * kl_divergence(policy_row(pi, s), policy_row(ref, s));
        out[s] = eq - penalty;
    }
    return out;
}

ValueTable soft_bellman_op(const TabularMdp& mdp, const StochasticPolicy& ref,
                           Temperature tau, const ValueTable& v) {
    if (!tau.positive())
        throw ValidationError("soft_bellman_op requires tau > 0; use standard_bellman_op");
    check_shapes(mdp, ref);
    const QTable q = q_from_v(mdp, v);
    ValueTable out(mdp.n_states);
    for (int s = 0; s < mdp.n_states; ++s)
        out[s] = lse_backup(q_row(q, s), policy_row(ref, s), tau.tau);
    return out;
}

ValueTable standard_bellman_op(const TabularMdp& mdp, const ValueTable& v) {
    const QTable q = q_from_v(mdp, v);
    return value_from_q_max(q);
}

StochasticPolicy boltzmann_policy(const QTable& q, const StochasticPolicy& ref,
                                  Temperature tau) {
    if (!tau.positive()) throw ValidationError("boltzmann_policy requires tau > 0");
    if (ref.n_states != q.n_states || ref.n_actions != q.n_actions)
        throw ValidationError("boltzmann_policy: shape mismatch");
    StochasticPolicy pi(q.n_states, q.n_actions);
    for (int s = 0; s < q.n_states; ++s) {
        double qmax = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < q.n_actions; ++a)
            if (ref.at(s, a) > 0.0) qmax = std::max(qmax, q.at(s, a));
        if (!std::isfinite(qmax))
            throw ValidationError("reference support empty at state " + std::to_string(s));
        double norm = 0.0;
        for (int a = 0; a < q.n_actions; ++a) {
            const double w = ref.at(s, a) > 0.0
                                 ? ref.at(s, a) * std::exp((q.at(s, a) - qmax) / tau.tau)
                                 : 0.0;
            pi.at(s, a) = w;
            norm += w;
        }
        for (int a = 0; a < q.n_actions; ++a) pi.at(s, a) /= norm;
    }
    return pi;
}

StochasticPolicy greedy_policy(const QTable& q) {
    StochasticPolicy pi(q.n_states, q.n_actions);
    for (int s = 0; s < q.n_states; ++s) {
        int best = 0;
        for (int a = 1; a < q.n_actions; ++a)
            if (q.at(s, a) > q.at(s, best)) best = a;
        pi.at(s, best) = 1.0;
    }
    return pi;
}

ValueTable value_from_q_soft(const QTable& q, const StochasticPolicy& ref, Temperature tau) {
    if (!tau.positive()) throw ValidationError("value_from_q_soft requires tau > 0");
    ValueTable v(q.n_states);
    for (int s = 0; s < q.n_states; ++s)
        v[s] = lse_backup(q_row(q, s), policy_row(ref, s), tau.tau);
    return v;
}

ValueTable value_from_q_max(const QTable& q) {
    ValueTable v(q.n_states);
    for (int s = 0; s < q.n_states; ++s) {
        double m = q.at(s, 0);
        for (int a = 1; a < q.n_actions; ++a) m = std::max(m, q.at(s, a));
        v[s] = m;
    }
    return v;
}

SolveResult soft_value_iteration(const TabularMdp& mdp, const StochasticPolicy& ref,
                                 Temperature tau, const SolveOptions& opts,
                                 const ValueTable* v0) {
    if (!tau.positive()) throw ValidationError("soft_value_iteration requires tau > 0");
    ValueTable v = v0 ? *v0 : ValueTable(mdp.n_states);
    check_shapes(mdp, v);
    auto [vstar, stats] = iterate_to_fixed_point(
        std::move(v), opts, "soft_value_iteration",
        [&](const ValueTable& cur) { return soft_bellman_op(mdp, ref, tau, cur); });
    SolveResult result;
    result.q = q_from_v(mdp, vstar);
    result.policy = boltzmann_policy(result.q, ref, tau);
    result.value = std::move(vstar);
    result.iterations = stats.first;
    result.residual = stats.second;
    return result;
}

SolveResult standard_value_iteration(const TabularMdp& mdp, const SolveOptions& opts,
                                     const ValueTable* v0) {
    ValueTable v = v0 ? *v0 : ValueTable(mdp.n_states);
    check_shapes(mdp, v);
    auto [vstar, stats] = iterate_to_fixed_point(
        std::move(v), opts, "standard_value_iteration",
        [&](const ValueTable& cur) { return standard_bellman_op(mdp, cur); });
    SolveResult result;
    result.q = q_from_v(mdp, vstar);
    result.policy = greedy_policy(result.q);
    result.value = std::move(vstar);
    result.iterations = stats.first;
    result.residual = stats.second;
    return result;
}

ValueTable policy_evaluation(const TabularMdp& mdp, const StochasticPolicy& pi,
                             const StochasticPolicy& ref, Temperature tau,
                             const SolveOptions& opts, bool check_proper) {
    check_shapes(mdp, pi);
    check_shapes(mdp, ref);
    if (check_proper) {
        const ProperCheck pc = is_proper(pi, mdp, 10 * mdp.n_states);
        if (!pc.proper)
            throw DivergenceError("policy_evaluation: policy is improper (residual mass " +
                                      std::to_string(pc.residual_mass) +
                                      " outside the absorbing set)",
                                  {}, 0);
    }

    if (mdp.n_states > 2000) {
        auto [v, stats] = iterate_to_fixed_point(
            ValueTable(mdp.n_states), opts, "policy_evaluation",
            [&](const ValueTable& cur) { return bellman_policy_op(mdp, pi, ref, tau, cur); });
        return v;
    }

    // T_pi is affine in V: solve (I - P_pi) V = b exactly, with V pinned
    // to 0 at the virtual goal.
    const int n = mdp.n_states;
    const int g = mdp.virtual_goal;
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    for (int s = 0; s < n; ++s) {
        if (s == g) continue;
        double rb = 0.0;
        for (int a = 0; a < mdp.n_actions; ++a) {
            const double pa = pi.at(s, a);
            if (pa == 0.0) continue;
            rb += pa * mdp.reward(s, a);
            for (const auto& [sn, p] : mdp.row(s, a))
                if (sn != g) A(s, sn) -= pa * p;
        }
        if (tau.positive()) rb -= tau.tau * kl_divergence(policy_row(pi, s), policy_row(ref, s));
        b(s) = rb;
    }
    const Eigen::VectorXd v = A.partialPivLu().solve(b);
    ValueTable out(n);
    for (int s = 0; s < n; ++s) out[s] = s == g ? 0.0 : v(s);
    return out;
}

SolveResult soft_policy_iteration(const TabularMdp& mdp, const StochasticPolicy& ref,
                                  Temperature tau, const StochasticPolicy& pi0,
                                  const SolveOptions& opts) {
    if (!tau.positive()) throw ValidationError("soft_policy_iteration requires tau > 0");
    check_shapes(mdp, pi0);
    const ProperCheck pc = is_proper(pi0, mdp, 10 * mdp.n_states);
    if (!pc.proper)
        throw DivergenceError("soft_policy_iteration: initial policy is improper "
                              "(residual mass " +
                                  std::to_string(pc.residual_mass) + ")",
                              {}, 0);

    StochasticPolicy pi = pi0;
    ValueTable v = policy_evaluation(mdp, pi, ref, tau, opts, /*check_proper=*/false);
    for (int round = 1; round <= opts.max_iter; ++round) {
        const QTable q = q_from_v(mdp, v);
        pi = boltzmann_policy(q, ref, tau);
        ValueTable v_next = policy_evaluation(mdp, pi, ref, tau, opts, /*check_proper=*/false);
        const double change = sup_norm_diff(v_next.values, v.values);
        v = std::move(v_next);
        if (change < opts.tol) {
            SolveResult result;
            result.q = q_from_v(mdp, v);
            result.policy = boltzmann_policy(result.q, ref, tau);
            result.value = std::move(v);
            result.iterations = round;
            result.residual = change;
            return result;
        }
    }
    throw DivergenceError("soft_policy_iteration: round budget exhausted", v.values,
                          opts.max_iter);
}

QTable soft_q_learning(const TabularMdp& mdp, const StochasticPolicy& ref,
                       Temperature tau, const QLearningOptions& opts,
                       std::uint64_t seed) {
    QTable q(mdp.n_states, mdp.n_actions);
    std::vector<std::uint64_t> visits(q.values.size(), 0);

    std::vector<int> starts;
    for (int s = 0; s < mdp.n_states; ++s)
        if (!mdp.is_terminal(s)) starts.push_back(s);
    if (starts.empty()) return q;

    const int cap = opts.max_episode_steps > 0 ? opts.max_episode_steps : 10 * mdp.n_states;
    std::vector<double> action_probs(mdp.n_actions);

    for (int ep = 0; ep < opts.episodes; ++ep) {
        SplitMix64 rng(SplitMix64::derive(seed, static_cast<std::uint64_t>(ep)));
        int s = starts[rng.next_int(static_cast<int>(starts.size()))];
        for (int t = 0; t < cap && s != mdp.virtual_goal; ++t) {
            int a;
            if (tau.positive()) {
                double qmax = -std::numeric_limits<double>::infinity();
                for (int ai = 0; ai < mdp.n_actions; ++ai)
                    if (ref.at(s, ai) > 0.0) qmax = std::max(qmax, q.at(s, ai));
                double norm = 0.0;
                for (int ai = 0; ai < mdp.n_actions; ++ai) {
                    action_probs[ai] = ref.at(s, ai) > 0.0
                                           ? ref.at(s, ai) *
                                                 std::exp((q.at(s, ai) - qmax) / tau.tau)
                                           : 0.0;
                    norm += action_probs[ai];
                }
                for (double& p : action_probs) p /= norm;
                a = rng.next_discrete(action_probs);
            } else {
                if (rng.next_double() < opts.epsilon) {
                    a = rng.next_int(mdp.n_actions);
                } else {
                    a = 0;
                    for (int ai = 1; ai < mdp.n_actions; ++ai)
                        if (q.at(s, ai) > q.at(s, a)) a = ai;
                }
            }

            // Sample the environment transition.
            const TransitionRow& row = mdp.row(s, a);
            int sn;
            if (row.size() == 1) {
                sn = row[0].first;
            } else {
                double u = rng.next_double();
                double acc = 0.0;
                sn = row.back().first;
                for (const auto& [cand, p] : row) {
                    acc += p;
                    if (u < acc) {
                        sn = cand;
                        break;
                    }
                }
            }

            double backup = 0.0;
            if (sn != mdp.virtual_goal) {
                if (tau.positive())
                    backup = lse_backup(q_row(q, sn), policy_row(ref, sn), tau.tau);
                else
                    for (int ai = 0; ai < mdp.n_actions; ++ai)
                        backup = ai == 0 ? q.at(sn, 0) : std::max(backup, q.at(sn, ai));
            }
            const double target = mdp.reward(s, a) + backup;
            const std::size_t idx = static_cast<std::size_t>(s) * mdp.n_actions + a;
            const double alpha = opts.schedule.rate(visits[idx]++);
            q.values[idx] += alpha * (target - q.values[idx]);
            s = sn;
        }
    }
    return q;
}

}  // namespace softcompose
