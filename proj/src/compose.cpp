#include "softcompose/compose.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

namespace softcompose {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_same_shape(const std::vector<QTable>& q_list) {
    if (q_list.empty()) throw ValidationError("composition requires a nonempty table list");
    for (const QTable& q : q_list)
        if (q.n_states != q_list[0].n_states || q.n_actions != q_list[0].n_actions)
            throw ValidationError("composition tables have mismatched shapes");
}

/// Sup-norm over entries, treating matching infinities as equal.
double residual_inf_aware(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == b[i]) continue;  // covers matching +inf
        d = std::max(d, std::abs(a[i] - b[i]));
    }
    return d;
}

template <typename Backup>
QTable iterate_bound(QTable c, const SolveOptions& opts, const char* who, Backup&& backup) {
    std::vector<double> history;
    for (int iter = 1; iter <= opts.max_iter; ++iter) {
        QTable next = backup(c);
        const double residual = residual_inf_aware(next.values, c.values);
        c = std::move(next);
        if (residual < opts.tol) return c;
        history.push_back(residual);
        const int i = static_cast<int>(history.size()) - 1;
        if (i >= opts.stall_window && history[i] >= history[i - opts.stall_window])
            throw DivergenceError(std::string(who) + ": bound recursion stalled at residual " +
                                      std::to_string(residual) + " after " +
                                      std::to_string(iter) + " sweeps",
                                  c.values, iter);
    }
    throw DivergenceError(std::string(who) + ": bound recursion exhausted its budget",
                          c.values, opts.max_iter);
}

}  // namespace

WeightVector::WeightVector(std::vector<double> w) : weights_(std::move(w)) {
    if (weights_.empty()) throw ValidationError("weight vector is empty");
    double sum = 0.0;
    for (double wi : weights_) {
        if (!(wi >= 0.0) || !std::isfinite(wi))
            throw ValidationError("weights must be nonnegative and finite");
        sum += wi;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw ValidationError("weights sum to " + std::to_string(sum) + " rather than 1");
}

WeightVector WeightVector::one_hot(int n, int index) {
    if (index < 0 || index >= n) throw ValidationError("one_hot index out of range");
    std::vector<double> w(n, 0.0);
    w[index] = 1.0;
    return WeightVector(std::move(w));
}

double WeightVector::min_positive() const {
    double m = kInf;
    for (double wi : weights_)
        if (wi > 0.0) m = std::min(m, wi);
    return m;
}

QTable desirability(const QTable& q, Temperature tau) {
    if (!tau.positive()) throw ValidationError("desirability requires tau > 0");
    QTable z(q.n_states, q.n_actions);
    for (std::size_t i = 0; i < q.values.size(); ++i) {
        const double e = q.values[i] / tau.tau;
        if (e > 700.0)
            throw ValidationError("desirability overflow: Q/tau = " + std::to_string(e) +
                                  "; rescale or keep composition in log space");
        z.values[i] = std::exp(e);
    }
    return z;
}

QTable compose_or(const std::vector<QTable>& q_list, const WeightVector& w,
                  Temperature tau) {
    check_same_shape(q_list);
    if (!tau.positive()) throw ValidationError("compose_or requires tau > 0");
    if (w.size() != static_cast<int>(q_list.size()))
        throw ValidationError("compose_or: weight count does not match table count");

    QTable out(q_list[0].n_states, q_list[0].n_actions);
    const std::size_t n = out.values.size();
    for (std::size_t i = 0; i < n; ++i) {
        double m = -kInf;
        for (std::size_t k = 0; k < q_list.size(); ++k)
            if (w[static_cast<int>(k)] > 0.0) m = std::max(m, q_list[k].values[i]);
        double sum = 0.0;
        for (std::size_t k = 0; k < q_list.size(); ++k) {
            const double wk = w[static_cast<int>(k)];
            if (wk > 0.0) sum += wk * std::exp((q_list[k].values[i] - m) / tau.tau);
        }
        out.values[i] = m + tau.tau * std::log(sum);
    }
    return out;
}

std::vector<double> compose_or_reward(const std::vector<std::vector<double>>& r_list,
                                      const WeightVector& w, Temperature tau,
                                      const TabularMdp& base) {
    if (r_list.empty()) throw ValidationError("compose_or_reward: empty reward list");
    if (!tau.positive()) throw ValidationError("compose_or_reward requires tau > 0");
    if (w.size() != static_cast<int>(r_list.size()))
        throw ValidationError("compose_or_reward: weight count mismatch");
    const std::size_t n_pairs = static_cast<std::size_t>(base.n_states) * base.n_actions;
    for (const auto& r : r_list)
        if (r.size() != n_pairs)
            throw ValidationError("compose_or_reward: reward table shape mismatch");

    std::vector<double> out(n_pairs);
    for (int s = 0; s < base.n_states; ++s) {
        for (int a = 0; a < base.n_actions; ++a) {
            const std::size_t i = static_cast<std::size_t>(s) * base.n_actions + a;
            if (!base.absorbing[s]) {
                for (std::size_t k = 1; k < r_list.size(); ++k)
                    if (r_list[k][i] != r_list[0][i])
                        throw ValidationError("compose_or_reward: tasks 0 and " +
                                              std::to_string(k) +
                                              " disagree at non-absorbing state " +
                                              std::to_string(s) + " action " +
                                              std::to_string(a));
                out[i] = r_list[0][i];
                continue;
            }
            double m = -kInf;
            for (std::size_t k = 0; k < r_list.size(); ++k)
                if (w[static_cast<int>(k)] > 0.0) m = std::max(m, r_list[k][i]);
            double sum = 0.0;
            for (std::size_t k = 0; k < r_list.size(); ++k) {
                const double wk = w[static_cast<int>(k)];
                if (wk > 0.0) sum += wk * std::exp((r_list[k][i] - m) / tau.tau);
            }
            out[i] = m + tau.tau * std::log(sum);
        }
    }
    return out;
}

QTable compose_max(const std::vector<QTable>& q_list) {
    check_same_shape(q_list);
    QTable out = q_list[0];
    for (std::size_t k = 1; k < q_list.size(); ++k)
        for (std::size_t i = 0; i < out.values.size(); ++i)
            out.values[i] = std::max(out.values[i], q_list[k].values[i]);
    return out;
}

QTable compose_and_average(const std::vector<QTable>& q_list) {
    if (q_list.size() != 2)
        throw ValidationError("compose_and_average takes exactly two tables");
    check_same_shape(q_list);
    QTable out(q_list[0].n_states, q_list[0].n_actions);
    for (std::size_t i = 0; i < out.values.size(); ++i)
        out.values[i] = 0.5 * (q_list[0].values[i] + q_list[1].values[i]);
    return out;
}

double renyi_half(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw ValidationError("renyi_half: size mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) sum += std::sqrt(p[i] * q[i]);
    if (sum <= 0.0) return kInf;
    return std::min(-2.0 * std::log(sum), kInf);
}

namespace {

std::vector<double> policy_divergence(const TabularMdp& mdp, const StochasticPolicy& pi1,
                                      const StochasticPolicy& pi2) {
    std::vector<double> d(mdp.n_states, 0.0);
    for (int s = 0; s < mdp.n_states; ++s) {
        if (mdp.is_terminal(s)) continue;  // policies at the boundary are irrelevant
        std::span<const double> p1{pi1.probs.data() + static_cast<std::size_t>(s) * pi1.n_actions,
                                   static_cast<std::size_t>(pi1.n_actions)};
        std::span<const double> p2{pi2.probs.data() + static_cast<std::size_t>(s) * pi2.n_actions,
                                   static_cast<std::size_t>(pi2.n_actions)};
        d[s] = std::max(renyi_half(p1, p2), 0.0);
    }
    return d;
}

}  // namespace

namespace {

/// Normalised geometric mean of two policies; this is exactly the
/// Boltzmann policy of the averaged Q-function when the inputs are the
/// Boltzmann policies of the ingredients.
StochasticPolicy geometric_mean_policy(const StochasticPolicy& pi1,
                                       const StochasticPolicy& pi2) {
    StochasticPolicy out(pi1.n_states, pi1.n_actions);
    for (int s = 0; s < pi1.n_states; ++s) {
        double total = 0.0;
        for (int a = 0; a < pi1.n_actions; ++a) {
            out.at(s, a) = std::sqrt(pi1.at(s, a) * pi2.at(s, a));
            total += out.at(s, a);
        }
        for (int a = 0; a < pi1.n_actions; ++a)
            out.at(s, a) = total > 0.0 ? out.at(s, a) / total : 1.0 / pi1.n_actions;
    }
    return out;
}

/// Shared solver for both error bounds. A bound table of the form
///   B(s,a) = E_{s'~rho(s,a)}[ rate(s') + E_{a'~pi(s')} B(s',a') ]
/// (pinned to 0 at terminal states and with rate pinned to 0 there) has
/// the per-state mean m(s) = E_{a~pi(s)} B(s,a) satisfying an affine
/// system under the policy's state kernel. Solve that system exactly
/// when it is small and every rate is finite; fall back to fixed-point
/// iteration otherwise (infinite rates propagate to an infinite bound,
/// which the iteration represents faithfully).
QTable solve_bound(const TabularMdp& mdp, const StochasticPolicy& pi,
                   const std::vector<double>& rate, const SolveOptions& opts,
                   const char* who) {
    const int n = mdp.n_states;
    const bool finite_rates =
        std::all_of(rate.begin(), rate.end(), [](double r) { return std::isfinite(r); });

    auto assemble = [&](const std::vector<double>& mean) {
        QTable out(n, mdp.n_actions);
        for (int s = 0; s < n; ++s) {
            if (mdp.is_terminal(s)) continue;
            for (int a = 0; a < mdp.n_actions; ++a) {
                double acc = 0.0;
                for (const auto& [sn, p] : mdp.row(s, a)) acc += p * (rate[sn] + mean[sn]);
                out.at(s, a) = acc;
            }
        }
        return out;
    };

    if (finite_rates && n <= 2000) {
        // m(s) = sum_a pi(s,a) sum_{s'} p(s'|s,a) (rate(s') + m(s')),
        // m = 0 at terminal states: solve (I - P_pi) m = P_pi rate.
        Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n);
        Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
        for (int s = 0; s < n; ++s) {
            if (mdp.is_terminal(s)) continue;
            for (int a = 0; a < mdp.n_actions; ++a) {
                const double pa = pi.at(s, a);
                if (pa == 0.0) continue;
                for (const auto& [sn, p] : mdp.row(s, a)) {
                    b(s) += pa * p * rate[sn];
                    if (!mdp.is_terminal(sn)) A(s, sn) -= pa * p;
                }
            }
        }
        const Eigen::VectorXd m = A.partialPivLu().solve(b);
        std::vector<double> mean(n, 0.0);
        for (int s = 0; s < n; ++s)
            if (!mdp.is_terminal(s)) mean[s] = m(s);
        bool finite = true;
        for (double v : mean)
            if (!std::isfinite(v)) finite = false;
        if (finite) return assemble(mean);
        throw DivergenceError(std::string(who) + ": bound system is singular "
                              "(the averaged policy is improper)",
                              mean, 0);
    }

    return iterate_bound(
        QTable(n, mdp.n_actions), opts, who, [&](const QTable& cur) {
            std::vector<double> mean(n, 0.0);
            for (int s = 0; s < n; ++s) {
                if (mdp.is_terminal(s)) continue;
                for (int a = 0; a < mdp.n_actions; ++a)
                    mean[s] += pi.at(s, a) * cur.at(s, a);
            }
            return assemble(mean);
        });
}

}  // namespace

QTable and_bound_c(const TabularMdp& mdp, const StochasticPolicy& pi1,
                   const StochasticPolicy& pi2, Temperature tau,
                   const SolveOptions& opts) {
    if (!tau.positive()) throw ValidationError("and_bound_c requires tau > 0");
    if (pi1.n_states != mdp.n_states || pi2.n_states != mdp.n_states)
        throw ValidationError("and_bound_c: policy shape mismatch");

    // The gap Q_ave - Q* propagates one step as
    //   gap(s,a) <= E_{s'}[ (tau/2) D_half(pi1_{s'} || pi2_{s'})
    //                       + E_{a' ~ pi_ave(s')} gap(s', a') ],
    // because the averaged value splits into the log-sum-exp of Q_ave
    // plus tau/2 times the divergence, and the log-sum-exp difference is
    // bounded by its Boltzmann-weighted mean (Jensen). C* is the fixed
    // point, i.e. the pi_ave-evaluation of the divergence-rate reward.
    std::vector<double> rate = policy_divergence(mdp, pi1, pi2);
    for (double& r : rate) r *= 0.5 * tau.tau;
    return solve_bound(mdp, geometric_mean_policy(pi1, pi2), rate, opts, "and_bound_c");
}

QTable and_bound_f(const TabularMdp& mdp, const QTable& c_star,
                   const StochasticPolicy& pi_ave, Temperature tau,
                   const SolveOptions& opts) {
    if (!tau.positive()) throw ValidationError("and_bound_f requires tau > 0");
    if (c_star.n_states != mdp.n_states || pi_ave.n_states != mdp.n_states)
        throw ValidationError("and_bound_f: shape mismatch");

    // The evaluation gap Q* - Q_{pi_ave} propagates one step as
    //   gap(s,a) <= E_{s'} E_{a' ~ pi_ave(s')}[ C*(s', a') + gap(s', a') ]
    // (the optimal value exceeds the averaged policy's value by at most
    // the pi_ave-mean of the optimality gap, which C* dominates), so F*
    // is the pi_ave-evaluation of the C*-mean rate.
    std::vector<double> rate(mdp.n_states, 0.0);
    for (int s = 0; s < mdp.n_states; ++s) {
        if (mdp.is_terminal(s)) continue;
        for (int a = 0; a < mdp.n_actions; ++a)
            rate[s] += pi_ave.at(s, a) * c_star.at(s, a);
    }
    return solve_bound(mdp, pi_ave, rate, opts, "and_bound_f");
}

AndBounds compute_and_bounds(const TabularMdp& mdp, const StochasticPolicy& pi1,
                             const StochasticPolicy& pi2, const StochasticPolicy& pi_ave,
                             Temperature tau, const SolveOptions& opts) {
    AndBounds bounds;
    bounds.divergence = policy_divergence(mdp, pi1, pi2);
    bounds.unbounded = std::any_of(bounds.divergence.begin(), bounds.divergence.end(),
                                   [](double x) { return std::isinf(x); });
    bounds.c_star = and_bound_c(mdp, pi1, pi2, tau, opts);
    bounds.f_star = and_bound_f(mdp, bounds.c_star, pi_ave, tau, opts);
    return bounds;
}

double desirability_residual(const TaskLibrary& library,
                             const std::vector<double>& composite_rewards,
                             const QTable& z) {
    const TabularMdp& base = library.base;
    if (!base.deterministic)
        throw ValidationError("desirability_residual requires deterministic dynamics");
    const std::size_t n_pairs = static_cast<std::size_t>(base.n_states) * base.n_actions;
    if (composite_rewards.size() != n_pairs || z.values.size() != n_pairs)
        throw ValidationError("desirability_residual: shape mismatch");
    for (double zi : z.values)
        if (!(zi > 0.0)) throw ValidationError("desirability_residual: nonpositive z entry");

    const double tau = library.temperature;
    double residual = 0.0;
    for (int s = 0; s < base.n_states; ++s) {
        if (s == base.virtual_goal) continue;
        for (int a = 0; a < base.n_actions; ++a) {
            const int sn = base.next_state(s, a);
            double inner = 1.0;  // Z at the virtual goal is 1
            if (sn != base.virtual_goal) {
                inner = 0.0;
                for (int an = 0; an < base.n_actions; ++an)
                    inner += library.reference.at(sn, an) * z.at(sn, an);
            }
            const std::size_t i = static_cast<std::size_t>(s) * base.n_actions + a;
            const double uz = std::exp(composite_rewards[i] / tau) * inner;
            residual = std::max(residual, std::abs(uz - z.values[i]));
        }
    }
    return residual;
}

}  // namespace softcompose
