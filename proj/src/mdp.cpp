#include "softcompose/mdp.hpp"

#include <cmath>
#include <cstdio>

namespace softcompose {

namespace {

constexpr double kRowSumTol = 1e-12;

bool row_is_point_mass_on(const TransitionRow& row, int target) {
    double mass = 0.0;
    for (const auto& [next, p] : row) {
        if (next == target) mass += p;
    }
    return std::abs(mass - 1.0) <= kRowSumTol;
}

}  // namespace

StochasticPolicy StochasticPolicy::uniform(int ns, int na) {
    StochasticPolicy pi(ns, na, 1.0 / na);
    return pi;
}

StochasticPolicy StochasticPolicy::deterministic(int ns, int na, int action) {
    if (action < 0 || action >= na) throw ValidationError("action index out of range");
    StochasticPolicy pi(ns, na, 0.0);
    for (int s = 0; s < ns; ++s) pi.at(s, action) = 1.0;
    return pi;
}

int TabularMdp::next_state(int s, int a) const {
    if (!deterministic) throw ValidationError("next_state requires a deterministic kernel");
    const TransitionRow& r = row(s, a);
    if (r.size() != 1) throw ValidationError("deterministic row is not a point mass");
    return r[0].first;
}

std::vector<Violation> validate(const TabularMdp& mdp) {
    std::vector<Violation> report;
    auto add = [&report](std::string msg, int s, int a) {
        report.push_back({std::move(msg), s, a});
    };

    if (mdp.n_states <= 0 || mdp.n_actions <= 0) {
        add("state and action counts must be positive", -1, -1);
        return report;
    }
    if (mdp.virtual_goal < 0 || mdp.virtual_goal >= mdp.n_states) {
        add("virtual_goal index out of range", mdp.virtual_goal, -1);
        return report;
    }
    const std::size_t n_pairs = static_cast<std::size_t>(mdp.n_states) * mdp.n_actions;
    if (mdp.transitions.size() != n_pairs || mdp.rewards.size() != n_pairs ||
        mdp.absorbing.size() != static_cast<std::size_t>(mdp.n_states)) {
        add("table sizes inconsistent with n_states/n_actions", -1, -1);
        return report;
    }

    for (int s = 0; s < mdp.n_states; ++s) {
        for (int a = 0; a < mdp.n_actions; ++a) {
            const TransitionRow& row = mdp.row(s, a);
            double sum = 0.0;
            for (const auto& [next, p] : row) {
                if (next < 0 || next >= mdp.n_states)
                    add("transition target out of range", s, a);
                if (p < 0.0)
                    add("negative transition probability " + std::to_string(p), s, a);
                sum += p;
            }
            if (std::abs(sum - 1.0) > kRowSumTol)
                add("transition row sums to " + std::to_string(sum) + " rather than 1", s, a);
            if (mdp.deterministic && row.size() != 1)
                add("deterministic flag set but row is not a point mass", s, a);

            if ((mdp.absorbing[s] || s == mdp.virtual_goal) &&
                !row_is_point_mass_on(row, mdp.virtual_goal))
                add("absorbing state does not transition to virtual goal", s, a);

            const double r = mdp.reward(s, a);
            if (!std::isfinite(r)) add("non-finite reward", s, a);
            if (s == mdp.virtual_goal && r != 0.0)
                add("reward at virtual goal is " + std::to_string(r) + " rather than 0", s, a);
        }
    }
    return report;
}

std::vector<Violation> validate(const TaskLibrary& library) {
    std::vector<Violation> report = validate(library.base);
    auto add = [&report](std::string msg, int s, int a) {
        report.push_back({std::move(msg), s, a});
    };

    if (!library.base.deterministic)
        add("library base dynamics must be deterministic", -1, -1);
    if (!(library.temperature > 0.0) || !std::isfinite(library.temperature))
        add("library temperature must be positive and finite", -1, -1);
    if (library.task_rewards.empty()) add("library holds no tasks", -1, -1);

    const std::size_t n_pairs =
        static_cast<std::size_t>(library.base.n_states) * library.base.n_actions;
    for (std::size_t k = 0; k < library.task_rewards.size(); ++k) {
        if (library.task_rewards[k].size() != n_pairs) {
            add("task " + std::to_string(k) + " reward table has wrong shape", -1, -1);
            return report;
        }
    }

    // Rewards may differ only at (s, a) with s in the absorbing set.
    const int na = library.base.n_actions;
    for (int s = 0; s < library.base.n_states; ++s) {
        if (library.base.absorbing[s]) continue;
        for (int a = 0; a < na; ++a) {
            const std::size_t idx = static_cast<std::size_t>(s) * na + a;
            const double r0 = library.task_rewards[0][idx];
            for (std::size_t k = 1; k < library.task_rewards.size(); ++k) {
                if (library.task_rewards[k][idx] != r0) {
                    add("tasks 0 and " + std::to_string(k) + " disagree off the absorbing set",
                        s, a);
                    break;
                }
            }
        }
    }

    if (library.reference.n_states != library.base.n_states ||
        library.reference.n_actions != library.base.n_actions) {
        add("reference policy shape does not match base", -1, -1);
        return report;
    }
    for (int s = 0; s < library.base.n_states; ++s) {
        double sum = 0.0;
        for (int a = 0; a < na; ++a) {
            const double p = library.reference.at(s, a);
            if (p < 0.0) add("negative reference probability", s, a);
            sum += p;
        }
        if (std::abs(sum - 1.0) > kRowSumTol)
            add("reference row sums to " + std::to_string(sum) + " rather than 1", s, -1);
    }
    return report;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw ValidationError("kl_divergence: size mismatch");
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] == 0.0) continue;
        if (q[i] <= 0.0)
            throw ValidationError("kl_divergence undefined: p[" + std::to_string(i) + "] = " +
                                  std::to_string(p[i]) + " but q[" + std::to_string(i) +
                                  "] = 0");
        kl += p[i] * std::log(p[i] / q[i]);
    }
    return kl;
}

ProperCheck is_proper(const StochasticPolicy& policy, const TabularMdp& mdp, int horizon) {
    if (horizon <= 0) throw ValidationError("is_proper: horizon must be positive");
    if (policy.n_states != mdp.n_states || policy.n_actions != mdp.n_actions)
        throw ValidationError("is_proper: policy shape does not match mdp");

    const int n = mdp.n_states;
    double worst = 0.0;
    std::vector<double> occ(n), next(n);
    for (int start = 0; start < n; ++start) {
        std::fill(occ.begin(), occ.end(), 0.0);
        occ[start] = 1.0;
        for (int t = 0; t < horizon; ++t) {
            std::fill(next.begin(), next.end(), 0.0);
            for (int s = 0; s < n; ++s) {
                if (occ[s] == 0.0) continue;
                for (int a = 0; a < mdp.n_actions; ++a) {
                    const double pa = policy.at(s, a);
                    if (pa == 0.0) continue;
                    for (const auto& [sn, p] : mdp.row(s, a)) next[sn] += occ[s] * pa * p;
                }
            }
            occ.swap(next);
        }
        double outside = 0.0;
        for (int s = 0; s < n; ++s)
            if (!mdp.is_terminal(s)) outside += occ[s];
        worst = std::max(worst, outside);
    }

    // On a finite state space properness is structural: the residual decays
    // geometrically iff every state reaches the absorbing set with positive
    // probability through the support of the policy. A thresholded residual
    // would misclassify slowly escaping but proper policies, so decide by
    // backward reachability instead.
    std::vector<char> reaches(n, 0);
    for (int s = 0; s < n; ++s)
        if (mdp.is_terminal(s)) reaches[s] = 1;
    bool changed = true;
    while (changed) {
        changed = false;
        for (int s = 0; s < n; ++s) {
            if (reaches[s]) continue;
            for (int a = 0; a < mdp.n_actions && !reaches[s]; ++a) {
                if (policy.at(s, a) == 0.0) continue;
                for (const auto& [sn, p] : mdp.row(s, a)) {
                    if (p > 0.0 && reaches[sn]) {
                        reaches[s] = 1;
                        changed = true;
                        break;
                    }
                }
            }
        }
    }
    bool proper = true;
    for (int s = 0; s < n; ++s)
        if (!reaches[s]) proper = false;
    return {proper, worst};
}

TabularMdp build_composite_reward_mdp(const TaskLibrary& library,
                                      const std::vector<double>& rewards) {
    const std::size_t n_pairs =
        static_cast<std::size_t>(library.base.n_states) * library.base.n_actions;
    if (rewards.size() != n_pairs)
        throw ValidationError("build_composite_reward_mdp: reward table shape mismatch");
    TabularMdp mdp = library.base;
    mdp.rewards = rewards;
    return mdp;
}

TabularMdp two_state_mdp() {
    TabularMdp mdp;
    mdp.n_states = 2;
    mdp.n_actions = 2;
    mdp.deterministic = true;
    mdp.virtual_goal = 1;
    mdp.absorbing = {0, 0};
    mdp.transitions.resize(4);
    mdp.rewards.assign(4, 0.0);
    mdp.row(0, kActionLeft) = {{0, 1.0}};
    mdp.row(0, kActionRight) = {{1, 1.0}};
    mdp.row(1, 0) = {{1, 1.0}};
    mdp.row(1, 1) = {{1, 1.0}};
    mdp.reward(0, kActionLeft) = -1.0;
    mdp.reward(0, kActionRight) = -1.0;
    return mdp;
}

double sup_norm_diff(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ValidationError("sup_norm_diff: size mismatch");
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

}  // namespace softcompose
