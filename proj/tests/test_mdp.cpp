#include <cmath>
#include <limits>

#include <doctest.h>

#include "softcompose/mdp.hpp"
#include "test_support.hpp"

using namespace softcompose;

TEST_CASE("validate accepts the two-state model") {
    CHECK(validate(two_state_mdp()).empty());
}

TEST_CASE("validate flags a row that does not sum to 1") {
    TabularMdp mdp = two_state_mdp();
    mdp.row(0, kActionLeft) = {{0, 0.9}};
    const auto report = validate(mdp);
    REQUIRE(report.size() == 1);
    CHECK(report[0].state == 0);
    CHECK(report[0].action == kActionLeft);
    CHECK(report[0].message.find("sums to") != std::string::npos);
}

TEST_CASE("validate flags nonzero reward at the virtual goal") {
    TabularMdp mdp = two_state_mdp();
    mdp.reward(1, 0) = 0.5;
    const auto report = validate(mdp);
    REQUIRE(report.size() == 1);
    CHECK(report[0].state == 1);
    CHECK(report[0].message.find("virtual goal") != std::string::npos);
}

TEST_CASE("validate flags absorbing states that do not reach the virtual goal") {
    TabularMdp mdp = two_state_mdp();
    mdp.absorbing[0] = 1;  // state 0 self-loops under Left
    const auto report = validate(mdp);
    CHECK(!report.empty());
}

TEST_CASE("validate flags non-finite rewards and bad targets") {
    TabularMdp mdp = two_state_mdp();
    mdp.reward(0, kActionLeft) = std::numeric_limits<double>::infinity();
    mdp.row(0, kActionRight) = {{7, 1.0}};
    const auto report = validate(mdp);
    CHECK(report.size() >= 2);
}

TEST_CASE("validate is idempotent") {
    TabularMdp mdp = two_state_mdp();
    mdp.row(0, kActionLeft) = {{0, 0.9}};
    const auto first = validate(mdp);
    const auto second = validate(mdp);
    REQUIRE(first.size() == second.size());
    for (std::size_t i = 0; i < first.size(); ++i) {
        CHECK(first[i].message == second[i].message);
        CHECK(first[i].state == second[i].state);
        CHECK(first[i].action == second[i].action);
    }
}

TEST_CASE("library validation enforces reward agreement off the absorbing set") {
    testsupport::RandomLibrary rl = testsupport::random_gridworld_library(3, 1.0);
    CHECK(validate(rl.library).empty());

    // Perturb a non-absorbing entry of one task only.
    TaskLibrary broken = rl.library;
    for (int s = 0; s < broken.base.n_states; ++s) {
        if (broken.base.is_terminal(s)) continue;
        broken.task_rewards[1][static_cast<std::size_t>(s) * broken.base.n_actions] += 0.5;
        break;
    }
    CHECK(!validate(broken).empty());
}

TEST_CASE("library validation rejects stochastic base dynamics") {
    TaskLibrary lib;
    lib.base = testsupport::random_proper_mdp(11);
    lib.reference = StochasticPolicy::uniform(lib.base.n_states, lib.base.n_actions);
    lib.task_rewards.push_back(lib.base.rewards);
    lib.temperature = 1.0;
    bool flagged = false;
    for (const Violation& v : validate(lib))
        if (v.message.find("deterministic") != std::string::npos) flagged = true;
    CHECK(flagged);
}

TEST_CASE("kl divergence of a distribution with itself is zero") {
    const std::vector<double> p = {0.5, 0.5};
    CHECK(kl_divergence(p, p) == doctest::Approx(0.0));
}

TEST_CASE("kl divergence of a point mass against uniform is log 2") {
    const std::vector<double> p = {1.0, 0.0};
    const std::vector<double> q = {0.5, 0.5};
    CHECK(kl_divergence(p, q) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("kl divergence rejects support violations") {
    const std::vector<double> p = {0.5, 0.5};
    const std::vector<double> q = {1.0, 0.0};
    CHECK_THROWS_AS((void)kl_divergence(p, q), ValidationError);
}

TEST_CASE("kl divergence is nonnegative with equality only at p = q") {
    SplitMix64 rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        const auto p = testsupport::random_distribution(rng, 4);
        const auto q = testsupport::random_distribution(rng, 4);
        const double kl = kl_divergence(p, q);
        CHECK(kl >= -1e-15);
        if (sup_norm_diff(p, q) > 1e-3) CHECK(kl > 0.0);
        CHECK(kl_divergence(p, p) == doctest::Approx(0.0));
    }
}

TEST_CASE("always-Right is proper on the two-state model") {
    const TabularMdp mdp = two_state_mdp();
    const auto pi = StochasticPolicy::deterministic(2, 2, kActionRight);
    const ProperCheck pc = is_proper(pi, mdp, 2);
    CHECK(pc.proper);
    CHECK(pc.residual_mass == doctest::Approx(0.0));
}

TEST_CASE("always-Left never reaches the goal") {
    const TabularMdp mdp = two_state_mdp();
    const auto pi = StochasticPolicy::deterministic(2, 2, kActionLeft);
    const ProperCheck pc = is_proper(pi, mdp, 50);
    CHECK(!pc.proper);
    CHECK(pc.residual_mass == doctest::Approx(1.0));
}

TEST_CASE("uniform policy escapes at geometric rate") {
    const TabularMdp mdp = two_state_mdp();
    const auto pi = StochasticPolicy::uniform(2, 2);
    const ProperCheck pc = is_proper(pi, mdp, 40);
    CHECK(pc.proper);
    CHECK(pc.residual_mass == doctest::Approx(std::pow(0.5, 40)).epsilon(1e-12));
}

TEST_CASE("is_proper rejects a zero horizon") {
    const TabularMdp mdp = two_state_mdp();
    CHECK_THROWS_AS((void)is_proper(StochasticPolicy::uniform(2, 2), mdp, 0),
                    ValidationError);
}

TEST_CASE("proper-check residual is nonincreasing in the horizon") {
    const TabularMdp mdp = testsupport::random_proper_mdp(5);
    const auto pi = testsupport::random_policy(6, mdp.n_states, mdp.n_actions);
    double prev = 1.0;
    for (int horizon : {1, 2, 4, 8, 16, 32}) {
        const double residual = is_proper(pi, mdp, horizon).residual_mass;
        CHECK(residual <= prev + 1e-15);
        prev = residual;
    }
}

TEST_CASE("composite assembly reproduces a single-task model") {
    const TabularMdp task = two_state_mdp();
    TaskLibrary lib;
    lib.base = task;
    lib.base.rewards.assign(task.rewards.size(), 0.0);
    lib.reference = StochasticPolicy::uniform(2, 2);
    lib.task_rewards.push_back(task.rewards);
    const TabularMdp rebuilt = build_composite_reward_mdp(lib, lib.task_rewards[0]);
    CHECK(validate(rebuilt).empty());
    CHECK(rebuilt.rewards == task.rewards);
    CHECK(rebuilt.transitions == task.transitions);
}

TEST_CASE("composite assembly rejects mismatched reward shapes") {
    TaskLibrary lib;
    lib.base = two_state_mdp();
    lib.reference = StochasticPolicy::uniform(2, 2);
    lib.task_rewards.push_back(lib.base.rewards);
    CHECK_THROWS_AS((void)build_composite_reward_mdp(lib, std::vector<double>(3, 0.0)),
                    ValidationError);
}

TEST_CASE("two-state model structure matches its construction") {
    const TabularMdp mdp = two_state_mdp();
    CHECK(mdp.n_states == 2);
    CHECK(mdp.n_actions == 2);
    CHECK(mdp.deterministic);
    CHECK(mdp.virtual_goal == 1);
    CHECK(mdp.next_state(0, kActionLeft) == 0);
    CHECK(mdp.next_state(0, kActionRight) == 1);
    CHECK(mdp.reward(0, kActionLeft) == -1.0);
    CHECK(mdp.reward(0, kActionRight) == -1.0);
}

TEST_CASE("random proper generator emits valid models") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        const TabularMdp mdp = testsupport::random_proper_mdp(seed);
        CHECK(validate(mdp).empty());
        const auto pi = testsupport::random_policy(seed + 100, mdp.n_states, mdp.n_actions);
        CHECK(is_proper(pi, mdp, 10 * mdp.n_states).proper);
    }
}
