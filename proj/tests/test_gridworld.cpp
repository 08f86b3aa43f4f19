#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "softcompose/compose.hpp"
#include "softcompose/gridworld.hpp"
#include "test_support.hpp"

using namespace softcompose;
using namespace softcompose::grid;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<Item> six_item_layout() {
    // 5x5 open room with one item per shape/color pair.
    return {
        {Shape::square, Color::blue, 0, 0},   {Shape::square, Color::beige, 4, 0},
        {Shape::square, Color::purple, 0, 4}, {Shape::circle, Color::blue, 4, 4},
        {Shape::circle, Color::beige, 2, 0},  {Shape::circle, Color::purple, 2, 4},
    };
}

}  // namespace

TEST_CASE("task names parse to predicates") {
    const GridTask purple = GridTask::parse("Purple");
    CHECK(purple.color == Color::purple);
    CHECK(!purple.shape.has_value());
    const GridTask bs = GridTask::parse("BeigeSquare");
    CHECK(bs.color == Color::beige);
    CHECK(bs.shape == Shape::square);
    CHECK_THROWS_AS((void)GridTask::parse("Up"), ValidationError);
    CHECK(purple.matches({Shape::circle, Color::purple, 1, 1}));
    CHECK(!purple.matches({Shape::circle, Color::blue, 1, 1}));
}

TEST_CASE("geometry construction validates walls and connectivity") {
    CHECK_THROWS_AS((void)GridGeometry::build({0, 3, {}, 0}), ValidationError);
    CHECK_THROWS_AS((void)GridGeometry::build({3, 3, {{5, 0}}, 0}), ValidationError);
    // A full wall column splits the room.
    CHECK_THROWS_AS((void)GridGeometry::build({3, 3, {{1, 0}, {1, 1}, {1, 2}}, 0}),
                    ValidationError);
    const auto geom = GridGeometry::build({3, 3, {{1, 1}}, 0});
    CHECK(geom.n_cells == 8);
    CHECK(geom.state_of_cell[geom.cell(1, 1)] == -1);
}

TEST_CASE("corridor environment scores 0.8 two moves from the goal") {
    const auto geom = testsupport::corridor(4);
    const std::vector<Item> items = {{Shape::square, Color::blue, 3, 0}};
    const TabularMdp mdp = build_mdp(geom, items, GridTask::parse("Blue"));
    CHECK(validate(mdp).empty());
    const SolveResult solved = standard_value_iteration(mdp);
    CHECK(solved.value[1] == doctest::Approx(0.8).epsilon(1e-9));
}

TEST_CASE("tasks that match no item are rejected") {
    const auto geom = testsupport::corridor(4);
    const std::vector<Item> items = {{Shape::square, Color::blue, 3, 0}};
    CHECK_THROWS_AS((void)build_mdp(geom, items, GridTask::parse("Purple")),
                    ValidationError);
}

TEST_CASE("the Purple task has two goal cells in the full layout") {
    const auto geom = GridGeometry::build({5, 5, {}, 0});
    const TabularMdp mdp = build_mdp(geom, six_item_layout(), GridTask::parse("Purple"));
    int n_goals = 0;
    for (char g : mdp.absorbing) n_goals += g;
    CHECK(n_goals == 2);
    CHECK(validate(mdp).empty());
}

TEST_CASE("steps bump into walls, collect on goals, and move otherwise") {
    const auto geom = GridGeometry::build({3, 3, {{1, 1}}, 0});
    const std::vector<Item> items = {{Shape::circle, Color::blue, 2, 2}};
    const TabularMdp mdp = build_mdp(geom, items, GridTask::parse("Blue"));

    const int center_left = geom.state_of_cell[geom.cell(0, 1)];
    const StepOutcome bump = step(mdp, center_left, 2);  // east into the wall
    CHECK(bump.next_state == center_left);
    CHECK(bump.reward == doctest::Approx(kStepReward));
    CHECK(!bump.done);

    const int goal = geom.state_of_cell[geom.cell(2, 2)];
    const StepOutcome collect = step(mdp, goal, 0);
    CHECK(collect.next_state == mdp.virtual_goal);
    CHECK(collect.reward == doctest::Approx(kGoalReward));
    CHECK(collect.done);

    const int origin = geom.state_of_cell[geom.cell(0, 0)];
    const StepOutcome move = step(mdp, origin, 1);  // south
    CHECK(move.next_state == geom.state_of_cell[geom.cell(0, 1)]);
    CHECK(move.reward == doctest::Approx(kStepReward));
    CHECK(!move.done);

    CHECK_THROWS_AS((void)step(mdp, origin, 9), ValidationError);
}

TEST_CASE("greedy rollouts on the corridor take the shortest path") {
    const TabularMdp mdp = testsupport::corridor_mdp(4);
    const StochasticPolicy greedy = greedy_policy(standard_value_iteration(mdp).q);
    const Trajectory traj = rollout(mdp, greedy, 1, 100, 5);
    CHECK(traj.terminal);
    CHECK(traj.steps.size() == 3);
    CHECK(traj.total_return == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(traj.final_state == mdp.virtual_goal);
}

TEST_CASE("a zero-step budget yields an empty trajectory") {
    const TabularMdp mdp = testsupport::corridor_mdp(4);
    const StochasticPolicy uniform = StochasticPolicy::uniform(mdp.n_states, mdp.n_actions);
    const Trajectory traj = rollout(mdp, uniform, 0, 0, 5);
    CHECK(traj.steps.empty());
    CHECK(!traj.terminal);
    CHECK(traj.total_return == 0.0);
}

TEST_CASE("identical seeds reproduce identical trajectories") {
    const TabularMdp mdp = testsupport::corridor_mdp(6);
    const StochasticPolicy uniform = StochasticPolicy::uniform(mdp.n_states, mdp.n_actions);
    const Trajectory a = rollout(mdp, uniform, 0, 50, 99);
    const Trajectory b = rollout(mdp, uniform, 0, 50, 99);
    REQUIRE(a.steps.size() == b.steps.size());
    for (std::size_t i = 0; i < a.steps.size(); ++i) {
        CHECK(a.steps[i].state == b.steps[i].state);
        CHECK(a.steps[i].action == b.steps[i].action);
    }
    const Trajectory c = rollout(mdp, uniform, 0, 50, 100);
    const bool same = a.steps.size() == c.steps.size() && [&] {
        for (std::size_t i = 0; i < a.steps.size(); ++i)
            if (a.steps[i].action != c.steps[i].action) return false;
        return true;
    }();
    CHECK(!same);
}

TEST_CASE("single-item temporal runs match plain greedy rollouts") {
    const auto geom = testsupport::corridor(5);
    const std::vector<Item> items = {{Shape::circle, Color::purple, 4, 0}};
    const Trajectory temporal = rollout_temporal(geom, items, Temperature(0.0), 0, 3);
    const TabularMdp task = build_single_goal_mdp(geom, 4);
    const StochasticPolicy greedy = greedy_policy(standard_value_iteration(task).q);
    const Trajectory plain = rollout(task, greedy, 0, 100, 3);
    CHECK(temporal.terminal);
    CHECK(temporal.total_return == doctest::Approx(plain.total_return).epsilon(1e-12));
    CHECK(temporal.steps.size() == plain.steps.size());
}

TEST_CASE("temporal collection proceeds nearest-first on the corridor") {
    const auto geom = testsupport::corridor(7);
    const std::vector<Item> items = {
        {Shape::square, Color::blue, 1, 0},
        {Shape::circle, Color::beige, 2, 0},
        {Shape::square, Color::purple, 3, 0},
    };
    const Trajectory traj = rollout_temporal(geom, items, Temperature(0.0), 0, 17);
    CHECK(traj.terminal);
    // From x = 0: one move, collect, repeat. Collections show up as +1 steps.
    std::vector<int> collect_cells;
    for (const Step& st : traj.steps)
        if (st.reward == kGoalReward) collect_cells.push_back(st.state);
    CHECK(collect_cells == std::vector<int>{1, 2, 3});
    CHECK(traj.total_return == doctest::Approx(3.0 - 0.3).epsilon(1e-12));
}

TEST_CASE("temporal runs collect every item on the full layout") {
    const auto geom = GridGeometry::build({5, 5, {}, 0});
    const std::vector<Item> items = six_item_layout();
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Trajectory traj =
            rollout_temporal(geom, items, Temperature(0.0), static_cast<int>(seed * 3), seed);
        CHECK(traj.terminal);
        CHECK(static_cast<int>(traj.steps.size()) <= 5 * 5 * 6);
    }
}

TEST_CASE("temporal returns never beat the exact collect-all optimum") {
    const auto geom = GridGeometry::build({4, 4, {}, 0});
    const std::vector<Item> items = {
        {Shape::square, Color::blue, 3, 0},
        {Shape::circle, Color::purple, 0, 3},
        {Shape::square, Color::beige, 3, 3},
    };
    const std::vector<double> optimal = collect_all_optimal_returns(geom, items);
    for (int start = 0; start < geom.n_cells; ++start) {
        const Trajectory traj = rollout_temporal(geom, items, Temperature(0.0), start, 1);
        CHECK(traj.terminal);
        CHECK(traj.total_return <= optimal[start] + 1e-9);
    }
}

TEST_CASE("bfs distances follow the grid metric around walls") {
    const auto geom = GridGeometry::build({3, 3, {{1, 1}}, 0});
    const std::vector<int> dist = bfs_distances(geom, {geom.cell(0, 0)});
    CHECK(dist[geom.state_of_cell[geom.cell(0, 0)]] == 0);
    CHECK(dist[geom.state_of_cell[geom.cell(2, 0)]] == 2);
    CHECK(dist[geom.state_of_cell[geom.cell(2, 2)]] == 4);  // around the center wall
}

TEST_CASE("max-composed policies reach the nearest target in BFS time") {
    const auto geom = GridGeometry::build({5, 5, {{2, 1}, {2, 2}, {2, 3}}, 0});
    const std::vector<Item> items = six_item_layout();
    const TabularMdp purple = build_mdp(geom, items, GridTask::parse("Purple"));
    const TabularMdp blue = build_mdp(geom, items, GridTask::parse("Blue"));
    const QTable composed = compose_max(
        {standard_value_iteration(purple).q, standard_value_iteration(blue).q});
    const StochasticPolicy greedy = greedy_policy(composed);

    const TabularMdp either = build_mdp(geom, items, [] {
        GridTask t;
        t.color = Color::purple;
        t.name = "Purple";
        return t;
    }());
    std::vector<int> targets;
    for (const Item& it : items)
        if (it.color == Color::purple || it.color == Color::blue)
            targets.push_back(geom.cell(it.x, it.y));
    const std::vector<int> dist = bfs_distances(geom, targets);

    // Union environment: both purple and blue cells terminate.
    TabularMdp env = purple;
    for (const Item& it : items) {
        if (it.color != Color::blue) continue;
        const int s = geom.state_of_cell[geom.cell(it.x, it.y)];
        env.absorbing[s] = 1;
        for (int a = 0; a < env.n_actions; ++a) {
            env.row(s, a) = {{env.virtual_goal, 1.0}};
            env.reward(s, a) = kGoalReward;
        }
    }
    for (int s = 0; s < geom.n_cells; ++s) {
        if (env.absorbing[s]) continue;
        const Trajectory traj = rollout(env, greedy, s, 200, 0);
        CHECK(traj.terminal);
        // Moves to the collected cell plus the collection step itself.
        CHECK(static_cast<int>(traj.steps.size()) == dist[s] + 1);
    }
}

TEST_CASE("union-task values dominate single-task values at zero temperature") {
    const auto geom = GridGeometry::build({5, 5, {}, 0});
    const std::vector<Item> items = six_item_layout();
    const TabularMdp purple = build_mdp(geom, items, GridTask::parse("Purple"));
    const TabularMdp blue = build_mdp(geom, items, GridTask::parse("Blue"));
    TabularMdp both = purple;
    for (const Item& it : items) {
        if (it.color != Color::blue) continue;
        const int s = geom.state_of_cell[geom.cell(it.x, it.y)];
        both.absorbing[s] = 1;
        for (int a = 0; a < both.n_actions; ++a) {
            both.row(s, a) = {{both.virtual_goal, 1.0}};
            both.reward(s, a) = kGoalReward;
        }
    }
    const ValueTable v_or = standard_value_iteration(both).value;
    const ValueTable v_p = standard_value_iteration(purple).value;
    const ValueTable v_b = standard_value_iteration(blue).value;
    for (int s = 0; s < both.n_states; ++s)
        CHECK(v_or[s] >= std::max(v_p[s], v_b[s]) - 1e-9);
}

TEST_CASE("constant value tables render mid-gray with a raw sidecar") {
    const auto geom = GridGeometry::build({3, 2, {{1, 0}}, 0});
    const std::string path = temp_path("softcompose_flat.pgm");
    render_value_heatmap(ValueTable(geom.n_cells, 2.5), geom, path);
    const std::string pgm = slurp(path);
    CHECK(pgm.rfind("P2\n3 2\n255\n", 0) == 0);
    CHECK(pgm.find("128") != std::string::npos);
    // The wall pixel renders 0.
    std::istringstream in(pgm.substr(pgm.find("255\n") + 4));
    int px[6];
    for (int& p : px) in >> p;
    CHECK(px[1] == 0);
    for (int i : {0, 2, 3, 4, 5}) CHECK(px[i] == 128);
    const std::string csv = slurp(path + ".csv");
    CHECK(csv.rfind("x,y,value\n", 0) == 0);
    CHECK(csv.find("0,0,2.5") != std::string::npos);
    CHECK(csv.find("\n1,0,") == std::string::npos);  // wall has no raw value
}

TEST_CASE("corridor heatmaps brighten toward the goal") {
    const auto geom = testsupport::corridor(5);
    const TabularMdp mdp = grid::build_single_goal_mdp(geom, 4);
    const ValueTable v = standard_value_iteration(mdp).value;
    const std::string path = temp_path("softcompose_corridor.pgm");
    render_value_heatmap(v, geom, path);
    std::istringstream in(slurp(path).substr(slurp(path).find("255\n") + 4));
    int prev = -1;
    for (int x = 0; x < 5; ++x) {
        int p;
        in >> p;
        CHECK(p > prev);
        prev = p;
    }
    CHECK(prev == 255);
}

TEST_CASE("composite value maps peak at every target cell") {
    const auto geom = GridGeometry::build({5, 5, {}, 0});
    const std::vector<Item> items = six_item_layout();
    const TabularMdp purple = build_mdp(geom, items, GridTask::parse("Purple"));
    const TabularMdp blue = build_mdp(geom, items, GridTask::parse("Blue"));
    const ValueTable v = value_from_q_max(compose_max(
        {standard_value_iteration(purple).q, standard_value_iteration(blue).q}));
    for (const Item& it : items) {
        if (it.color == Color::beige) continue;
        const int s = geom.state_of_cell[geom.cell(it.x, it.y)];
        for (int a = 0; a < kNumActions; ++a) {
            const int nx = it.x + (a == 2 ? 1 : a == 3 ? -1 : 0);
            const int ny = it.y + (a == 1 ? 1 : a == 0 ? -1 : 0);
            if (nx < 0 || nx >= 5 || ny < 0 || ny >= 5) continue;
            CHECK(v[s] >= v[geom.state_of_cell[geom.cell(nx, ny)]]);
        }
    }
}

TEST_CASE("trajectory overlays mark exactly the visited cells") {
    const auto geom = testsupport::corridor(5);
    const TabularMdp mdp = grid::build_single_goal_mdp(geom, 4);
    const StochasticPolicy greedy = greedy_policy(standard_value_iteration(mdp).q);
    const std::vector<Item> items = {{Shape::circle, Color::purple, 4, 0}};

    Trajectory empty;
    empty.final_state = geom.n_cells;  // nothing visited
    const std::string empty_path = temp_path("softcompose_empty.ppm");
    render_trajectory(empty, geom, items, empty_path);
    std::string ppm = slurp(empty_path);
    CHECK(ppm.rfind("P3\n5 1\n255\n", 0) == 0);
    CHECK(ppm.find("255 80 80") == std::string::npos);

    const Trajectory traj = rollout(mdp, greedy, 0, 100, 1);
    REQUIRE(traj.steps.size() == 5);  // four moves plus the collection
    const std::string path = temp_path("softcompose_traj.ppm");
    render_trajectory(traj, geom, items, path);
    ppm = slurp(path);
    int marked = 0;
    for (std::size_t pos = ppm.find("255 80 80"); pos != std::string::npos;
         pos = ppm.find("255 80 80", pos + 1))
        ++marked;
    CHECK(marked == 5);
}

TEST_CASE("seeded union rollouts end on a matching cell") {
    const auto geom = GridGeometry::build({5, 5, {}, 0});
    const std::vector<Item> items = six_item_layout();
    TabularMdp env = build_mdp(geom, items, GridTask::parse("Purple"));
    for (const Item& it : items) {
        if (it.color != Color::blue) continue;
        const int s = geom.state_of_cell[geom.cell(it.x, it.y)];
        env.absorbing[s] = 1;
        for (int a = 0; a < env.n_actions; ++a) {
            env.row(s, a) = {{env.virtual_goal, 1.0}};
            env.reward(s, a) = kGoalReward;
        }
    }
    const QTable q = standard_value_iteration(env).q;
    const Trajectory traj = rollout(env, greedy_policy(q), 12, 100, 4);
    REQUIRE(traj.terminal);
    const int collected = traj.steps.back().state;
    bool matches = false;
    for (const Item& it : items)
        if ((it.color == Color::purple || it.color == Color::blue) &&
            geom.state_of_cell[geom.cell(it.x, it.y)] == collected)
            matches = true;
    CHECK(matches);
}
