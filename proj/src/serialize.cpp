#include "softcompose/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace softcompose {

using nlohmann::json;

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

json mdp_to_json(const TabularMdp& mdp) {
    json j;
    j["schema"] = "softcompose-mdp-v1";
    j["n_states"] = mdp.n_states;
    j["n_actions"] = mdp.n_actions;
    j["deterministic"] = mdp.deterministic;
    j["virtual_goal"] = mdp.virtual_goal;
    json absorbing = json::array();
    for (int s = 0; s < mdp.n_states; ++s)
        if (mdp.absorbing[s]) absorbing.push_back(s);
    j["absorbing"] = std::move(absorbing);
    json transitions = json::array();
    for (int s = 0; s < mdp.n_states; ++s)
        for (int a = 0; a < mdp.n_actions; ++a)
            for (const auto& [sn, p] : mdp.row(s, a))
                transitions.push_back(json::array({s, a, sn, p}));
    j["transitions"] = std::move(transitions);
    json rewards = json::array();
    for (int s = 0; s < mdp.n_states; ++s) {
        json row = json::array();
        for (int a = 0; a < mdp.n_actions; ++a) row.push_back(mdp.reward(s, a));
        rewards.push_back(std::move(row));
    }
    j["rewards"] = std::move(rewards);
    return j;
}

TabularMdp mdp_from_json(const json& j) {
    TabularMdp mdp;
    mdp.n_states = j.at("n_states").get<int>();
    mdp.n_actions = j.at("n_actions").get<int>();
    mdp.deterministic = j.at("deterministic").get<bool>();
    mdp.virtual_goal = j.at("virtual_goal").get<int>();
    if (mdp.n_states <= 0 || mdp.n_actions <= 0)
        throw ValidationError("mdp_from_json: nonpositive dimensions");
    const std::size_t n_pairs = static_cast<std::size_t>(mdp.n_states) * mdp.n_actions;
    mdp.absorbing.assign(mdp.n_states, 0);
    for (const auto& s : j.at("absorbing")) mdp.absorbing.at(s.get<int>()) = 1;
    mdp.transitions.resize(n_pairs);
    for (const auto& t : j.at("transitions")) {
        const int s = t.at(0).get<int>(), a = t.at(1).get<int>(), sn = t.at(2).get<int>();
        if (s < 0 || s >= mdp.n_states || a < 0 || a >= mdp.n_actions)
            throw ValidationError("mdp_from_json: transition index out of range");
        mdp.row(s, a).emplace_back(sn, t.at(3).get<double>());
    }
    mdp.rewards.assign(n_pairs, 0.0);
    if (j.contains("rewards")) {
        const auto& rewards = j.at("rewards");
        for (int s = 0; s < mdp.n_states; ++s)
            for (int a = 0; a < mdp.n_actions; ++a)
                mdp.reward(s, a) = rewards.at(s).at(a).get<double>();
    }
    return mdp;
}

json library_to_json(const TaskLibrary& library) {
    json j;
    j["schema"] = "softcompose-library-v1";
    json base = mdp_to_json(library.base);
    base.erase("rewards");  // library base carries no rewards
    j["base"] = std::move(base);
    j["temperature"] = library.temperature;
    json ref = json::array();
    for (int s = 0; s < library.reference.n_states; ++s) {
        json row = json::array();
        for (int a = 0; a < library.reference.n_actions; ++a)
            row.push_back(library.reference.at(s, a));
        ref.push_back(std::move(row));
    }
    j["reference"] = std::move(ref);
    json tasks = json::array();
    for (std::size_t k = 0; k < library.task_rewards.size(); ++k) {
        json table = json::array();
        const int na = library.base.n_actions;
        for (int s = 0; s < library.base.n_states; ++s) {
            json row = json::array();
            for (int a = 0; a < na; ++a)
                row.push_back(library.task_rewards[k][static_cast<std::size_t>(s) * na + a]);
            table.push_back(std::move(row));
        }
        tasks.push_back(std::move(table));
    }
    j["task_rewards"] = std::move(tasks);
    j["task_names"] = library.task_names;
    return j;
}

TaskLibrary library_from_json(const json& j) {
    TaskLibrary lib;
    lib.base = mdp_from_json(j.at("base"));
    lib.temperature = j.at("temperature").get<double>();
    lib.reference = StochasticPolicy(lib.base.n_states, lib.base.n_actions);
    const auto& ref = j.at("reference");
    for (int s = 0; s < lib.base.n_states; ++s)
        for (int a = 0; a < lib.base.n_actions; ++a)
            lib.reference.at(s, a) = ref.at(s).at(a).get<double>();
    for (const auto& table : j.at("task_rewards")) {
        std::vector<double> rewards;
        rewards.reserve(static_cast<std::size_t>(lib.base.n_states) * lib.base.n_actions);
        for (const auto& row : table)
            for (const auto& v : row) rewards.push_back(v.get<double>());
        lib.task_rewards.push_back(std::move(rewards));
    }
    if (j.contains("task_names"))
        lib.task_names = j.at("task_names").get<std::vector<std::string>>();
    return lib;
}

json solve_result_to_json(const SolveResult& result) {
    json j;
    j["schema"] = "softcompose-solve-v1";
    j["iterations"] = result.iterations;
    j["residual"] = result.residual;
    j["value"] = result.value.values;
    json q = json::array(), pi = json::array();
    for (int s = 0; s < result.q.n_states; ++s) {
        json qrow = json::array(), prow = json::array();
        for (int a = 0; a < result.q.n_actions; ++a) {
            qrow.push_back(result.q.at(s, a));
            prow.push_back(result.policy.at(s, a));
        }
        q.push_back(std::move(qrow));
        pi.push_back(std::move(prow));
    }
    j["q"] = std::move(q);
    j["policy"] = std::move(pi);
    return j;
}

json grid_spec_to_json(const grid::GridSpec& spec) {
    json j;
    j["width"] = spec.width;
    j["height"] = spec.height;
    json walls = json::array();
    for (const auto& [x, y] : spec.walls) walls.push_back(json::array({x, y}));
    j["walls"] = std::move(walls);
    j["rng_seed"] = spec.rng_seed;
    return j;
}

grid::GridSpec grid_spec_from_json(const json& j) {
    grid::GridSpec spec;
    spec.width = j.at("width").get<int>();
    spec.height = j.at("height").get<int>();
    if (j.contains("walls"))
        for (const auto& w : j.at("walls"))
            spec.walls.emplace_back(w.at(0).get<int>(), w.at(1).get<int>());
    if (j.contains("rng_seed")) spec.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    return spec;
}

json items_to_json(const std::vector<grid::Item>& items) {
    json arr = json::array();
    for (const grid::Item& it : items) {
        json j;
        j["shape"] = grid::to_string(it.shape);
        j["color"] = grid::to_string(it.color);
        j["x"] = it.x;
        j["y"] = it.y;
        arr.push_back(std::move(j));
    }
    return arr;
}

std::vector<grid::Item> items_from_json(const json& j) {
    std::vector<grid::Item> items;
    for (const auto& entry : j) {
        grid::Item it;
        it.shape = grid::shape_from_string(entry.at("shape").get<std::string>());
        it.color = grid::color_from_string(entry.at("color").get<std::string>());
        it.x = entry.at("x").get<int>();
        it.y = entry.at("y").get<int>();
        items.push_back(it);
    }
    return items;
}

std::string qtable_to_csv(const QTable& q) {
    std::string csv = "state,action,value\n";
    for (int s = 0; s < q.n_states; ++s)
        for (int a = 0; a < q.n_actions; ++a)
            csv += std::to_string(s) + "," + std::to_string(a) + "," +
                   format_double(q.at(s, a)) + "\n";
    return csv;
}

QTable qtable_from_csv(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line) || line != "state,action,value")
        throw ValidationError("qtable_from_csv: missing 'state,action,value' header");
    std::vector<std::tuple<int, int, double>> entries;
    int max_s = -1, max_a = -1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        int s = 0, a = 0;
        double v = 0.0;
        if (std::sscanf(line.c_str(), "%d,%d,%lf", &s, &a, &v) != 3)
            throw ValidationError("qtable_from_csv: malformed row '" + line + "'");
        entries.emplace_back(s, a, v);
        max_s = std::max(max_s, s);
        max_a = std::max(max_a, a);
    }
    if (entries.empty()) throw ValidationError("qtable_from_csv: no rows");
    QTable q(max_s + 1, max_a + 1);
    for (const auto& [s, a, v] : entries) q.at(s, a) = v;
    return q;
}

std::string value_table_to_csv(const ValueTable& v) {
    std::string csv = "state,value\n";
    for (int s = 0; s < v.size(); ++s)
        csv += std::to_string(s) + "," + format_double(v[s]) + "\n";
    return csv;
}

std::string policy_to_csv(const StochasticPolicy& pi) {
    std::string csv = "state,action,probability\n";
    for (int s = 0; s < pi.n_states; ++s)
        for (int a = 0; a < pi.n_actions; ++a)
            csv += std::to_string(s) + "," + std::to_string(a) + "," +
                   format_double(pi.at(s, a)) + "\n";
    return csv;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw ValidationError("write to '" + path + "' failed");
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path + "' for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace softcompose
