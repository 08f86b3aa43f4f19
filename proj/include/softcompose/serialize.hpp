#pragma once

#include <string>

#include <json.hpp>

#include "softcompose/gridworld.hpp"
#include "softcompose/mdp.hpp"
#include "softcompose/solver.hpp"

namespace softcompose {

// JSON schemas. Transitions are stored as sparse (state, action, next,
// probability) triples; reward, value, Q and policy tables are dense.
// Doubles round-trip to full binary precision (shortest decimal form
// that re-reads to the same bits).

nlohmann::json mdp_to_json(const TabularMdp& mdp);
TabularMdp mdp_from_json(const nlohmann::json& j);

nlohmann::json library_to_json(const TaskLibrary& library);
TaskLibrary library_from_json(const nlohmann::json& j);

nlohmann::json solve_result_to_json(const SolveResult& result);

nlohmann::json grid_spec_to_json(const grid::GridSpec& spec);
grid::GridSpec grid_spec_from_json(const nlohmann::json& j);

nlohmann::json items_to_json(const std::vector<grid::Item>& items);
std::vector<grid::Item> items_from_json(const nlohmann::json& j);

/// CSV with header `state,action,value` and %.17g formatting.
std::string qtable_to_csv(const QTable& q);
QTable qtable_from_csv(const std::string& csv);

/// CSV with header `state,value`.
std::string value_table_to_csv(const ValueTable& v);

/// CSV with header `state,action,probability`.
std::string policy_to_csv(const StochasticPolicy& pi);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

/// %.17g rendering used by every CSV writer.
std::string format_double(double v);

}  // namespace softcompose
