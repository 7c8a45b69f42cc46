#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "prore/core/types.hpp"

namespace prore::core {

// JSON object forms used throughout persisted artifacts.
nlohmann::json to_json(const UiElement& e);
nlohmann::json to_json(const UiState& s);
nlohmann::json to_json(const ElementDescriptor& d);
nlohmann::json to_json(const Action& a);
nlohmann::json to_json(const Goal& g);

UiElement element_from_json(const nlohmann::json& j);
UiState state_from_json(const nlohmann::json& j);
ElementDescriptor descriptor_from_json(const nlohmann::json& j);
Action action_from_json(const nlohmann::json& j);
Goal goal_from_json(const nlohmann::json& j);

// Trajectory wire format: one `{"t": int, "state": {...}, "action": {...}}`
// line per step, then a trailing `{"final_state": {...}}` line.
std::string trajectory_to_jsonl(const Trajectory& t);
Trajectory trajectory_from_jsonl(const std::string& text, Goal goal, AgentRole role);

void write_trajectory_file(const std::string& path, const Trajectory& t);
Trajectory read_trajectory_file(const std::string& path, Goal goal, AgentRole role);

} // namespace prore::core
