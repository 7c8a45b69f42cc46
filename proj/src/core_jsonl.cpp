#include "prore/core/jsonl.hpp"

#include <fstream>
#include <sstream>

#include "prore/core/text.hpp"

namespace prore::core {

using nlohmann::json;

json to_json(const UiElement& e) {
    json j;
    j["element_id"] = e.element_id;
    j["role"] = to_string(e.role);
    j["text"] = e.text;
    j["attributes"] = e.attributes;
    return j;
}

json to_json(const UiState& s) {
    json j;
    j["screen_id"] = s.screen_id;
    json elems = json::array();
    for (const auto& e : s.elements) elems.push_back(to_json(e));
    j["elements"] = std::move(elems);
    j["raw_text"] = s.raw_text;
    if (s.screenshot_ref) j["screenshot_ref"] = *s.screenshot_ref;
    j["is_home"] = s.is_home;
    j["captured_at_step"] = s.captured_at_step;
    return j;
}

json to_json(const ElementDescriptor& d) {
    json j;
    j["element_id"] = d.element_id;
    j["role"] = to_string(d.role);
    j["text"] = d.text;
    j["attributes"] = d.attributes;
    return j;
}

json to_json(const Action& a) {
    json j;
    j["kind"] = to_string(a.kind);
    if (a.target) j["target"] = to_json(*a.target);
    if (a.payload) j["payload"] = *a.payload;
    return j;
}

json to_json(const Goal& g) {
    json j;
    j["id"] = g.id;
    j["instruction"] = g.instruction;
    if (g.app_hint) j["app_hint"] = *g.app_hint;
    return j;
}

UiElement element_from_json(const json& j) {
    UiElement e;
    e.element_id = j.at("element_id").get<std::string>();
    e.role = element_role_from_string(j.at("role").get<std::string>());
    e.text = j.at("text").get<std::string>();
    if (j.contains("attributes")) {
        e.attributes = j.at("attributes").get<std::map<std::string, std::string>>();
    }
    return e;
}

UiState state_from_json(const json& j) {
    UiState s;
    s.screen_id = j.at("screen_id").get<std::string>();
    for (const auto& e : j.at("elements")) s.elements.push_back(element_from_json(e));
    s.raw_text = j.at("raw_text").get<std::string>();
    if (j.contains("screenshot_ref") && !j.at("screenshot_ref").is_null()) {
        s.screenshot_ref = j.at("screenshot_ref").get<std::string>();
    }
    s.is_home = j.value("is_home", false);
    s.captured_at_step = j.at("captured_at_step").get<int>();
    return s;
}

ElementDescriptor descriptor_from_json(const json& j) {
    ElementDescriptor d;
    d.element_id = j.value("element_id", std::string());
    d.role = element_role_from_string(j.value("role", std::string("other")));
    d.text = j.value("text", std::string());
    if (j.contains("attributes")) {
        d.attributes = j.at("attributes").get<std::map<std::string, std::string>>();
    }
    return d;
}

Action action_from_json(const json& j) {
    Action a;
    a.kind = action_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("target") && !j.at("target").is_null()) {
        a.target = descriptor_from_json(j.at("target"));
    }
    if (j.contains("payload") && !j.at("payload").is_null()) {
        a.payload = j.at("payload").get<std::string>();
    }
    a.validate();
    return a;
}

Goal goal_from_json(const json& j) {
    Goal g;
    g.id = j.at("id").get<std::string>();
    g.instruction = j.at("instruction").get<std::string>();
    if (j.contains("app_hint") && !j.at("app_hint").is_null()) {
        g.app_hint = j.at("app_hint").get<std::string>();
    }
    g.validate();
    return g;
}

std::string trajectory_to_jsonl(const Trajectory& t) {
    std::ostringstream out;
    for (const auto& step : t.steps) {
        json line;
        line["t"] = step.state.captured_at_step;
        line["state"] = to_json(step.state);
        line["action"] = to_json(step.action);
        out << line.dump() << '\n';
    }
    json tail;
    tail["final_state"] = to_json(t.final_state);
    out << tail.dump() << '\n';
    return out.str();
}

Trajectory trajectory_from_jsonl(const std::string& text, Goal goal, AgentRole role) {
    Trajectory t;
    t.goal = std::move(goal);
    t.agent_role = role;
    bool have_final = false;
    for (const auto& line : text::split_lines(text)) {
        std::string trimmed = text::trim(line);
        if (trimmed.empty()) continue;
        json j = json::parse(trimmed);
        if (j.contains("final_state")) {
            t.final_state = state_from_json(j.at("final_state"));
            have_final = true;
        } else {
            Step step;
            step.state = state_from_json(j.at("state"));
            step.state.captured_at_step = j.at("t").get<int>();
            step.action = action_from_json(j.at("action"));
            t.steps.push_back(std::move(step));
        }
    }
    if (!have_final) throw ParseError("trajectory JSONL missing final_state line");
    t.validate();
    return t;
}

void write_trajectory_file(const std::string& path, const Trajectory& t) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for write: " + path);
    out << trajectory_to_jsonl(t);
}

Trajectory read_trajectory_file(const std::string& path, Goal goal, AgentRole role) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for read: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return trajectory_from_jsonl(buf.str(), std::move(goal), role);
}

} // namespace prore::core
