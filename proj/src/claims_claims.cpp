#include "prore/claims/claims.hpp"

#include <algorithm>

#include <json.hpp>

#include "prore/core/text.hpp"

namespace prore::claims {

using nlohmann::json;

namespace {

std::string strip_claims_header(const std::string& text) {
    // The schema asks for "the JSON under **Claims:**"; tolerate the header.
    std::size_t brace = text.find('{');
    if (brace == std::string::npos) throw prore::ParseError("claims output: no JSON object found");
    return text.substr(brace);
}

} // namespace

ClaimSet parse_claims_json(const std::string& text, core::AgentRole role, int traj_len,
                           int min_claims, int max_claims) {
    json j;
    try {
        j = json::parse(strip_claims_header(text));
    } catch (const json::exception& e) {
        throw prore::ParseError(std::string("claims output: invalid JSON: ") + e.what());
    }
    const std::string role_key = core::to_string(role);
    if (!j.contains(role_key) || !j.at(role_key).is_array()) {
        throw prore::ParseError("claims output: missing \"" + role_key + "\" array");
    }

    ClaimSet set;
    set.role = role;
    const char prefix = role == core::AgentRole::policy ? 'p' : 'e';
    int index = 0;
    for (const auto& item : j.at(role_key)) {
        Claim c;
        c.role = role;
        c.id = std::string(1, prefix) + std::to_string(++index);
        if (!item.contains("steps") || !item.at("steps").is_array() || item.at("steps").empty()) {
            throw prore::ParseError("claims output: claim " + c.id + " needs a non-empty steps list");
        }
        for (const auto& s : item.at("steps")) {
            const int idx = s.get<int>();
            if (idx < 0 || idx >= traj_len) {
                throw prore::ParseError("claims output: claim " + c.id + " step index " +
                                        std::to_string(idx) + " outside [0, " +
                                        std::to_string(traj_len) + ")");
            }
            c.steps.push_back(idx);
        }
        std::sort(c.steps.begin(), c.steps.end());
        c.steps.erase(std::unique(c.steps.begin(), c.steps.end()), c.steps.end());
        c.reasoning = item.value("reasoning", std::string());
        c.statement = item.value("claim", std::string());
        if (c.statement.empty()) {
            throw prore::ParseError("claims output: claim " + c.id + " has an empty statement");
        }
        set.claims.push_back(std::move(c));
    }

    const int n = static_cast<int>(set.claims.size());
    if (n == 0 && role == core::AgentRole::evaluator) return set; // uninformative probe
    if (n < min_claims) {
        throw prore::ParseError("claims output: " + std::to_string(n) + " claims below min_claims=" +
                                std::to_string(min_claims));
    }
    if (n > max_claims) {
        throw prore::ParseError("claims output: " + std::to_string(n) + " claims above max_claims=" +
                                std::to_string(max_claims));
    }
    return set;
}

std::string claims_to_json(const ClaimSet& set) {
    json arr = json::array();
    for (const auto& c : set.claims) {
        json item;
        item["steps"] = c.steps;
        item["reasoning"] = c.reasoning;
        item["claim"] = c.statement;
        arr.push_back(std::move(item));
    }
    json out;
    out[core::to_string(set.role)] = std::move(arr);
    return out.dump(2);
}

std::string describe_action(const core::Action& action) {
    using core::ActionKind;
    switch (action.kind) {
        case ActionKind::tap:
            return "tap \"" + (action.target ? action.target->text : std::string()) + "\"";
        case ActionKind::type_text: {
            std::string out = "type \"" + action.payload.value_or("") + "\"";
            if (action.target) out += " into \"" + action.target->text + "\"";
            return out;
        }
        case ActionKind::scroll: return "scroll down";
        case ActionKind::navigate_back: return "navigate back";
        case ActionKind::open_app: return "open app \"" + action.payload.value_or("") + "\"";
        case ActionKind::answer: return "answer \"" + action.payload.value_or("") + "\"";
        case ActionKind::done: return "done";
    }
    return "done";
}

std::string render_action_history(const core::Trajectory& traj) {
    std::string out;
    for (const auto& step : traj.steps) {
        out += "Step " + std::to_string(step.state.captured_at_step) + ": " +
               describe_action(step.action) + "\n";
    }
    return text::trim(out);
}

std::string render_html_states(const core::Trajectory& traj) {
    std::string out;
    for (const auto& step : traj.steps) {
        out += "Step " + std::to_string(step.state.captured_at_step) + " (screen: " +
               step.state.screen_id + ")" + (step.state.is_home ? " [home]" : "") + ": " +
               step.state.raw_text + "\n";
    }
    out += "Step " + std::to_string(traj.final_state.captured_at_step) + " (screen: " +
           traj.final_state.screen_id + ")" + (traj.final_state.is_home ? " [home]" : "") +
           " [final]: " + traj.final_state.raw_text + "\n";
    return text::trim(out);
}

ClaimSet generate_claims(core::AgentRole role, const core::Goal& goal,
                         const core::Trajectory& traj, const std::string& action_history,
                         llm::LlmBackend& backend, const llm::PromptLibrary& prompts,
                         int min_claims, int max_claims) {
    if (traj.steps.empty()) {
        if (role == core::AgentRole::policy) {
            throw prore::InputError("generate_claims: policy trajectory has no steps");
        }
        ClaimSet empty;
        empty.role = role;
        empty.source_trajectory_id = goal.id + ":evaluator";
        return empty; // probe produced nothing to report on
    }

    const std::string role_key = core::to_string(role);
    const int traj_len = traj.final_state.captured_at_step + 1;
    std::string prompt = prompts.render_claims(role_key, goal.instruction, action_history,
                                               render_html_states(traj), min_claims, max_claims);

    auto attempt = [&](const std::string& body) {
        auto request = llm::ChatRequest::for_prompt(llm::PromptFamily::claims, body);
        std::string reply = llm::complete(request, backend);
        return parse_claims_json(reply, role, traj_len, min_claims, max_claims);
    };

    try {
        ClaimSet set = attempt(prompt);
        set.source_trajectory_id = goal.id + ":" + role_key;
        return set;
    } catch (const prore::ParseError&) {
        // One repair pass, then give up: the probe is treated as uninformative
        // upstream for evaluators; policy claims are required.
        ClaimSet set = attempt(prompt + "\n\nYour previous reply was malformed. "
                                        "Follow the exact output format.");
        set.source_trajectory_id = goal.id + ":" + role_key;
        return set;
    }
}

} // namespace prore::claims
