#include "prore/core/types.hpp"

#include <algorithm>

namespace prore::claims {

std::string to_string(Relation r) {
    switch (r) {
        case Relation::confirmed: return "confirmed";
        case Relation::contradicted: return "contradicted";
        case Relation::complementary: return "complementary";
        case Relation::unsupported: return "unsupported";
    }
    return "unsupported";
}

Relation relation_from_string(const std::string& s) {
    if (s == "confirmed") return Relation::confirmed;
    if (s == "contradicted") return Relation::contradicted;
    if (s == "complementary") return Relation::complementary;
    if (s == "unsupported" || s == "unrelated") return Relation::unsupported;
    throw prore::ParseError("unknown relation label: " + s);
}

bool ClaimGraph::has_evaluator_claim(const std::string& id) const {
    return std::any_of(edges.begin(), edges.end(),
                       [&](const RelationEdge& e) { return e.evaluator_claim_id == id; });
}

void ClaimGraph::add_unique(RelationEdge edge) {
    for (const auto& e : edges) {
        if (e.policy_claim_id == edge.policy_claim_id &&
            e.evaluator_claim_id == edge.evaluator_claim_id) {
            return;
        }
    }
    edges.push_back(std::move(edge));
}

} // namespace prore::claims

namespace prore::core {

std::string to_string(ElementRole r) {
    switch (r) {
        case ElementRole::button: return "button";
        case ElementRole::text: return "text";
        case ElementRole::input: return "input";
        case ElementRole::list_item: return "list_item";
        case ElementRole::toggle: return "toggle";
        case ElementRole::other: return "other";
    }
    return "other";
}

std::string to_string(ActionKind k) {
    switch (k) {
        case ActionKind::tap: return "tap";
        case ActionKind::type_text: return "type_text";
        case ActionKind::scroll: return "scroll";
        case ActionKind::navigate_back: return "navigate_back";
        case ActionKind::open_app: return "open_app";
        case ActionKind::answer: return "answer";
        case ActionKind::done: return "done";
    }
    return "done";
}

std::string to_string(AgentRole r) {
    return r == AgentRole::policy ? "policy" : "evaluator";
}

std::string to_string(RewardValue v) {
    return v == RewardValue::success ? "success" : "failure";
}

ElementRole element_role_from_string(const std::string& s) {
    if (s == "button") return ElementRole::button;
    if (s == "text") return ElementRole::text;
    if (s == "input") return ElementRole::input;
    if (s == "list_item") return ElementRole::list_item;
    if (s == "toggle") return ElementRole::toggle;
    if (s == "other") return ElementRole::other;
    throw ParseError("unknown element role: " + s);
}

ActionKind action_kind_from_string(const std::string& s) {
    if (s == "tap") return ActionKind::tap;
    if (s == "type_text") return ActionKind::type_text;
    if (s == "scroll") return ActionKind::scroll;
    if (s == "navigate_back") return ActionKind::navigate_back;
    if (s == "open_app") return ActionKind::open_app;
    if (s == "answer") return ActionKind::answer;
    if (s == "done") return ActionKind::done;
    throw ParseError("unknown action kind: " + s);
}

AgentRole agent_role_from_string(const std::string& s) {
    if (s == "policy") return AgentRole::policy;
    if (s == "evaluator") return AgentRole::evaluator;
    throw ParseError("unknown agent role: " + s);
}

RewardValue reward_value_from_string(const std::string& s) {
    if (s == "success") return RewardValue::success;
    if (s == "failure") return RewardValue::failure;
    throw ParseError("unknown reward value: " + s);
}

void Goal::validate() const {
    if (instruction.empty()) throw ValidationError("goal " + id + ": instruction must be non-empty");
}

std::string UiState::signature() const {
    std::string sig = screen_id;
    for (const auto& e : elements) {
        sig += '\x1f';
        sig += e.text;
    }
    return sig;
}

ElementDescriptor ElementDescriptor::from_element(const UiElement& e) {
    return ElementDescriptor{e.element_id, e.role, e.text, e.attributes};
}

void Action::validate() const {
    switch (kind) {
        case ActionKind::tap:
            if (!target) throw ValidationError("tap action requires a target");
            break;
        case ActionKind::type_text:
            if (!payload) throw ValidationError("type_text action requires a payload");
            break;
        case ActionKind::answer:
            if (!payload) throw ValidationError("answer action requires a payload");
            break;
        default:
            break;
    }
}

Action Action::tap(ElementDescriptor t) {
    return Action{ActionKind::tap, std::move(t), std::nullopt};
}

Action Action::type_text(std::string p, std::optional<ElementDescriptor> t) {
    return Action{ActionKind::type_text, std::move(t), std::move(p)};
}

Action Action::scroll() { return Action{ActionKind::scroll, std::nullopt, std::nullopt}; }
Action Action::navigate_back() { return Action{ActionKind::navigate_back, std::nullopt, std::nullopt}; }

Action Action::open_app(std::string app) {
    return Action{ActionKind::open_app, std::nullopt, std::move(app)};
}

Action Action::answer(std::string p) {
    return Action{ActionKind::answer, std::nullopt, std::move(p)};
}

Action Action::done() { return Action{ActionKind::done, std::nullopt, std::nullopt}; }

void Trajectory::validate() const {
    goal.validate();
    int prev = -1;
    for (const auto& step : steps) {
        step.action.validate();
        if (step.state.captured_at_step <= prev) {
            throw ValidationError("trajectory " + goal.id + ": captured_at_step must be strictly increasing");
        }
        prev = step.state.captured_at_step;
    }
    if (final_state.captured_at_step < prev) {
        throw ValidationError("trajectory " + goal.id + ": final_state precedes last step");
    }
}

int Trajectory::original_length() const {
    if (steps.empty()) return 0;
    return steps.back().state.captured_at_step + 1;
}

} // namespace prore::core
