#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "prore/claims/graph.hpp"
#include "prore/core/errors.hpp"

namespace prore::core {

enum class ElementRole { button, text, input, list_item, toggle, other };
enum class ActionKind { tap, type_text, scroll, navigate_back, open_app, answer, done };
enum class AgentRole { policy, evaluator };
enum class RewardValue { success, failure };

std::string to_string(ElementRole r);
std::string to_string(ActionKind k);
std::string to_string(AgentRole r);
std::string to_string(RewardValue v);
ElementRole element_role_from_string(const std::string& s);
ActionKind action_kind_from_string(const std::string& s);
AgentRole agent_role_from_string(const std::string& s);
RewardValue reward_value_from_string(const std::string& s);

/// User instruction a policy agent is asked to carry out.
struct Goal {
    std::string id;
    std::string instruction;
    std::optional<std::string> app_hint;

    void validate() const; // instruction must be non-empty
};

struct UiElement {
    std::string element_id;
    ElementRole role = ElementRole::other;
    std::string text;
    std::map<std::string, std::string> attributes;
};

/// One observation of the screen. raw_text is an HTML-like description of the
/// visible elements; hidden application state never appears here.
struct UiState {
    std::string screen_id;
    std::vector<UiElement> elements;
    std::string raw_text;
    std::optional<std::string> screenshot_ref;
    bool is_home = false;
    int captured_at_step = 0;

    // screen_id plus ordered element texts; screenshots excluded on purpose.
    std::string signature() const;
};

/// Target of a grounded action, carried so replays can re-match the element
/// on a live screen by id, text, role and key attributes.
struct ElementDescriptor {
    std::string element_id;
    ElementRole role = ElementRole::other;
    std::string text;
    std::map<std::string, std::string> attributes;

    static ElementDescriptor from_element(const UiElement& e);
};

struct Action {
    ActionKind kind = ActionKind::done;
    std::optional<ElementDescriptor> target;
    std::optional<std::string> payload;

    void validate() const; // tap needs target; type_text/answer need payload

    static Action tap(ElementDescriptor target);
    static Action type_text(std::string payload, std::optional<ElementDescriptor> target = std::nullopt);
    static Action scroll();
    static Action navigate_back();
    static Action open_app(std::string app_name);
    static Action answer(std::string payload);
    static Action done();
};

struct Step {
    UiState state;  // observation before the action
    Action action;
};

struct Trajectory {
    Goal goal;
    std::vector<Step> steps;
    UiState final_state;
    AgentRole agent_role = AgentRole::policy;

    void validate() const;
    // One past the largest original step index present (steps keep their
    // pre-compression indices in state.captured_at_step).
    int original_length() const;
};

struct RewardOutcome {
    RewardValue value = RewardValue::failure;
    std::string rationale;
    // Reference key of the full relation audit (e.g. a judgment artifact id).
    std::optional<std::string> relation_audit;
};

} // namespace prore::core
