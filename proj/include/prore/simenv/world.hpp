#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "prore/core/types.hpp"
#include "prore/probing/env.hpp"

namespace prore::simenv {

struct EffectSpec {
    std::string op; // list_append | list_remove | list_move | list_dedup | value_set
    std::string list;
    std::string from;
    std::string to;
    std::string key;
    std::string value; // templates: {auto4} -> zero-padded count+1, {payload} -> action payload
};

struct TransitionSpec {
    core::ActionKind on_kind = core::ActionKind::tap;
    std::optional<std::string> on_text;    // matches action.target->text exactly
    std::optional<std::string> on_payload; // matches action.payload exactly
    std::optional<std::string> goto_screen;
    std::vector<EffectSpec> effects;
};

struct ElementSpec {
    std::string id;
    core::ElementRole role = core::ElementRole::button;
    std::string text; // may embed {value:KEY} and {count:LIST}
    std::map<std::string, std::string> attributes;
};

struct ScreenSpec {
    std::string screen_id;
    std::string title;
    bool is_home = false;
    int viewport_limit = 8;
    std::optional<std::string> list_source; // store backing the item rows
    core::ElementRole list_role = core::ElementRole::list_item;
    std::vector<ElementSpec> elements;
    std::vector<TransitionSpec> transitions;
};

struct AppSpec {
    std::string name;
    std::map<std::string, std::vector<std::string>> lists;
    std::map<std::string, std::string> values;
    std::vector<ScreenSpec> screens;
};

struct WorldSpec {
    std::string name;
    int seed = 0;
    std::string initial_screen;
    std::vector<AppSpec> apps;

    static WorldSpec from_json(const nlohmann::json& j);
    // Screen graph must be connected from initial_screen and every reference
    // (goto target, store name) must resolve.
    void validate() const;

    const ScreenSpec* find_screen(const std::string& id) const;
    std::map<std::string, std::vector<std::string>> all_lists() const;
    std::map<std::string, std::string> all_values() const;
};

WorldSpec load_world_spec(const std::string& spec_file);

/// Deterministic world instance. Observations render the current screen
/// clipped to its viewport; hidden store values never leak into raw_text.
/// Unmatched actions are no-ops that return the same state.
class SimEnvironment : public probing::Environment {
public:
    SimEnvironment(WorldSpec spec, std::string instance_id);

    std::string instance_id() const override { return instance_id_; }
    probing::Capabilities capabilities() const override { return {true, true, true}; }

    core::UiState observe() override;
    core::UiState step(const core::Action& action) override;
    void reset() override;
    std::unique_ptr<probing::Environment> snapshot(const std::string& new_instance_id) override;
    std::unique_ptr<SimEnvironment> fork(const std::string& new_instance_id) const;

    bool closed() const override { return closed_; }
    void close() override { closed_ = true; }

    // Full-visibility accessors for ground-truth oracles only.
    const std::map<std::string, std::vector<std::string>>& lists() const { return lists_; }
    const std::map<std::string, std::string>& values() const { return values_; }
    const WorldSpec& spec() const { return spec_; }
    const std::string& current_screen() const { return current_screen_; }
    int steps_taken() const { return step_counter_; }

private:
    void ensure_open() const;
    const ScreenSpec& screen() const;
    std::vector<core::UiElement> render_elements(const ScreenSpec& s, bool* more_above,
                                                 bool* more_below) const;
    std::string substitute(const std::string& text_template, const core::Action* action) const;
    void apply_effects(const std::vector<EffectSpec>& effects, const core::Action& action);
    void enter_screen(const std::string& id, bool push_current);

    WorldSpec spec_;
    std::string instance_id_;
    std::map<std::string, std::vector<std::string>> lists_;
    std::map<std::string, std::string> values_;
    std::string current_screen_;
    std::vector<std::string> nav_stack_;
    std::map<std::string, int> scroll_offsets_;
    int step_counter_ = 0;
    bool closed_ = false;
};

std::unique_ptr<SimEnvironment> load_world(const std::string& spec_file,
                                           const std::string& instance_id = "env-0");

} // namespace prore::simenv
