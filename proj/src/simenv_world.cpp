#include "prore/simenv/world.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "prore/core/text.hpp"

namespace prore::simenv {

using nlohmann::json;

namespace {

EffectSpec effect_from_json(const json& j) {
    EffectSpec e;
    e.op = j.at("op").get<std::string>();
    e.list = j.value("list", std::string());
    e.from = j.value("from", std::string());
    e.to = j.value("to", std::string());
    e.key = j.value("key", std::string());
    e.value = j.value("value", std::string());
    return e;
}

TransitionSpec transition_from_json(const json& j) {
    TransitionSpec t;
    t.on_kind = core::action_kind_from_string(j.at("on_kind").get<std::string>());
    if (j.contains("on_text")) t.on_text = j.at("on_text").get<std::string>();
    if (j.contains("on_payload")) t.on_payload = j.at("on_payload").get<std::string>();
    if (j.contains("goto") && !j.at("goto").is_null()) {
        t.goto_screen = j.at("goto").get<std::string>();
    }
    if (j.contains("effects")) {
        for (const auto& e : j.at("effects")) t.effects.push_back(effect_from_json(e));
    }
    return t;
}

ElementSpec element_from_json_spec(const json& j) {
    ElementSpec e;
    e.id = j.at("id").get<std::string>();
    e.role = core::element_role_from_string(j.value("role", std::string("button")));
    e.text = j.at("text").get<std::string>();
    if (j.contains("attributes")) {
        e.attributes = j.at("attributes").get<std::map<std::string, std::string>>();
    }
    return e;
}

ScreenSpec screen_from_json(const json& j) {
    ScreenSpec s;
    s.screen_id = j.at("screen_id").get<std::string>();
    s.title = j.value("title", s.screen_id);
    s.is_home = j.value("is_home", false);
    s.viewport_limit = j.value("viewport_limit", 8);
    if (j.contains("list_source") && !j.at("list_source").is_null()) {
        s.list_source = j.at("list_source").get<std::string>();
    }
    if (j.contains("list_role")) {
        s.list_role = core::element_role_from_string(j.at("list_role").get<std::string>());
    }
    if (j.contains("elements")) {
        for (const auto& e : j.at("elements")) s.elements.push_back(element_from_json_spec(e));
    }
    if (j.contains("transitions")) {
        for (const auto& t : j.at("transitions")) s.transitions.push_back(transition_from_json(t));
    }
    return s;
}

} // namespace

WorldSpec WorldSpec::from_json(const json& j) {
    WorldSpec w;
    w.name = j.value("name", std::string("world"));
    w.seed = j.value("seed", 0);
    w.initial_screen = j.at("initial_screen").get<std::string>();
    for (const auto& app_json : j.at("apps")) {
        AppSpec app;
        app.name = app_json.at("name").get<std::string>();
        if (app_json.contains("lists")) {
            app.lists = app_json.at("lists").get<std::map<std::string, std::vector<std::string>>>();
        }
        if (app_json.contains("values")) {
            app.values = app_json.at("values").get<std::map<std::string, std::string>>();
        }
        if (app_json.contains("screens")) {
            for (const auto& s : app_json.at("screens")) app.screens.push_back(screen_from_json(s));
        }
        w.apps.push_back(std::move(app));
    }
    w.validate();
    return w;
}

const ScreenSpec* WorldSpec::find_screen(const std::string& id) const {
    for (const auto& app : apps) {
        for (const auto& s : app.screens) {
            if (s.screen_id == id) return &s;
        }
    }
    return nullptr;
}

std::map<std::string, std::vector<std::string>> WorldSpec::all_lists() const {
    std::map<std::string, std::vector<std::string>> out;
    for (const auto& app : apps) {
        for (const auto& [k, v] : app.lists) out[k] = v;
    }
    return out;
}

std::map<std::string, std::string> WorldSpec::all_values() const {
    std::map<std::string, std::string> out;
    for (const auto& app : apps) {
        for (const auto& [k, v] : app.values) out[k] = v;
    }
    return out;
}

void WorldSpec::validate() const {
    const auto lists = all_lists();
    const auto values = all_values();

    std::set<std::string> ids;
    for (const auto& app : apps) {
        for (const auto& s : app.screens) {
            if (!ids.insert(s.screen_id).second) {
                throw ValidationError("world " + name + ": duplicate screen " + s.screen_id);
            }
            if (s.viewport_limit < 1) {
                throw ValidationError("world " + name + ": screen " + s.screen_id +
                                      " viewport_limit must be >= 1");
            }
            if (s.list_source && !lists.count(*s.list_source)) {
                throw ValidationError("world " + name + ": screen " + s.screen_id +
                                      " references unknown list " + *s.list_source);
            }
        }
    }
    if (!ids.count(initial_screen)) {
        throw ValidationError("world " + name + ": initial_screen " + initial_screen +
                              " is not defined");
    }
    for (const auto& app : apps) {
        for (const auto& s : app.screens) {
            for (const auto& t : s.transitions) {
                if (t.goto_screen && !ids.count(*t.goto_screen)) {
                    throw ValidationError("world " + name + ": screen " + s.screen_id +
                                          " has transition to unknown screen " + *t.goto_screen);
                }
            }
        }
    }

    // Connectivity from initial_screen over goto edges.
    std::set<std::string> seen{initial_screen};
    std::vector<std::string> frontier{initial_screen};
    while (!frontier.empty()) {
        const ScreenSpec* s = find_screen(frontier.back());
        frontier.pop_back();
        for (const auto& t : s->transitions) {
            if (t.goto_screen && seen.insert(*t.goto_screen).second) {
                frontier.push_back(*t.goto_screen);
            }
        }
    }
    for (const auto& id : ids) {
        if (!seen.count(id)) {
            throw ValidationError("world " + name + ": screen " + id +
                                  " unreachable from initial_screen");
        }
    }
}

WorldSpec load_world_spec(const std::string& spec_file) {
    std::ifstream in(spec_file, std::ios::binary);
    if (!in) throw IoError("cannot open world spec: " + spec_file);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError("world spec " + spec_file + ": " + e.what());
    }
    try {
        return WorldSpec::from_json(j);
    } catch (const json::exception& e) {
        throw ParseError("world spec " + spec_file + ": " + e.what());
    }
}

SimEnvironment::SimEnvironment(WorldSpec spec, std::string instance_id)
    : spec_(std::move(spec)), instance_id_(std::move(instance_id)) {
    reset();
}

void SimEnvironment::reset() {
    lists_ = spec_.all_lists();
    values_ = spec_.all_values();
    current_screen_ = spec_.initial_screen;
    nav_stack_.clear();
    scroll_offsets_.clear();
    step_counter_ = 0;
    closed_ = false;
}

void SimEnvironment::ensure_open() const {
    if (closed_) throw EnvError("environment " + instance_id_ + " is closed");
}

const ScreenSpec& SimEnvironment::screen() const {
    const ScreenSpec* s = spec_.find_screen(current_screen_);
    if (!s) throw EnvError("current screen vanished: " + current_screen_);
    return *s;
}

std::string SimEnvironment::substitute(const std::string& text_template,
                                       const core::Action* action) const {
    std::string out = text_template;
    // {value:KEY}
    std::size_t pos;
    while ((pos = out.find("{value:")) != std::string::npos) {
        std::size_t end = out.find('}', pos);
        if (end == std::string::npos) break;
        const std::string key = out.substr(pos + 7, end - pos - 7);
        auto it = values_.find(key);
        out.replace(pos, end - pos + 1, it == values_.end() ? "" : it->second);
    }
    // {count:LIST}
    while ((pos = out.find("{count:")) != std::string::npos) {
        std::size_t end = out.find('}', pos);
        if (end == std::string::npos) break;
        const std::string key = out.substr(pos + 7, end - pos - 7);
        auto it = lists_.find(key);
        out.replace(pos, end - pos + 1,
                    it == lists_.end() ? "0" : std::to_string(it->second.size()));
    }
    if (action && (pos = out.find("{payload}")) != std::string::npos) {
        out.replace(pos, 9, action->payload.value_or(""));
    }
    return out;
}

std::vector<core::UiElement> SimEnvironment::render_elements(const ScreenSpec& s, bool* more_above,
                                                             bool* more_below) const {
    std::vector<core::UiElement> out;
    *more_above = false;
    *more_below = false;
    for (const auto& e : s.elements) {
        core::UiElement el;
        el.element_id = e.id;
        el.role = e.role;
        el.text = substitute(e.text, nullptr);
        el.attributes = e.attributes;
        out.push_back(std::move(el));
    }
    if (s.list_source) {
        const auto& items = lists_.at(*s.list_source);
        int offset = 0;
        auto it = scroll_offsets_.find(s.screen_id);
        if (it != scroll_offsets_.end()) offset = it->second;
        const int n = static_cast<int>(items.size());
        const int window = s.viewport_limit;
        offset = std::min(offset, std::max(0, n - window));
        *more_above = offset > 0;
        *more_below = offset + window < n;
        for (int i = offset; i < std::min(n, offset + window); ++i) {
            core::UiElement el;
            el.element_id = "li_" + std::to_string(i);
            el.role = s.list_role;
            el.text = items[static_cast<std::size_t>(i)];
            el.attributes["idx"] = std::to_string(i);
            out.push_back(std::move(el));
        }
    }
    return out;
}

core::UiState SimEnvironment::observe() {
    ensure_open();
    const ScreenSpec& s = screen();
    core::UiState state;
    state.screen_id = s.screen_id;
    state.is_home = s.is_home;
    state.captured_at_step = step_counter_;
    bool more_above = false, more_below = false;
    state.elements = render_elements(s, &more_above, &more_below);

    std::ostringstream raw;
    raw << "<screen id=\"" << s.screen_id << "\" title=\"" << s.title << "\">";
    for (const auto& e : state.elements) {
        raw << "<e role=\"" << core::to_string(e.role) << "\"";
        if (auto it = e.attributes.find("idx"); it != e.attributes.end()) {
            raw << " idx=\"" << it->second << "\"";
        }
        raw << ">" << e.text << "</e>";
    }
    if (more_above) raw << "[more above]";
    if (more_below) raw << "[more below]";
    raw << "</screen>";
    state.raw_text = raw.str();
    return state;
}

void SimEnvironment::apply_effects(const std::vector<EffectSpec>& effects,
                                   const core::Action& action) {
    for (const auto& e : effects) {
        std::string value = substitute(e.value, &action);
        if (e.op == "list_append") {
            auto& list = lists_.at(e.list);
            std::size_t auto_pos = value.find("{auto4}");
            if (auto_pos != std::string::npos) {
                std::string n = std::to_string(list.size() + 1);
                value.replace(auto_pos, 7, std::string(4 - std::min<std::size_t>(4, n.size()), '0') + n);
            }
            list.push_back(value);
        } else if (e.op == "list_remove") {
            auto& list = lists_.at(e.list);
            auto it = std::find(list.begin(), list.end(), value);
            if (it != list.end()) list.erase(it);
        } else if (e.op == "list_move") {
            auto& from = lists_.at(e.from);
            auto& to = lists_.at(e.to);
            auto it = std::find(from.begin(), from.end(), value);
            if (it != from.end()) {
                to.push_back(*it);
                from.erase(it);
            }
        } else if (e.op == "list_dedup") {
            auto& list = lists_.at(e.list);
            std::vector<std::string> unique;
            for (const auto& item : list) {
                if (std::find(unique.begin(), unique.end(), item) == unique.end()) {
                    unique.push_back(item);
                }
            }
            list = std::move(unique);
        } else if (e.op == "value_set") {
            values_[e.key] = value;
        } else {
            throw ValidationError("unknown effect op: " + e.op);
        }
    }
}

void SimEnvironment::enter_screen(const std::string& id, bool push_current) {
    if (id == current_screen_) return;
    // Up-navigation semantics: jumping to a screen already on the stack
    // unwinds to it rather than growing the history.
    auto it = std::find(nav_stack_.rbegin(), nav_stack_.rend(), id);
    if (it != nav_stack_.rend()) {
        nav_stack_.erase(it.base() - 1, nav_stack_.end());
    } else if (push_current) {
        nav_stack_.push_back(current_screen_);
    }
    current_screen_ = id;
    scroll_offsets_.erase(id); // fresh entry starts at the top
}

core::UiState SimEnvironment::step(const core::Action& action) {
    ensure_open();
    action.validate();
    ++step_counter_;

    if (action.kind == core::ActionKind::scroll) {
        const ScreenSpec& s = screen();
        if (s.list_source) {
            const int n = static_cast<int>(lists_.at(*s.list_source).size());
            int& offset = scroll_offsets_[s.screen_id];
            offset = std::min(offset + s.viewport_limit, std::max(0, n - s.viewport_limit));
        }
        return observe();
    }
    if (action.kind == core::ActionKind::navigate_back) {
        if (!nav_stack_.empty()) {
            const std::string target = nav_stack_.back();
            nav_stack_.pop_back();
            current_screen_ = target;
            scroll_offsets_.erase(target);
        }
        return observe();
    }
    if (action.kind == core::ActionKind::answer) {
        // Recorded for question-task oracles; never rendered.
        values_["agent.answer"] = action.payload.value_or("");
        return observe();
    }
    if (action.kind == core::ActionKind::done) {
        return observe();
    }

    const ScreenSpec& s = screen();
    for (const auto& t : s.transitions) {
        if (t.on_kind != action.kind) continue;
        if (t.on_text) {
            if (!action.target || action.target->text != *t.on_text) continue;
        }
        if (t.on_payload) {
            if (!action.payload || *action.payload != *t.on_payload) continue;
        }
        apply_effects(t.effects, action);
        if (t.goto_screen) enter_screen(*t.goto_screen, true);
        return observe();
    }
    // No matching transition: the action does not lead to a state change.
    return observe();
}

std::unique_ptr<probing::Environment> SimEnvironment::snapshot(const std::string& new_instance_id) {
    ensure_open();
    return fork(new_instance_id);
}

std::unique_ptr<SimEnvironment> SimEnvironment::fork(const std::string& new_instance_id) const {
    auto copy = std::make_unique<SimEnvironment>(spec_, new_instance_id);
    copy->lists_ = lists_;
    copy->values_ = values_;
    copy->current_screen_ = current_screen_;
    copy->nav_stack_ = nav_stack_;
    copy->scroll_offsets_ = scroll_offsets_;
    copy->step_counter_ = 0; // fresh observation clock per instance
    copy->closed_ = false;
    return copy;
}

std::unique_ptr<SimEnvironment> load_world(const std::string& spec_file,
                                           const std::string& instance_id) {
    return std::make_unique<SimEnvironment>(load_world_spec(spec_file), instance_id);
}

} // namespace prore::simenv
