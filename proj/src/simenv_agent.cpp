#include "prore/simenv/agent.hpp"

#include <algorithm>

#include "prore/core/text.hpp"
#include "prore/tts/rng.hpp"

namespace prore::simenv {

SimAgentMode agent_mode_from_string(const std::string& s) {
    if (s == "scripted") return SimAgentMode::scripted;
    if (s == "stochastic") return SimAgentMode::stochastic;
    if (s == "guided") return SimAgentMode::guided;
    throw ParseError("unknown sim agent mode: " + s);
}

void SimAgentConfig::validate() const {
    if (success_prob < 0.0 || success_prob > 1.0) {
        throw InputError("sim agent: success_prob must be in [0,1]");
    }
    if (mode == SimAgentMode::scripted && script.empty()) {
        throw InputError("sim agent: scripted mode requires a script");
    }
    if (mode == SimAgentMode::stochastic && script.empty()) {
        throw InputError("sim agent: stochastic mode requires a correct-path script");
    }
}

SimAgent::SimAgent(SimAgentConfig config, std::uint64_t episode_index)
    : config_(std::move(config)) {
    config_.validate();
    if (config_.mode == SimAgentMode::scripted) {
        plan_ = config_.script;
    } else if (config_.mode == SimAgentMode::stochastic) {
        // Episode-level success draw: one Bernoulli(success_prob) per episode.
        episode_success_ =
            tts::SplitMix64::substream(config_.seed, episode_index).bernoulli(config_.success_prob);
        if (episode_success_) {
            plan_ = config_.script;
        } else if (!config_.fail_script.empty()) {
            plan_ = config_.fail_script;
        } else {
            // Derail: follow half the correct path, take a wrong turn, stop.
            const std::size_t prefix = config_.script.size() / 2;
            plan_.assign(config_.script.begin(),
                         config_.script.begin() + static_cast<std::ptrdiff_t>(prefix));
            plan_.push_back(core::Action::navigate_back());
            plan_.push_back(core::Action::done());
        }
    }
}

namespace {

// The evaluator is a read-only visitor: controls that would mutate state are
// never tapped, no matter how well they match the probing goal.
bool mutating_control(const std::string& element_text) {
    static const std::vector<std::string> kVerbs = {
        "delete", "remove", "save",   "confirm", "add",  "create", "move",
        "rename", "edit",   "new",    "toggle",  "switch", "clear", "send",
        "start",  "stop",   "pause",  "dedupe",  "merge"};
    for (const auto& tok : text::tokenize(element_text)) {
        const std::string low = text::to_lower(tok);
        for (const auto& verb : kVerbs) {
            if (low == verb) return true;
        }
    }
    return false;
}

bool tappable(const core::UiElement& e) {
    return e.role != core::ElementRole::text && !mutating_control(e.text);
}

bool has_more_below(const core::UiState& obs) {
    return obs.raw_text.find("[more below]") != std::string::npos;
}

std::string screen_title(const core::UiState& obs) {
    const std::string marker = "title=\"";
    std::size_t pos = obs.raw_text.find(marker);
    if (pos == std::string::npos) return obs.screen_id;
    std::size_t end = obs.raw_text.find('"', pos + marker.size());
    if (end == std::string::npos) return obs.screen_id;
    return obs.raw_text.substr(pos + marker.size(), end - pos - marker.size());
}

// Entity phrase matches when all of its tokens appear as exact element tokens.
bool element_matches_entity(const core::UiElement& e, const std::string& entity) {
    std::vector<std::string> etoks;
    for (const auto& t : text::tokenize(e.text)) etoks.push_back(text::to_lower(t));
    for (const auto& want : text::tokenize(entity)) {
        if (std::find(etoks.begin(), etoks.end(), text::to_lower(want)) == etoks.end()) {
            return false;
        }
    }
    return true;
}

std::string answer_payload(const core::UiState& obs) {
    std::string out = "Observed:";
    int listed = 0;
    for (const auto& e : obs.elements) {
        if (listed == 3) break;
        out += " " + e.text + ";";
        ++listed;
    }
    return out;
}

} // namespace

core::Action SimAgent::guided_act(const core::UiState& obs, const std::string& goal_text) {
    if (cached_goal_ != goal_text) {
        cached_goal_ = goal_text;
        goal_tokens_ = text::content_tokens(goal_text);
        entities_ = text::extract_entities(goal_text);
    }
    auto tap_key = [&obs](const core::UiElement& e) { return obs.screen_id + "|" + e.text; };
    auto tap = [&](const core::UiElement& e) {
        tapped_.insert(tap_key(e));
        return core::Action::tap(core::ElementDescriptor::from_element(e));
    };

    // 1. Open anything that names a goal entity (strongest entities first).
    for (const auto& entity : entities_) {
        for (const auto& e : obs.elements) {
            if (!tappable(e) || tapped_.count(tap_key(e))) continue;
            if (element_matches_entity(e, entity)) return tap(e);
        }
    }

    const std::string title = screen_title(obs);
    bool container = false;
    for (const auto& t : text::content_tokens(title)) {
        if (std::find(goal_tokens_.begin(), goal_tokens_.end(), t) != goal_tokens_.end()) {
            container = true;
            break;
        }
    }

    // 2. Enumerate a goal-named container before weaker taps.
    if (container && has_more_below(obs)) return core::Action::scroll();

    // 3. Navigate toward whatever shares tokens with the goal.
    const core::UiElement* best = nullptr;
    std::size_t best_overlap = 0;
    for (const auto& e : obs.elements) {
        if (!tappable(e) || tapped_.count(tap_key(e))) continue;
        std::size_t overlap = 0;
        for (const auto& t : text::content_tokens(e.text)) {
            if (std::find(goal_tokens_.begin(), goal_tokens_.end(), t) != goal_tokens_.end()) {
                ++overlap;
            }
        }
        if (overlap > best_overlap) {
            best = &e;
            best_overlap = overlap;
        }
    }
    if (best) return tap(*best);

    // 4. A fully seen container is the evidence; report it.
    if (container) return core::Action::answer(answer_payload(obs));

    // 5. From the launcher, follow the app hint.
    if (obs.is_home && config_.app_hint) {
        for (const auto& e : obs.elements) {
            if (tappable(e) && e.text == *config_.app_hint && !tapped_.count(tap_key(e))) {
                return tap(e);
            }
        }
    }

    // 6. Back out of dead ends, once per screen.
    if (!obs.is_home && !backed_from_.count(obs.screen_id)) {
        backed_from_.insert(obs.screen_id);
        return core::Action::navigate_back();
    }

    // 7. Last resorts: keep scanning, then report what was seen.
    if (has_more_below(obs)) return core::Action::scroll();
    return core::Action::answer(answer_payload(obs));
}

core::Action SimAgent::act(const core::UiState& observation, const std::string& goal_text) {
    if (config_.mode == SimAgentMode::guided) return guided_act(observation, goal_text);
    if (cursor_ >= plan_.size()) {
        throw InputError("sim agent: script exhausted before done");
    }
    core::Action action = plan_[cursor_++];
    // Ground scripted taps on the live element so recorded trajectories carry
    // full descriptors for replay matching.
    if (action.kind == core::ActionKind::tap && action.target) {
        for (const auto& e : observation.elements) {
            if (e.text == action.target->text) {
                action.target = core::ElementDescriptor::from_element(e);
                break;
            }
        }
    }
    return action;
}

core::Action sim_agent_act(SimAgent& agent, const core::UiState& observation,
                           const std::string& goal_text) {
    return agent.act(observation, goal_text);
}

probing::AgentFn make_agent_fn(const SimAgentConfig& config, std::uint64_t episode_index) {
    auto agent = std::make_shared<SimAgent>(config, episode_index);
    return [agent](const core::UiState& obs, const std::string& goal) {
        return agent->act(obs, goal);
    };
}

namespace {

core::Trajectory run_loop(SimEnvironment& env, const core::Goal& goal, SimAgent& agent,
                          int max_steps, core::AgentRole role) {
    core::Trajectory traj;
    traj.goal = goal;
    traj.agent_role = role;
    core::UiState obs = env.observe();
    obs.captured_at_step = 0;
    int index = 0;
    for (int used = 0; used < max_steps; ++used) {
        core::Action action = agent.act(obs, goal.instruction);
        action.validate();
        traj.steps.push_back(core::Step{obs, action});
        if (action.kind == core::ActionKind::done || action.kind == core::ActionKind::answer) {
            if (action.kind == core::ActionKind::answer) {
                env.step(action); // terminal, but the reply must reach the env
            }
            traj.final_state = obs;
            traj.final_state.captured_at_step = index + 1;
            return traj;
        }
        obs = env.step(action);
        ++index;
        obs.captured_at_step = index;
    }
    traj.final_state = obs;
    return traj;
}

} // namespace

EpisodeResult run_episode(const WorldSpec& spec, const core::Goal& goal, SimAgent& agent,
                          int max_steps, const std::string& instance_id) {
    EpisodeResult result;
    result.final_env = std::make_unique<SimEnvironment>(spec, instance_id);
    result.trajectory =
        run_loop(*result.final_env, goal, agent, max_steps,
                 core::AgentRole::policy);
    return result;
}

core::Trajectory run_on_env(SimEnvironment& env, const core::Goal& goal, SimAgent& agent,
                            int max_steps) {
    return run_loop(env, goal, agent, max_steps, core::AgentRole::evaluator);
}

} // namespace prore::simenv
