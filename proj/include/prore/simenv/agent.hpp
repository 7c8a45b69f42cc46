#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "prore/core/types.hpp"
#include "prore/probing/env.hpp"
#include "prore/simenv/world.hpp"

namespace prore::simenv {

enum class SimAgentMode { scripted, stochastic, guided };

SimAgentMode agent_mode_from_string(const std::string& s);

struct SimAgentConfig {
    core::AgentRole role = core::AgentRole::policy;
    SimAgentMode mode = SimAgentMode::scripted;
    double success_prob = 1.0;              // stochastic mode only
    std::vector<core::Action> script;       // the correct path
    std::vector<core::Action> fail_script;  // optional explicit derail path
    std::uint64_t seed = 0;
    std::optional<std::string> app_hint;

    void validate() const;
};

/// One agent instance bound to one episode. Scripted mode replays the script;
/// stochastic mode decides success once per episode from (seed, episode) and
/// either replays the script or derails after a prefix; guided mode is a
/// deterministic navigator for probing goals (tap entity matches, then
/// goal-token matches, scroll containers to the end, back out, answer).
class SimAgent {
public:
    SimAgent(SimAgentConfig config, std::uint64_t episode_index);

    core::Action act(const core::UiState& observation, const std::string& goal_text);

    bool episode_success_drawn() const { return episode_success_; }

private:
    core::Action guided_act(const core::UiState& obs, const std::string& goal_text);

    SimAgentConfig config_;
    bool episode_success_ = true;
    std::vector<core::Action> plan_;
    std::size_t cursor_ = 0;

    // guided-mode state
    std::set<std::string> tapped_;
    std::set<std::string> backed_from_;
    std::string cached_goal_;
    std::vector<std::string> goal_tokens_;
    std::vector<std::string> entities_;
};

core::Action sim_agent_act(SimAgent& agent, const core::UiState& observation,
                           const std::string& goal_text);

probing::AgentFn make_agent_fn(const SimAgentConfig& config, std::uint64_t episode_index);

struct EpisodeResult {
    core::Trajectory trajectory;
    std::unique_ptr<SimEnvironment> final_env;
};

/// Rolls an agent in a fresh instance of the world until it answers/finishes
/// or max_steps is hit. The trajectory records the observation before each
/// action plus the final observation.
EpisodeResult run_episode(const WorldSpec& spec, const core::Goal& goal, SimAgent& agent,
                          int max_steps, const std::string& instance_id);

// Same loop against an existing environment (used for probes in tests).
core::Trajectory run_on_env(SimEnvironment& env, const core::Goal& goal, SimAgent& agent,
                            int max_steps);

} // namespace prore::simenv
