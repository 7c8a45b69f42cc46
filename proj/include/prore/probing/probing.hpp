#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "prore/core/types.hpp"
#include "prore/probing/env.hpp"

namespace prore::probing {

enum class ProbeTermination { answered, budget_exhausted, agent_done, error };

std::string to_string(ProbeTermination t);

struct ProbeResult {
    int plan_round = 1;
    core::Trajectory trajectory; // agent_role = evaluator
    int budget_used = 0;
    ProbeTermination terminated = ProbeTermination::error;
    std::string instance_id;
    std::string error_message;
};

/// Score = 0.5 * token overlap of texts + 0.3 * [same role] + 0.2 * attribute
/// key overlap. Token overlap counts descriptor tokens with an exact or
/// prefix (>= 3 chars) counterpart, normalized by the larger token count;
/// empty descriptor text or attributes score their component as 1. Ties break
/// to the lowest element_id.
double element_match_score(const core::ElementDescriptor& descriptor, const core::UiElement& candidate);

const core::UiElement& fuzzy_match_element(const core::ElementDescriptor& descriptor,
                                           const std::vector<core::UiElement>& candidates,
                                           double threshold);

/// Observe -> evaluator action -> environment step, until the agent answers,
/// finishes, or the budget runs out. Every observation is recorded; an
/// environment fault yields terminated=error with the partial trajectory.
ProbeResult run_probe(Environment& env, const AgentFn& evaluator, const core::Goal& original_goal,
                      const std::string& probing_goal, int budget, int plan_round = 1,
                      int step_index_base = 0);

/// Re-executes recorded actions on a fresh instance, re-grounding each
/// targeted action on the live screen via fuzzy matching. Returns the final
/// state; a step whose target cannot be matched above the threshold throws.
core::UiState replay_actions(Environment& fresh_env, const std::vector<core::Action>& recorded,
                             double match_threshold);

using ProbeTask = std::function<ProbeResult(Environment&)>;
using EnvProvider = std::function<std::unique_ptr<Environment>(int instance_index)>;

/// Runs the same probe task on K isolated instances concurrently. A slot
/// whose instance cannot be provisioned (or whose probe throws) reports
/// terminated=error; the call only fails if every slot failed to provision.
std::vector<ProbeResult> parallel_probe(const EnvProvider& provider, const ProbeTask& task, int k);

struct VoteRecord {
    std::vector<core::RewardValue> votes;
    core::RewardValue decision = core::RewardValue::failure;
    bool tie_broken = false;
};

// Strict majority; an even split decides failure with tie_broken set.
VoteRecord aggregate_majority(const std::vector<core::RewardValue>& votes);

} // namespace prore::probing
