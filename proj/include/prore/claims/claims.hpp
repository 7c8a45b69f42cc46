#pragma once

#include <optional>
#include <string>
#include <vector>

#include "prore/claims/graph.hpp"
#include "prore/core/types.hpp"
#include "prore/llm/backend.hpp"

namespace prore::claims {

struct Claim {
    std::string id; // p1.., e1..
    core::AgentRole role = core::AgentRole::policy;
    std::vector<int> steps; // sorted original step indices
    std::string reasoning;
    std::string statement;
};

struct ClaimSet {
    core::AgentRole role = core::AgentRole::policy;
    std::vector<Claim> claims;
    std::string source_trajectory_id;

    bool empty() const { return claims.empty(); }
};

// Strict parse of the claims JSON schema
//   {"<role_key>": [{"steps": [...], "reasoning": str, "claim": str}, ...]}
// Step indices are 0-based observation indices and must be < traj_len; the
// claim count must land in [min_claims, max_claims] (0 claims are tolerated
// for the evaluator role only). A leading "Claims:" header is skipped.
ClaimSet parse_claims_json(const std::string& text, core::AgentRole role, int traj_len,
                           int min_claims, int max_claims);

std::string claims_to_json(const ClaimSet& set);

// Prompt-facing renderings of a trajectory. The step labels carry original
// observation indices; home screens are tagged so downstream consumers can
// skip them.
std::string render_action_history(const core::Trajectory& traj);
std::string render_html_states(const core::Trajectory& traj);
std::string describe_action(const core::Action& action);

/// Asks the backend for claims over an (already compressed) trajectory and
/// validates the reply. One repair-retry on malformed output, then a
/// claim-generation failure. A zero-step trajectory yields an empty evaluator
/// set without any backend call; for the policy role it is an error.
ClaimSet generate_claims(core::AgentRole role, const core::Goal& goal,
                         const core::Trajectory& traj, const std::string& action_history,
                         llm::LlmBackend& backend, const llm::PromptLibrary& prompts,
                         int min_claims, int max_claims);

} // namespace prore::claims
