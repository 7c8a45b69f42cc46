#pragma once

#include <string>
#include <utility>
#include <vector>

#include "prore/claims/claims.hpp"
#include "prore/core/types.hpp"
#include "prore/llm/backend.hpp"
#include "prore/llm/stub.hpp"

namespace prore::reasoner {

struct Expectation {
    std::string goal_id;
    std::string analysis;
    std::vector<std::string> key_states;
};

enum class PlanProvenance { scheduled, rule_based, refined };

std::string to_string(PlanProvenance p);

struct ProbingPlan {
    std::string goal_id;
    int round = 1;
    std::vector<std::string> probing_goals;
    PlanProvenance provenance = PlanProvenance::scheduled;
    std::string analysis;
};

struct Judgment {
    core::RewardOutcome reward;
    std::vector<std::pair<std::string, std::string>> stage1_discarded; // (claim id, reason)
    claims::ClaimGraph stage2_relations;
    std::string raw_text;
    bool low_confidence = false;
};

std::string judgment_to_json(const Judgment& j);

// Lexical read-only check for probing goals: a goal passing it never opens
// with a bare mutation verb (delete/create/move/rename/send/set) unless it is
// phrased as verification (verify/check/confirm/find/what/which/is).
bool is_mutation_safe(const std::string& probing_goal);

// Carrier for a parsed schedule reply (analysis, key-state bullets, goals).
struct ScheduleOutputParsed {
    std::string analysis;
    std::vector<std::string> key_states;
    std::vector<std::string> goals;
};

/// The general-purpose reasoner: expectation analysis, probing-task
/// scheduling and refinement, and the final chain-of-claims judgment.
/// Stateless over immutable inputs; safe to share across goals.
class Reasoner {
public:
    Reasoner(const llm::PromptLibrary& prompts, double key_state_threshold = 0.6);

    // Exp = reasoner(goal): the analysis section of the schedule prompt with
    // its bullet lines as key states. Throws on backend/parse failure after
    // one repair retry.
    Expectation analyze_expectations(const core::Goal& goal, llm::LlmBackend& backend) const;

    // Falls back to the rule-based plan when the backend output cannot be
    // parsed (after one retry) or a scheduled goal fails the mutation check.
    ProbingPlan schedule_probing(const core::Goal& goal, const Expectation& expectation,
                                 llm::LlmBackend& backend) const;

    ProbingPlan refine_probing(const core::Goal& goal, const Expectation& expectation,
                               const ProbingPlan& previous, const core::Trajectory& probe_trajectory,
                               llm::LlmBackend& backend) const;

    // Renders the judge prompt over both claim sets, parses the final status
    // plus the stage-1/stage-2 audit lines. Unparseable output after one
    // retry yields a conservative failure verdict. Every evaluator claim ends
    // up either discarded or in the relation graph.
    Judgment judge_with_claims(const core::Goal& goal, const Expectation& expectation,
                               const claims::ClaimSet& policy_claims,
                               const claims::ClaimSet& evaluator_claims,
                               llm::LlmBackend& backend) const;

    static ProbingPlan rule_based_plan(const core::Goal& goal, int round = 1);

    const llm::PromptLibrary& prompts() const { return prompts_; }

private:
    ScheduleOutputParsed call_schedule(const core::Goal& goal, const std::string& previous_task,
                                       const std::string& collected_info,
                                       llm::LlmBackend& backend) const;

    const llm::PromptLibrary& prompts_;
    double key_state_threshold_;
};

} // namespace prore::reasoner
