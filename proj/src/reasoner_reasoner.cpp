#include "prore/reasoner/reasoner.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "prore/core/text.hpp"
#include "prore/llm/parse.hpp"

namespace prore::reasoner {

using nlohmann::json;

std::string to_string(PlanProvenance p) {
    switch (p) {
        case PlanProvenance::scheduled: return "scheduled";
        case PlanProvenance::rule_based: return "rule_based";
        case PlanProvenance::refined: return "refined";
    }
    return "scheduled";
}

std::string judgment_to_json(const Judgment& j) {
    json out;
    out["reward"] = core::to_string(j.reward.value);
    out["rationale"] = j.reward.rationale;
    out["low_confidence"] = j.low_confidence;
    json stage1 = json::array();
    for (const auto& [id, reason] : j.stage1_discarded) {
        stage1.push_back({{"claim", id}, {"reason", reason}});
    }
    out["stage1"] = std::move(stage1);
    json relations = json::array();
    for (const auto& e : j.stage2_relations.edges) {
        relations.push_back({{"policy", e.policy_claim_id},
                             {"evaluator", e.evaluator_claim_id},
                             {"relation", claims::to_string(e.relation)}});
    }
    out["relations"] = std::move(relations);
    out["raw_text"] = j.raw_text;
    return out.dump(2);
}

bool is_mutation_safe(const std::string& probing_goal) {
    static const std::set<std::string> kVerificationLead = {"verify", "check", "confirm",
                                                            "find", "what", "which", "is"};
    static const std::set<std::string> kMutationVerbs = {"delete", "create", "move",
                                                         "rename", "send", "set"};
    const auto tokens = text::tokenize(probing_goal);
    if (tokens.empty()) return false;
    if (kVerificationLead.count(text::to_lower(tokens.front()))) return true;
    return std::none_of(tokens.begin(), tokens.end(), [&](const std::string& t) {
        return kMutationVerbs.count(text::to_lower(t)) > 0;
    });
}

Reasoner::Reasoner(const llm::PromptLibrary& prompts, double key_state_threshold)
    : prompts_(prompts), key_state_threshold_(key_state_threshold) {}

namespace {

// Bullet lines of the analysis are the key states; sentences otherwise.
std::vector<std::string> key_states_from_analysis(const std::string& analysis) {
    std::vector<std::string> keys;
    for (const auto& line : text::split_lines(analysis)) {
        std::string t = text::trim(line);
        if (t.rfind("- ", 0) == 0) keys.push_back(text::trim(t.substr(2)));
    }
    return keys;
}

std::string render_claim_lines(const claims::ClaimSet& set) {
    if (set.claims.empty()) return "[none]";
    std::string out;
    for (const auto& c : set.claims) {
        std::string id = c.id;
        if (!id.empty()) id[0] = static_cast<char>(std::toupper(id[0]));
        out += id + " [steps ";
        for (std::size_t i = 0; i < c.steps.size(); ++i) {
            if (i) out += ", ";
            out += std::to_string(c.steps[i]);
        }
        out += "]: " + c.statement + "\n";
    }
    return text::trim(out);
}

std::string summarize_probe_states(const core::Trajectory& probe) {
    if (probe.steps.empty()) return "[no states collected]";
    std::string out;
    for (const auto& step : probe.steps) {
        out += "Step " + std::to_string(step.state.captured_at_step) + " (screen: " +
               step.state.screen_id + "): " + step.state.raw_text + "\n";
    }
    return text::trim(out);
}

} // namespace

ScheduleOutputParsed Reasoner::call_schedule(const core::Goal& goal,
                                             const std::string& previous_task,
                                             const std::string& collected_info,
                                             llm::LlmBackend& backend) const {
    const std::string prompt =
        prompts_.render_schedule(goal.instruction, previous_task, collected_info);
    auto attempt = [&](const std::string& body) {
        auto request = llm::ChatRequest::for_prompt(llm::PromptFamily::schedule, body);
        const std::string reply = llm::complete(request, backend);
        llm::ScheduleOutput parsed = llm::parse_schedule_output(reply);
        ScheduleOutputParsed out;
        out.analysis = parsed.analysis;
        out.key_states = key_states_from_analysis(parsed.analysis);
        out.goals = parsed.probing_goals;
        return out;
    };
    try {
        return attempt(prompt);
    } catch (const prore::ParseError&) {
        return attempt(prompt + "\n\nYour previous reply was malformed. "
                                "Follow the exact output format.");
    }
}

Expectation Reasoner::analyze_expectations(const core::Goal& goal, llm::LlmBackend& backend) const {
    goal.validate();
    ScheduleOutputParsed parsed = call_schedule(goal, "None.", "None.", backend);
    Expectation exp;
    exp.goal_id = goal.id;
    exp.analysis = parsed.analysis;
    exp.key_states = parsed.key_states;
    if (exp.analysis.empty()) throw ParseError("expectation analysis came back empty");
    return exp;
}

ProbingPlan Reasoner::rule_based_plan(const core::Goal& goal, int round) {
    ProbingPlan plan;
    plan.goal_id = goal.id;
    plan.round = round;
    plan.provenance = PlanProvenance::rule_based;
    plan.probing_goals = {"What are the key states to verify whether the task \"" +
                          goal.instruction + "\" is completed?"};
    plan.analysis = "Rule-based fallback probing task.";
    return plan;
}

ProbingPlan Reasoner::schedule_probing(const core::Goal& goal, const Expectation& expectation,
                                       llm::LlmBackend& backend) const {
    if (expectation.goal_id != goal.id) {
        throw InputError("schedule_probing: expectation belongs to goal " + expectation.goal_id);
    }
    try {
        ScheduleOutputParsed parsed = call_schedule(goal, "None.", "None.", backend);
        ProbingPlan plan;
        plan.goal_id = goal.id;
        plan.round = 1;
        plan.provenance = PlanProvenance::scheduled;
        plan.analysis = parsed.analysis;
        plan.probing_goals = parsed.goals;
        for (const auto& g : plan.probing_goals) {
            if (!is_mutation_safe(g)) {
                throw ParseError("scheduled probing goal fails the mutation check: " + g);
            }
        }
        if (plan.probing_goals.empty()) throw ParseError("no probing goals scheduled");
        return plan;
    } catch (const prore::Error&) {
        return rule_based_plan(goal, 1);
    }
}

ProbingPlan Reasoner::refine_probing(const core::Goal& goal, const Expectation& expectation,
                                     const ProbingPlan& previous,
                                     const core::Trajectory& probe_trajectory,
                                     llm::LlmBackend& backend) const {
    if (expectation.goal_id != goal.id) {
        throw InputError("refine_probing: expectation belongs to goal " + expectation.goal_id);
    }
    std::string previous_text;
    for (const auto& g : previous.probing_goals) previous_text += g + "\n";
    previous_text = text::trim(previous_text);

    try {
        ScheduleOutputParsed parsed = call_schedule(goal, previous_text,
                                                    summarize_probe_states(probe_trajectory),
                                                    backend);
        ProbingPlan plan;
        plan.goal_id = goal.id;
        plan.round = previous.round + 1;
        plan.provenance = PlanProvenance::refined;
        plan.analysis = parsed.analysis;
        plan.probing_goals = parsed.goals;
        for (const auto& g : plan.probing_goals) {
            if (!is_mutation_safe(g)) {
                throw ParseError("refined probing goal fails the mutation check: " + g);
            }
        }
        if (plan.probing_goals.empty()) throw ParseError("no probing goals in refinement");
        return plan;
    } catch (const prore::Error&) {
        ProbingPlan plan = previous; // fixed point on failure
        plan.round = previous.round + 1;
        plan.provenance = PlanProvenance::refined;
        return plan;
    }
}

Judgment Reasoner::judge_with_claims(const core::Goal& goal, const Expectation& expectation,
                                     const claims::ClaimSet& policy_claims,
                                     const claims::ClaimSet& evaluator_claims,
                                     llm::LlmBackend& backend) const {
    (void)expectation; // audit mapping works off the claim ids in the reply
    const std::string prompt =
        prompts_.render_judge(goal.instruction, render_claim_lines(policy_claims),
                              render_claim_lines(evaluator_claims));

    std::string reply;
    llm::JudgeOutput parsed;
    bool parsed_ok = false;
    try {
        auto request = llm::ChatRequest::for_prompt(llm::PromptFamily::judge, prompt);
        reply = llm::complete(request, backend);
        parsed = llm::parse_judge_output(reply);
        parsed_ok = true;
    } catch (const prore::Error&) {
        try {
            auto request = llm::ChatRequest::for_prompt(
                llm::PromptFamily::judge,
                prompt + "\n\nYour previous reply was malformed. Follow the exact output format.");
            reply = llm::complete(request, backend);
            parsed = llm::parse_judge_output(reply);
            parsed_ok = true;
        } catch (const prore::Error&) {
            parsed_ok = false;
        }
    }

    Judgment judgment;
    judgment.raw_text = reply;
    if (!parsed_ok) {
        judgment.reward.value = core::RewardValue::failure;
        judgment.reward.rationale = "unparseable judgment";
        judgment.low_confidence = true;
        for (const auto& c : evaluator_claims.claims) {
            judgment.stage1_discarded.emplace_back(c.id, "judgment unparseable");
        }
        return judgment;
    }

    judgment.reward.value = parsed.status;
    judgment.reward.rationale = parsed.analysis;
    judgment.reward.relation_audit = "stage2_relations";
    judgment.low_confidence =
        evaluator_claims.claims.empty() ||
        parsed.analysis.find("low-confidence") != std::string::npos;

    std::set<std::string> known_policy, known_evaluator;
    for (const auto& c : policy_claims.claims) known_policy.insert(c.id);
    for (const auto& c : evaluator_claims.claims) known_evaluator.insert(c.id);

    // Audit lines: "- discarded E2: reason" and "- P1 vs E3: relation".
    for (const auto& line : text::split_lines(parsed.analysis)) {
        std::string t = text::trim(line);
        if (t.rfind("- discarded ", 0) == 0) {
            std::size_t colon = t.find(':', 12);
            if (colon == std::string::npos) continue;
            std::string id = text::to_lower(text::trim(t.substr(12, colon - 12)));
            if (known_evaluator.count(id)) {
                judgment.stage1_discarded.emplace_back(id, text::trim(t.substr(colon + 1)));
            }
            continue;
        }
        if (t.rfind("- ", 0) == 0) {
            std::size_t vs = t.find(" vs ");
            std::size_t colon = t.find(": ", vs == std::string::npos ? 0 : vs);
            if (vs == std::string::npos || colon == std::string::npos) continue;
            std::string pid = text::to_lower(text::trim(t.substr(2, vs - 2)));
            std::string eid = text::to_lower(text::trim(t.substr(vs + 4, colon - vs - 4)));
            std::string rel = text::trim(t.substr(colon + 2));
            if (!known_policy.count(pid) || !known_evaluator.count(eid)) continue;
            try {
                judgment.stage2_relations.add_unique(
                    claims::RelationEdge{pid, eid, claims::relation_from_string(rel)});
            } catch (const prore::ParseError&) {
                // unknown relation label; drop the line
            }
        }
    }

    // Coverage: every evaluator claim must land in stage 1 or stage 2.
    std::set<std::string> covered;
    for (const auto& [id, reason] : judgment.stage1_discarded) {
        (void)reason;
        covered.insert(id);
    }
    for (const auto& e : judgment.stage2_relations.edges) covered.insert(e.evaluator_claim_id);
    for (const auto& c : evaluator_claims.claims) {
        if (!covered.count(c.id)) {
            judgment.stage1_discarded.emplace_back(c.id, "unreferenced by judge output");
        }
    }
    return judgment;
}

} // namespace prore::reasoner
