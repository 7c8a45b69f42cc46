#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "prore/llm/stub.hpp"
#include "prore/reasoner/reasoner.hpp"

using namespace prore;

namespace {

const llm::PromptLibrary& prompts() {
    static llm::PromptLibrary lib = llm::PromptLibrary::load(llm::default_assets_dir());
    return lib;
}

llm::StubKnowledge timer_knowledge() {
    llm::StubKnowledge k;
    llm::ScheduleEntry e;
    e.analysis = "The timer detail page must read the requested duration and a paused status.";
    e.key_states = {"The Timer Detail screen shows \"Duration: 00:16:35\"",
                    "The Timer Detail screen shows \"Status: Paused\""};
    e.goals = {"Confirm the timer is set to 16 minutes and 35 seconds and is not running."};
    e.refined_goals = {"Check the timer detail page duration and status rows."};
    k.by_instruction["Create a timer with 0 hours, 16 minutes, and 35 seconds. Do not start the timer."] = e;

    llm::ScheduleEntry bad;
    bad.analysis = "This entry schedules a mutating instruction on purpose.";
    bad.key_states = {"whatever"};
    bad.goals = {"Delete the timer entry from the list."};
    k.by_instruction["Mutating schedule test."] = bad;
    return k;
}

const core::Goal kTimerGoal{"t1",
                            "Create a timer with 0 hours, 16 minutes, and 35 seconds. Do not start the timer.",
                            "Clock"};

claims::ClaimSet make_set(core::AgentRole role, const std::vector<std::string>& statements) {
    claims::ClaimSet set;
    set.role = role;
    const char prefix = role == core::AgentRole::policy ? 'p' : 'e';
    int i = 0;
    for (const auto& s : statements) {
        claims::Claim c;
        c.role = role;
        c.id = std::string(1, prefix) + std::to_string(++i);
        c.steps = {i};
        c.statement = s;
        c.reasoning = "test";
        set.claims.push_back(c);
    }
    return set;
}

// Backend that returns the same junk for everything.
struct GarbageBackend : llm::LlmBackend {
    std::string complete(const llm::ChatRequest&) override { return "beep boop no format"; }
    std::string kind() const override { return "garbage"; }
};

} // namespace

TEST_CASE("analyze_expectations extracts analysis and key states") {
    llm::ScriptedStubBackend stub(timer_knowledge());
    reasoner::Reasoner reasoner(prompts());
    reasoner::Expectation exp = reasoner.analyze_expectations(kTimerGoal, stub);
    CHECK(exp.goal_id == "t1");
    CHECK(exp.analysis.find("paused status") != std::string::npos);
    REQUIRE(exp.key_states.size() == 2);
    CHECK(exp.key_states[0].find("Duration: 00:16:35") != std::string::npos);

    core::Goal unknown{"u", "Totally unscripted instruction.", std::nullopt};
    CHECK_THROWS_AS(reasoner.analyze_expectations(unknown, stub), Error);
}

TEST_CASE("schedule_probing produces a mutation-safe scheduled plan") {
    llm::ScriptedStubBackend stub(timer_knowledge());
    reasoner::Reasoner reasoner(prompts());
    reasoner::Expectation exp = reasoner.analyze_expectations(kTimerGoal, stub);
    reasoner::ProbingPlan plan = reasoner.schedule_probing(kTimerGoal, exp, stub);
    CHECK(plan.provenance == reasoner::PlanProvenance::scheduled);
    CHECK(plan.round == 1);
    REQUIRE(plan.probing_goals.size() == 1);
    CHECK(plan.probing_goals[0] ==
          "Confirm the timer is set to 16 minutes and 35 seconds and is not running.");
    for (const auto& g : plan.probing_goals) CHECK(reasoner::is_mutation_safe(g));
}

TEST_CASE("schedule failures fall back to the rule-based plan") {
    llm::ScriptedStubBackend stub(timer_knowledge());
    reasoner::Reasoner reasoner(prompts());

    core::Goal unknown{"u", "Totally unscripted instruction.", std::nullopt};
    reasoner::Expectation exp{"u", "synthetic", {}};
    reasoner::ProbingPlan fallback = reasoner.schedule_probing(unknown, exp, stub);
    CHECK(fallback.provenance == reasoner::PlanProvenance::rule_based);
    REQUIRE(fallback.probing_goals.size() == 1);
    CHECK(fallback.probing_goals[0].find("What are the key states to verify") == 0);
    CHECK(reasoner::is_mutation_safe(fallback.probing_goals[0]));

    // a scheduled plan whose goal fails the mutation check is rejected too
    core::Goal mutating{"m", "Mutating schedule test.", std::nullopt};
    reasoner::Expectation mexp{"m", "synthetic", {}};
    reasoner::ProbingPlan safe = reasoner.schedule_probing(mutating, mexp, stub);
    CHECK(safe.provenance == reasoner::PlanProvenance::rule_based);

    CHECK_THROWS_AS(reasoner.schedule_probing(kTimerGoal, mexp, stub), InputError);
}

TEST_CASE("refine_probing increments rounds; unknown goals keep the previous plan") {
    llm::ScriptedStubBackend stub(timer_knowledge());
    reasoner::Reasoner reasoner(prompts());
    reasoner::Expectation exp = reasoner.analyze_expectations(kTimerGoal, stub);
    reasoner::ProbingPlan first = reasoner.schedule_probing(kTimerGoal, exp, stub);

    core::Trajectory probe;
    probe.goal = core::Goal{"t1:probe", first.probing_goals[0], std::nullopt};
    probe.agent_role = core::AgentRole::evaluator;
    probe.final_state.captured_at_step = 0;

    reasoner::ProbingPlan second = reasoner.refine_probing(kTimerGoal, exp, first, probe, stub);
    CHECK(second.round == 2);
    CHECK(second.provenance == reasoner::PlanProvenance::refined);
    REQUIRE(second.probing_goals.size() == 1);
    CHECK(second.probing_goals[0] == "Check the timer detail page duration and status rows.");

    GarbageBackend garbage;
    reasoner::ProbingPlan fixed = reasoner.refine_probing(kTimerGoal, exp, second, probe, garbage);
    CHECK(fixed.round == 3);
    CHECK(fixed.provenance == reasoner::PlanProvenance::refined);
    CHECK(fixed.probing_goals == second.probing_goals); // fixed point on failure
}

TEST_CASE("judge_with_claims confirms key states and emits a full audit") {
    llm::ScriptedStubBackend stub(timer_knowledge());
    reasoner::Reasoner reasoner(prompts());
    reasoner::Expectation exp = reasoner.analyze_expectations(kTimerGoal, stub);

    auto policy = make_set(core::AgentRole::policy,
                           {"Tapped \"Create\" on the Timer Editor screen.",
                            "The Timers screen lists 1 items: Timer 00:16:35.",
                            "Typed \"16\" on the Timer Editor screen."});
    auto evaluator = make_set(core::AgentRole::evaluator,
                              {"The Timer Detail screen shows \"Duration: 00:16:35\".",
                               "The Timer Detail screen shows \"Status: Paused\".",
                               "Evaluator action: scrolled the Timers screen while inspecting."});

    reasoner::Judgment judgment =
        reasoner.judge_with_claims(kTimerGoal, exp, policy, evaluator, stub);
    CHECK(judgment.reward.value == core::RewardValue::success);

    // every evaluator claim lands in stage 1 or the relation graph
    std::set<std::string> covered;
    for (const auto& [id, reason] : judgment.stage1_discarded) {
        (void)reason;
        covered.insert(id);
    }
    for (const auto& e : judgment.stage2_relations.edges) covered.insert(e.evaluator_claim_id);
    for (const auto& c : evaluator.claims) CHECK(covered.count(c.id) == 1);

    // the self-action claim is filtered in stage 1
    bool e3_discarded = false;
    for (const auto& [id, reason] : judgment.stage1_discarded) {
        if (id == "e3") {
            e3_discarded = true;
            CHECK(reason.find("own action") != std::string::npos);
        }
    }
    CHECK(e3_discarded);

    const std::string json_text = reasoner::judgment_to_json(judgment);
    CHECK(json_text.find("\"reward\": \"success\"") != std::string::npos);
    CHECK(json_text.find("\"relations\"") != std::string::npos);
}

TEST_CASE("judge contradictions force failure; no evidence falls back low-confidence") {
    llm::ScriptedStubBackend stub(timer_knowledge());
    reasoner::Reasoner reasoner(prompts());
    reasoner::Expectation exp = reasoner.analyze_expectations(kTimerGoal, stub);
    auto policy = make_set(core::AgentRole::policy,
                           {"The Timers screen lists 1 items: Timer 00:16:35."});

    auto contradicting = make_set(core::AgentRole::evaluator,
                                  {"The Timer Detail screen shows \"Duration: 00:16:35\".",
                                   "The Timer Detail screen shows \"Status: Running\"."});
    reasoner::Judgment bad =
        reasoner.judge_with_claims(kTimerGoal, exp, policy, contradicting, stub);
    CHECK(bad.reward.value == core::RewardValue::failure);

    claims::ClaimSet none;
    none.role = core::AgentRole::evaluator;
    reasoner::Judgment blind = reasoner.judge_with_claims(kTimerGoal, exp, policy, none, stub);
    CHECK(blind.reward.value == core::RewardValue::failure); // keys unverified
    CHECK(blind.low_confidence);
}

TEST_CASE("unparseable judge output yields the conservative failure verdict") {
    GarbageBackend garbage;
    reasoner::Reasoner reasoner(prompts());
    reasoner::Expectation exp{"t1", "synthetic", {"whatever key"}};
    auto policy = make_set(core::AgentRole::policy, {"claim A"});
    auto evaluator = make_set(core::AgentRole::evaluator, {"claim B"});
    reasoner::Judgment judgment =
        reasoner.judge_with_claims(kTimerGoal, exp, policy, evaluator, garbage);
    CHECK(judgment.reward.value == core::RewardValue::failure);
    CHECK(judgment.reward.rationale == "unparseable judgment");
    // totality: the evaluator claim still lands in the audit
    CHECK(judgment.stage1_discarded.size() == 1);
}

TEST_CASE("mutation-safety vocabulary") {
    CHECK(reasoner::is_mutation_safe("Find the note shy_king_copy.md in the MeetingMinutes folder."));
    CHECK(reasoner::is_mutation_safe("What is the phone number for the contact Hugo Pereira?"));
    CHECK(reasoner::is_mutation_safe(
        "Confirm the timer is set to 16 minutes and 35 seconds and is not running."));
    CHECK(reasoner::is_mutation_safe("Verify the pro expense list contains no duplicate entries."));
    // verification lead word excuses an embedded mutation verb
    CHECK(reasoner::is_mutation_safe("Check whether the move of the note completed."));
    CHECK_FALSE(reasoner::is_mutation_safe("Delete the note from the folder."));
    CHECK_FALSE(reasoner::is_mutation_safe("Please move the file to DCIM."));
    CHECK_FALSE(reasoner::is_mutation_safe("Now create a fresh contact entry."));
    CHECK_FALSE(reasoner::is_mutation_safe(""));
}

TEST_CASE("scripted-stub judgments are bit-deterministic") {
    llm::ScriptedStubBackend stub(timer_knowledge());
    reasoner::Reasoner reasoner(prompts());
    reasoner::Expectation exp = reasoner.analyze_expectations(kTimerGoal, stub);
    auto policy = make_set(core::AgentRole::policy, {"The Timers screen lists 1 items."});
    auto evaluator = make_set(core::AgentRole::evaluator,
                              {"The Timer Detail screen shows \"Duration: 00:16:35\".",
                               "The Timer Detail screen shows \"Status: Paused\"."});
    reasoner::Judgment a = reasoner.judge_with_claims(kTimerGoal, exp, policy, evaluator, stub);
    reasoner::Judgment b = reasoner.judge_with_claims(kTimerGoal, exp, policy, evaluator, stub);
    CHECK(a.raw_text == b.raw_text);
    CHECK(reasoner::judgment_to_json(a) == reasoner::judgment_to_json(b));
}
