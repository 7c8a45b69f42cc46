#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "prore/cli/commands.hpp"
#include "prore/claims/compress.hpp"
#include "prore/core/jsonl.hpp"
#include "prore/pipeline/pipeline.hpp"
#include "prore/core/text.hpp"
#include "prore/simenv/fixture.hpp"

using namespace prore;
namespace fs = std::filesystem;

namespace {

const llm::PromptLibrary& prompts() {
    static llm::PromptLibrary lib = llm::PromptLibrary::load(llm::default_assets_dir());
    return lib;
}

const simenv::FixtureSuite& suite() {
    static simenv::FixtureSuite s =
        simenv::FixtureSuite::load(llm::default_fixtures_dir() + "/suite.json");
    return s;
}

std::shared_ptr<llm::LlmBackend> stub_backend() {
    return std::make_shared<llm::ScriptedStubBackend>(suite().stub_knowledge(0.6));
}

struct RolledFixture {
    core::Trajectory trajectory;
    std::shared_ptr<simenv::SimEnvironment> final_env;
    pipeline::EnvFactory factory;
    core::RewardValue truth = core::RewardValue::failure;
};

RolledFixture roll(const simenv::TaskFixture& task, bool allow_snapshot = true) {
    const simenv::WorldSpec& spec = suite().world_for(task);
    simenv::SimAgentConfig cfg;
    cfg.mode = simenv::SimAgentMode::scripted;
    cfg.script = task.policy_script;
    simenv::SimAgent agent(cfg, 0);
    simenv::EpisodeResult ep = simenv::run_episode(
        spec, task.goal, agent, static_cast<int>(task.policy_script.size()), task.task_id);

    RolledFixture out;
    out.final_env = std::shared_ptr<simenv::SimEnvironment>(std::move(ep.final_env));
    out.trajectory = std::move(ep.trajectory);
    out.truth = task.oracle.check(*out.final_env) ? core::RewardValue::success
                                                  : core::RewardValue::failure;
    auto final_env = out.final_env;
    if (allow_snapshot) {
        out.factory.fork_final = [final_env](const std::string& id) {
            return std::unique_ptr<probing::Environment>(final_env->fork(id));
        };
    }
    auto world = std::make_shared<simenv::WorldSpec>(spec);
    out.factory.make_fresh = [world]() {
        return std::unique_ptr<probing::Environment>(
            std::make_unique<simenv::SimEnvironment>(*world, "fresh"));
    };
    auto hint = task.goal.app_hint;
    out.factory.make_evaluator = [hint]() {
        simenv::SimAgentConfig probe_cfg;
        probe_cfg.role = core::AgentRole::evaluator;
        probe_cfg.mode = simenv::SimAgentMode::guided;
        probe_cfg.app_hint = hint;
        return simenv::make_agent_fn(probe_cfg, 0);
    };
    return out;
}

} // namespace

TEST_CASE("bundled suite shape: >= 30 tasks, >= 5 apps, >= 10 adversarial") {
    CHECK(suite().tasks.size() >= 30);
    CHECK(suite().worlds.size() >= 5);
    int adversarial = 0;
    for (const auto& t : suite().tasks) {
        if (t.adversarial) ++adversarial;
        CHECK_FALSE(t.policy_script.empty());
        CHECK_FALSE(t.stub.goals.empty());
        for (const auto& g : t.stub.goals) {
            CHECK(reasoner::is_mutation_safe(g));
            // probing goals stay short (soft 20-word limit)
            CHECK(text::tokenize(g).size() <= 20);
        }
    }
    CHECK(adversarial >= 10);
}

TEST_CASE("fixture oracles agree with the declared expected rewards") {
    for (const auto& task : suite().tasks) {
        RolledFixture rolled = roll(task);
        CHECK_MESSAGE(rolled.truth == task.expected_reward, task.task_id);
    }
}

TEST_CASE("adversarial pairs leave byte-identical final screens") {
    std::map<std::string, std::vector<const simenv::TaskFixture*>> pairs;
    for (const auto& t : suite().tasks) {
        if (t.adversarial) pairs[t.pair_id].push_back(&t);
    }
    CHECK(pairs.size() >= 5);
    for (const auto& [pair_id, members] : pairs) {
        REQUIRE_MESSAGE(members.size() >= 2, pair_id);
        RolledFixture a = roll(*members[0]);
        RolledFixture b = roll(*members[1]);
        CHECK_MESSAGE(a.trajectory.final_state.raw_text == b.trajectory.final_state.raw_text,
                      (pair_id + ": final screens must be indistinguishable"));
    }
}

TEST_CASE("probes reach each fixture's revealing screen within the policy budget") {
    for (const auto& task : suite().tasks) {
        if (task.variant != "success") continue;
        RolledFixture rolled = roll(task);
        auto fork = rolled.final_env->fork("probe");
        simenv::SimAgentConfig cfg;
        cfg.role = core::AgentRole::evaluator;
        cfg.mode = simenv::SimAgentMode::guided;
        cfg.app_hint = task.goal.app_hint;
        simenv::SimAgent agent(cfg, 0);
        core::Goal probing{task.task_id + ":p", task.stub.goals.front(), task.goal.app_hint};
        core::Trajectory probe = simenv::run_on_env(
            *fork, probing, agent, static_cast<int>(task.policy_script.size()));
        bool revealed = probe.final_state.screen_id == task.reveal_screen;
        for (const auto& s : probe.steps) revealed |= s.state.screen_id == task.reveal_screen;
        CHECK_MESSAGE(revealed, (task.task_id + ": probe must visit " + task.reveal_screen));
        CHECK_MESSAGE(probe.steps.size() <= task.policy_script.size(),
                      (task.task_id + ": probe exceeds the policy budget"));
        REQUIRE(!probe.steps.empty());
        CHECK(probe.steps.back().action.kind == core::ActionKind::answer);
    }
}

TEST_CASE("assign_reward mirrors the quantitative example: 5-step probe vs 11-step policy") {
    const simenv::TaskFixture& task = *suite().find("markor_move_ok");
    RolledFixture rolled = roll(task);
    CHECK(rolled.trajectory.steps.size() == 11);

    pipeline::RewardRunConfig config;
    config.iterative_rounds = 1;
    pipeline::RewardPipeline pipe(prompts(), stub_backend(), config);
    pipeline::RewardRunRecord record =
        pipe.assign_reward(task.goal, rolled.trajectory, rolled.factory);

    CHECK(record.final_outcome.value == core::RewardValue::success);
    CHECK(record.policy_length == 11);
    CHECK(record.max_probe_steps == 5);
    CHECK(record.vote.votes.size() == 3); // parallel_K defaults to 3
    REQUIRE(!record.votes.empty());
    // the winning judgment carries a confirmed relation on the location claim
    bool confirmed_edge = false;
    for (const auto& e : record.votes[0].judgment.stage2_relations.edges) {
        if (e.relation == claims::Relation::confirmed) confirmed_edge = true;
    }
    CHECK(confirmed_edge);
    CHECK(record.error.empty());
    CHECK(record.approx_tokens() > 0);
}

TEST_CASE("the skipped-move variant fails through contradicting evidence") {
    const simenv::TaskFixture& task = *suite().find("markor_move_skip");
    RolledFixture rolled = roll(task);
    pipeline::RewardRunConfig config;
    config.parallel_k = 1;
    config.iterative_rounds = 1;
    pipeline::RewardPipeline pipe(prompts(), stub_backend(), config);
    pipeline::RewardRunRecord record =
        pipe.assign_reward(task.goal, rolled.trajectory, rolled.factory);
    CHECK(record.final_outcome.value == core::RewardValue::failure);
    bool saw_absence_claim = false;
    for (const auto& c : record.votes[0].evaluator_claims.claims) {
        if (c.statement.find("absent") != std::string::npos) saw_absence_claim = true;
    }
    CHECK(saw_absence_claim);
}

TEST_CASE("replay fallback (no snapshot capability) reaches the same verdict") {
    const simenv::TaskFixture& task = *suite().find("contacts_create_ok");
    RolledFixture rolled = roll(task, /*allow_snapshot=*/false);
    CHECK_FALSE(rolled.factory.fork_final);
    pipeline::RewardRunConfig config;
    config.parallel_k = 1;
    config.iterative_rounds = 1;
    pipeline::RewardPipeline pipe(prompts(), stub_backend(), config);
    pipeline::RewardRunRecord record =
        pipe.assign_reward(task.goal, rolled.trajectory, rolled.factory);
    CHECK(record.final_outcome.value == core::RewardValue::success);
    CHECK(record.error.empty());
}

TEST_CASE("iterative refinement records one plan per round and re-probes") {
    const simenv::TaskFixture& task = *suite().find("markor_move_ok");
    RolledFixture rolled = roll(task);
    pipeline::RewardRunConfig config;
    config.parallel_k = 1;
    config.iterative_rounds = 2;
    pipeline::RewardPipeline pipe(prompts(), stub_backend(), config);
    pipeline::RewardRunRecord record =
        pipe.assign_reward(task.goal, rolled.trajectory, rolled.factory);
    CHECK(record.final_outcome.value == core::RewardValue::success);
    REQUIRE(record.votes.size() == 1);
    REQUIRE(record.votes[0].plans.size() == 2);
    CHECK(record.votes[0].plans[0].round == 1);
    CHECK(record.votes[0].plans[0].provenance == reasoner::PlanProvenance::scheduled);
    CHECK(record.votes[0].plans[1].round == 2);
    CHECK(record.votes[0].plans[1].provenance == reasoner::PlanProvenance::refined);
    // refined plan swaps in the narrowed probing goal
    CHECK(record.votes[0].plans[1].probing_goals.front().find("Scroll the MeetingMinutes") == 0);
    // votes are one per parallel instance regardless of rounds
    CHECK(record.vote.votes.size() == 1);
}

TEST_CASE("merge-then-judge pools evaluator claims into a single ballot") {
    const simenv::TaskFixture& task = *suite().find("camera_two_ok");
    RolledFixture rolled = roll(task);
    pipeline::RewardRunConfig config;
    config.merge_then_judge = true;
    config.iterative_rounds = 1;
    pipeline::RewardPipeline pipe(prompts(), stub_backend(), config);
    pipeline::RewardRunRecord record =
        pipe.assign_reward(task.goal, rolled.trajectory, rolled.factory);
    CHECK(record.final_outcome.value == core::RewardValue::success);
    CHECK(record.vote.votes.size() == 1);
}

TEST_CASE("a faulted instance is outvoted by its healthy peers") {
    const simenv::TaskFixture& task = *suite().find("camera_two_ok");
    RolledFixture rolled = roll(task);
    auto final_env = rolled.final_env;
    int calls = 0;
    rolled.factory.fork_final = [final_env, &calls](const std::string& id)
        -> std::unique_ptr<probing::Environment> {
        if (++calls == 2) throw EnvError("injected provisioning fault");
        return final_env->fork(id);
    };
    pipeline::RewardRunConfig config;
    config.iterative_rounds = 1;
    pipeline::RewardPipeline pipe(prompts(), stub_backend(), config);
    pipeline::RewardRunRecord record =
        pipe.assign_reward(task.goal, rolled.trajectory, rolled.factory);
    // the faulted slot judges trajectory-only (failure), majority still wins
    CHECK(record.vote.votes.size() == 3);
    CHECK(record.final_outcome.value == core::RewardValue::success);
    int failures = 0;
    for (auto v : record.vote.votes) {
        if (v == core::RewardValue::failure) ++failures;
    }
    CHECK(failures == 1);
}

TEST_CASE("batch evaluation persists, resumes, and enforces the budget law") {
    const fs::path dir = fs::temp_directory_path() / "prore_batch_test";
    fs::remove_all(dir);

    std::vector<pipeline::BatchItem> items;
    std::vector<RolledFixture> keep_alive;
    for (const auto* id : {"camera_one_ok", "camera_one_miss"}) {
        const simenv::TaskFixture& task = *suite().find(id);
        RolledFixture rolled = roll(task);
        pipeline::BatchItem item;
        item.goal = task.goal;
        item.trajectory = rolled.trajectory;
        item.env_factory = rolled.factory;
        item.oracle_truth = rolled.truth;
        items.push_back(item);
        keep_alive.push_back(std::move(rolled));
    }

    pipeline::RewardRunConfig config;
    config.parallel_k = 1;
    config.iterative_rounds = 1;
    pipeline::RewardPipeline pipe(prompts(), stub_backend(), config);
    pipeline::BatchResult first = pipeline::assign_reward_batch(pipe, items, dir.string(), 1);
    CHECK(first.metrics.accuracy == 1.0);
    CHECK(fs::exists(dir / "camera_one_ok" / "outcome.json"));
    CHECK(fs::exists(dir / "camera_one_ok" / "claims_policy.json"));
    for (const auto& r : first.records) CHECK_FALSE(r.resumed);

    pipeline::BatchResult second = pipeline::assign_reward_batch(pipe, items, dir.string(), 1);
    for (const auto& r : second.records) CHECK(r.resumed);
    CHECK(second.metrics.accuracy == first.metrics.accuracy);

    // a changed config hash invalidates the stored outcomes
    pipeline::RewardRunConfig other = config;
    other.seed = 999;
    CHECK_FALSE(pipeline::load_persisted_outcome(dir.string(), "camera_one_ok",
                                                 other.config_hash())
                    .has_value());
    fs::remove_all(dir);
}

TEST_CASE("trajectory compression preserves stub claims and shrinks noisy traces") {
    const simenv::TaskFixture& task = *suite().find("markor_move_ok");
    RolledFixture rolled = roll(task);
    auto backend = stub_backend();

    // Inject noise: duplicate states (no-op taps), home-screen detours.
    core::Trajectory noisy = rolled.trajectory;
    std::vector<core::Step> steps;
    for (std::size_t i = 0; i < noisy.steps.size(); ++i) {
        steps.push_back(noisy.steps[i]);
        if (i == 2 || i == 5) { // stutter: same state, no-op action
            core::Step dup = noisy.steps[i];
            dup.action = core::Action::scroll();
            steps.push_back(dup);
            steps.push_back(noisy.steps[i]);
        }
        if (i == 7) { // home-screen detour
            core::Step home;
            home.state.screen_id = "home";
            home.state.is_home = true;
            home.state.raw_text = "<screen id=\"home\" title=\"Home\"></screen>";
            home.action = core::Action::navigate_back();
            steps.push_back(home);
        }
    }
    for (std::size_t i = 0; i < steps.size(); ++i) {
        steps[i].state.captured_at_step = static_cast<int>(i);
    }
    noisy.steps = steps;
    noisy.final_state.captured_at_step = static_cast<int>(steps.size());

    core::Trajectory compressed =
        claims::compress_trajectory(noisy, task.goal, backend.get(), &prompts());
    CHECK(compressed.steps.size() < noisy.steps.size());
    const double removed = 1.0 - static_cast<double>(compressed.steps.size()) /
                                     static_cast<double>(noisy.steps.size());
    CHECK(removed >= 0.2);
    CHECK(core::trajectory_to_jsonl(compressed).size() < core::trajectory_to_jsonl(noisy).size());

    // idempotent
    core::Trajectory twice =
        claims::compress_trajectory(compressed, task.goal, backend.get(), &prompts());
    CHECK(core::trajectory_to_jsonl(twice) == core::trajectory_to_jsonl(compressed));

    // claims unchanged between the noisy and compressed renderings
    claims::ClaimSet from_noisy = claims::generate_claims(
        core::AgentRole::policy, task.goal, noisy, claims::render_action_history(noisy), *backend,
        prompts(), 3, 8);
    claims::ClaimSet from_compressed = claims::generate_claims(
        core::AgentRole::policy, task.goal, compressed,
        claims::render_action_history(compressed), *backend, prompts(), 3, 8);
    CHECK(claims::claims_to_json(from_noisy) == claims::claims_to_json(from_compressed));
}

TEST_CASE("an unknown goal degrades to a rule-based probe and a conservative verdict") {
    const simenv::TaskFixture& task = *suite().find("camera_one_ok");
    RolledFixture rolled = roll(task);
    core::Goal unscripted{"mystery", "Completely unscripted mystery task.", "Camera"};
    core::Trajectory traj = rolled.trajectory;
    traj.goal = unscripted;

    pipeline::RewardRunConfig config;
    config.parallel_k = 1;
    config.iterative_rounds = 1;
    pipeline::RewardPipeline pipe(prompts(), stub_backend(), config);
    pipeline::RewardRunRecord record = pipe.assign_reward(unscripted, traj, rolled.factory);
    // no stub knowledge: judgment parsing fails conservatively
    CHECK(record.final_outcome.value == core::RewardValue::failure);
    CHECK(record.vote.votes.size() == 1);
}
