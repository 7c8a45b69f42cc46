#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "prore/core/types.hpp"
#include "prore/llm/stub.hpp"
#include "prore/simenv/agent.hpp"
#include "prore/simenv/oracle.hpp"
#include "prore/simenv/world.hpp"

namespace prore::simenv {

/// One evaluated task: a goal over a bundled world, the policy script that
/// produced the trajectory under judgment, the ground-truth oracle, and the
/// knowledge entry that drives the scripted reasoner stub.
struct TaskFixture {
    std::string task_id;
    std::string world_file;
    core::Goal goal;
    bool adversarial = false;
    std::string pair_id;      // shared by success/failure variants of a goal
    std::string variant;      // "success" | "failure"
    core::RewardValue expected_reward = core::RewardValue::failure;
    std::vector<core::Action> policy_script;
    Oracle oracle;
    llm::ScheduleEntry stub;
    std::string reveal_screen; // screen whose observation decides the verdict
    double exec_success_prob = 0.54;
    double probe_success_prob = 0.66;
};

struct FixtureSuite {
    std::vector<TaskFixture> tasks;
    std::map<std::string, WorldSpec> worlds; // keyed by world_file

    static FixtureSuite load(const std::string& suite_file);

    const WorldSpec& world_for(const TaskFixture& task) const;
    const TaskFixture* find(const std::string& task_id) const;

    // Schedule/judgment table for the scripted stub, merged across fixtures.
    llm::StubKnowledge stub_knowledge(double match_threshold) const;
    OracleRegistry oracle_registry() const;
};

core::Action action_from_suite_json(const nlohmann::json& j);

/// Execution-vs-probing comparison over seeded episodes (stochastic agents
/// parameterized per fixture). Probing success means the probe's trajectory
/// reached the fixture's reveal screen.
struct GapReport {
    double execution_sr = 0.0;
    double probing_sr = 0.0;
    double execution_mean_steps = 0.0;
    double probing_mean_steps = 0.0;
    int episodes = 0;
};

GapReport measure_execution_probing_gap(const FixtureSuite& suite, int episodes,
                                        std::uint64_t seed);

} // namespace prore::simenv
