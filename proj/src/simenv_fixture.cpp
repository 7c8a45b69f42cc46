#include "prore/simenv/fixture.hpp"

#include <filesystem>
#include <fstream>

#include "prore/core/jsonl.hpp"
#include "prore/core/text.hpp"
#include "prore/probing/probing.hpp"

namespace prore::simenv {

using nlohmann::json;
namespace fs = std::filesystem;

core::Action action_from_suite_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "tap") {
        core::ElementDescriptor d;
        d.text = j.at("target_text").get<std::string>();
        d.role = core::element_role_from_string(j.value("target_role", std::string("button")));
        return core::Action::tap(std::move(d));
    }
    if (kind == "type_text") {
        std::optional<core::ElementDescriptor> target;
        if (j.contains("target_text")) {
            core::ElementDescriptor d;
            d.text = j.at("target_text").get<std::string>();
            d.role = core::element_role_from_string(j.value("target_role", std::string("input")));
            target = std::move(d);
        }
        return core::Action::type_text(j.at("payload").get<std::string>(), std::move(target));
    }
    if (kind == "scroll") return core::Action::scroll();
    if (kind == "navigate_back") return core::Action::navigate_back();
    if (kind == "open_app") return core::Action::open_app(j.at("payload").get<std::string>());
    if (kind == "answer") return core::Action::answer(j.at("payload").get<std::string>());
    if (kind == "done") return core::Action::done();
    throw ParseError("suite action: unknown kind " + kind);
}

namespace {

json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open fixture file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError("fixture " + path + ": " + e.what());
    }
    return j;
}

TaskFixture task_from_json(const json& j, const fs::path& base_dir) {
    TaskFixture t;
    t.task_id = j.at("task_id").get<std::string>();
    t.world_file = (base_dir / j.at("world").get<std::string>()).string();
    t.goal = core::goal_from_json(j.at("goal"));
    t.adversarial = j.value("adversarial", false);
    t.pair_id = j.value("pair_id", t.task_id);
    t.variant = j.value("variant", std::string("success"));
    t.expected_reward = core::reward_value_from_string(j.at("expected_reward").get<std::string>());
    for (const auto& a : j.at("policy_script")) {
        t.policy_script.push_back(action_from_suite_json(a));
    }
    t.oracle = Oracle::from_json(j.at("oracle"));
    const json& stub = j.at("stub");
    t.stub.analysis = stub.at("analysis").get<std::string>();
    t.stub.key_states = stub.at("key_states").get<std::vector<std::string>>();
    t.stub.goals = stub.at("goals").get<std::vector<std::string>>();
    if (stub.contains("refined_goals")) {
        t.stub.refined_goals = stub.at("refined_goals").get<std::vector<std::string>>();
    }
    if (stub.contains("refined_analysis")) {
        t.stub.refined_analysis = stub.at("refined_analysis").get<std::string>();
    }
    t.reveal_screen = j.value("reveal_screen", std::string());
    t.exec_success_prob = j.value("exec_success_prob", 0.54);
    t.probe_success_prob = j.value("probe_success_prob", 0.66);
    return t;
}

} // namespace

FixtureSuite FixtureSuite::load(const std::string& suite_file) {
    const json suite_json = read_json_file(suite_file);
    const fs::path base_dir = fs::path(suite_file).parent_path();

    FixtureSuite suite;
    for (const auto& rel : suite_json.at("tasks")) {
        const std::string task_path = (base_dir / rel.get<std::string>()).string();
        suite.tasks.push_back(task_from_json(read_json_file(task_path), base_dir));
    }
    for (const auto& t : suite.tasks) {
        if (!suite.worlds.count(t.world_file)) {
            suite.worlds.emplace(t.world_file, load_world_spec(t.world_file));
        }
    }
    // Goal ids must be unique within a run.
    std::map<std::string, int> id_counts;
    for (const auto& t : suite.tasks) {
        if (++id_counts[t.goal.id] > 1) {
            throw ValidationError("suite: duplicate goal id " + t.goal.id);
        }
    }
    return suite;
}

const WorldSpec& FixtureSuite::world_for(const TaskFixture& task) const {
    auto it = worlds.find(task.world_file);
    if (it == worlds.end()) throw InputError("world not loaded: " + task.world_file);
    return it->second;
}

const TaskFixture* FixtureSuite::find(const std::string& task_id) const {
    for (const auto& t : tasks) {
        if (t.task_id == task_id) return &t;
    }
    return nullptr;
}

llm::StubKnowledge FixtureSuite::stub_knowledge(double match_threshold) const {
    llm::StubKnowledge knowledge;
    knowledge.match_threshold = match_threshold;
    for (const auto& t : tasks) {
        auto [it, inserted] = knowledge.by_instruction.emplace(t.goal.instruction, t.stub);
        if (!inserted && it->second.goals != t.stub.goals) {
            throw ValidationError("fixtures sharing instruction \"" + t.goal.instruction +
                                  "\" carry different stub schedules");
        }
    }
    return knowledge;
}

OracleRegistry FixtureSuite::oracle_registry() const {
    OracleRegistry registry;
    for (const auto& t : tasks) registry.register_oracle(t.goal.id, t.oracle);
    return registry;
}

namespace {

// The probe path per fixture: what the guided evaluator does on the
// policy-success world, recorded once and replayed by stochastic agents.
std::vector<core::Action> record_probe_script(const FixtureSuite& suite, const TaskFixture& task) {
    const WorldSpec& spec = suite.world_for(task);
    SimAgentConfig policy_cfg;
    policy_cfg.role = core::AgentRole::policy;
    policy_cfg.mode = SimAgentMode::scripted;
    policy_cfg.script = task.policy_script;
    SimAgent policy(policy_cfg, 0);
    EpisodeResult episode = run_episode(spec, task.goal, policy,
                                        static_cast<int>(task.policy_script.size()), "gap-policy");

    SimAgentConfig probe_cfg;
    probe_cfg.role = core::AgentRole::evaluator;
    probe_cfg.mode = SimAgentMode::guided;
    probe_cfg.app_hint = task.goal.app_hint;
    SimAgent probe(probe_cfg, 0);
    auto fork = episode.final_env->fork("gap-probe");
    const std::string probing_goal = task.stub.goals.empty() ? task.goal.instruction
                                                             : task.stub.goals.front();
    core::Goal probe_goal{task.goal.id + ":probe", probing_goal, task.goal.app_hint};
    core::Trajectory probe_traj =
        run_on_env(*fork, probe_goal, probe, static_cast<int>(task.policy_script.size()));
    std::vector<core::Action> script;
    for (const auto& s : probe_traj.steps) script.push_back(s.action);
    if (script.empty() || (script.back().kind != core::ActionKind::answer &&
                           script.back().kind != core::ActionKind::done)) {
        script.push_back(core::Action::done());
    }
    return script;
}

} // namespace

GapReport measure_execution_probing_gap(const FixtureSuite& suite, int episodes,
                                        std::uint64_t seed) {
    if (episodes < 1) throw InputError("gap measurement needs at least one episode");

    std::vector<const TaskFixture*> success_tasks;
    for (const auto& t : suite.tasks) {
        if (t.variant == "success") success_tasks.push_back(&t);
    }
    if (success_tasks.empty()) throw InputError("gap measurement needs success-variant fixtures");

    std::map<std::string, std::vector<core::Action>> probe_scripts;
    std::map<std::string, const TaskFixture*> fail_variant;
    for (const auto& t : suite.tasks) {
        if (t.variant == "failure") fail_variant[t.pair_id] = &t;
    }

    GapReport report;
    report.episodes = episodes;
    long long exec_hits = 0, probe_hits = 0;
    long long exec_steps = 0, probe_steps = 0;

    for (int e = 0; e < episodes; ++e) {
        const TaskFixture& task = *success_tasks[static_cast<std::size_t>(e) % success_tasks.size()];
        const WorldSpec& spec = suite.world_for(task);
        auto& probe_script = probe_scripts[task.task_id];
        if (probe_script.empty()) probe_script = record_probe_script(suite, task);

        // Execution episode.
        SimAgentConfig exec_cfg;
        exec_cfg.role = core::AgentRole::policy;
        exec_cfg.mode = SimAgentMode::stochastic;
        exec_cfg.success_prob = task.exec_success_prob;
        exec_cfg.script = task.policy_script;
        exec_cfg.seed = seed;
        if (auto it = fail_variant.find(task.pair_id); it != fail_variant.end()) {
            exec_cfg.fail_script = it->second->policy_script;
        }
        SimAgent exec_agent(exec_cfg, static_cast<std::uint64_t>(e));
        EpisodeResult exec_episode =
            run_episode(spec, task.goal, exec_agent,
                        static_cast<int>(task.policy_script.size()), "gap-exec");
        exec_steps += static_cast<long long>(exec_episode.trajectory.steps.size());
        if (task.oracle.check(*exec_episode.final_env)) ++exec_hits;

        // Probing episode, launched from the deterministic policy-success state.
        SimAgentConfig policy_cfg;
        policy_cfg.role = core::AgentRole::policy;
        policy_cfg.mode = SimAgentMode::scripted;
        policy_cfg.script = task.policy_script;
        SimAgent policy(policy_cfg, 0);
        EpisodeResult base = run_episode(spec, task.goal, policy,
                                         static_cast<int>(task.policy_script.size()), "gap-base");
        auto fork = base.final_env->fork("gap-probe-run");

        SimAgentConfig probe_cfg;
        probe_cfg.role = core::AgentRole::evaluator;
        probe_cfg.mode = SimAgentMode::stochastic;
        probe_cfg.success_prob = task.probe_success_prob;
        probe_cfg.script = probe_script;
        probe_cfg.seed = seed ^ 0x9e3779b97f4a7c15ULL;
        SimAgent probe_agent(probe_cfg, static_cast<std::uint64_t>(e));
        core::Goal probe_goal{task.goal.id + ":probe",
                              task.stub.goals.empty() ? task.goal.instruction
                                                      : task.stub.goals.front(),
                              task.goal.app_hint};
        core::Trajectory probe_traj =
            run_on_env(*fork, probe_goal, probe_agent, static_cast<int>(probe_script.size()));
        probe_steps += static_cast<long long>(probe_traj.steps.size());

        bool revealed = false;
        for (const auto& s : probe_traj.steps) {
            if (s.state.screen_id == task.reveal_screen) revealed = true;
        }
        if (probe_traj.final_state.screen_id == task.reveal_screen) revealed = true;
        const bool answered = !probe_traj.steps.empty() &&
                              probe_traj.steps.back().action.kind == core::ActionKind::answer;
        if (revealed && answered) ++probe_hits;
    }

    report.execution_sr = static_cast<double>(exec_hits) / episodes;
    report.probing_sr = static_cast<double>(probe_hits) / episodes;
    report.execution_mean_steps = static_cast<double>(exec_steps) / episodes;
    report.probing_mean_steps = static_cast<double>(probe_steps) / episodes;
    return report;
}

} // namespace prore::simenv
