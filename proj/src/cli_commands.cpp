#include "prore/cli/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "prore/core/jsonl.hpp"
#include "prore/core/text.hpp"
#include "prore/tts/tts.hpp"

namespace prore::cli {

using nlohmann::json;
namespace fs = std::filesystem;

std::shared_ptr<llm::LlmBackend> make_backend(const pipeline::RewardRunConfig& config,
                                              const simenv::FixtureSuite& suite) {
    if (config.backend_kind == "scripted_stub") {
        return std::make_shared<llm::ScriptedStubBackend>(
            suite.stub_knowledge(config.key_state_threshold));
    }
    if (config.backend_kind == "http_chat_endpoint") {
        return std::make_shared<llm::HttpChatBackend>(config.backend_config);
    }
    if (config.backend_kind == "record_replay") {
        std::shared_ptr<llm::LlmBackend> inner;
        const auto it = config.backend_config.find("inner");
        if (it == config.backend_config.end() || it->second == "scripted_stub") {
            inner = std::make_shared<llm::ScriptedStubBackend>(
                suite.stub_knowledge(config.key_state_threshold));
        } else if (it->second == "http_chat_endpoint") {
            inner = std::make_shared<llm::HttpChatBackend>(config.backend_config);
        }
        const auto path = config.backend_config.count("cassette_path")
                              ? config.backend_config.at("cassette_path")
                              : "cassette.jsonl";
        const bool strict = config.backend_config.count("strict") &&
                            config.backend_config.at("strict") == "true";
        return std::make_shared<llm::RecordReplayBackend>(inner, path, strict);
    }
    throw InputError("unknown backend kind: " + config.backend_kind);
}

namespace {

struct PreparedItem {
    pipeline::BatchItem item;
    std::shared_ptr<simenv::SimEnvironment> final_env;
};

std::vector<PreparedItem> prepare_items(const simenv::FixtureSuite& suite,
                                        const pipeline::RewardRunConfig& config) {
    (void)config;
    std::vector<PreparedItem> prepared;
    for (const auto& task : suite.tasks) {
        const simenv::WorldSpec& spec = suite.world_for(task);

        simenv::SimAgentConfig policy_cfg;
        policy_cfg.role = core::AgentRole::policy;
        policy_cfg.mode = simenv::SimAgentMode::scripted;
        policy_cfg.script = task.policy_script;
        simenv::SimAgent policy(policy_cfg, 0);
        simenv::EpisodeResult episode =
            simenv::run_episode(spec, task.goal, policy,
                                static_cast<int>(task.policy_script.size()), task.task_id);

        PreparedItem p;
        p.final_env = std::shared_ptr<simenv::SimEnvironment>(std::move(episode.final_env));
        p.item.goal = task.goal;
        p.item.trajectory = std::move(episode.trajectory);
        p.item.oracle_truth = task.oracle.check(*p.final_env) ? core::RewardValue::success
                                                              : core::RewardValue::failure;

        auto final_env = p.final_env;
        auto world = std::make_shared<simenv::WorldSpec>(spec);
        auto app_hint = task.goal.app_hint;
        p.item.env_factory.fork_final = [final_env](const std::string& id) {
            return std::unique_ptr<probing::Environment>(final_env->fork(id));
        };
        p.item.env_factory.make_fresh = [world]() {
            return std::unique_ptr<probing::Environment>(
                std::make_unique<simenv::SimEnvironment>(*world, "fresh"));
        };
        p.item.env_factory.make_evaluator = [app_hint]() {
            simenv::SimAgentConfig cfg;
            cfg.role = core::AgentRole::evaluator;
            cfg.mode = simenv::SimAgentMode::guided;
            cfg.app_hint = app_hint;
            return simenv::make_agent_fn(cfg, 0);
        };
        prepared.push_back(std::move(p));
    }
    return prepared;
}

} // namespace

pipeline::BatchResult run_suite_evaluation(const simenv::FixtureSuite& suite,
                                           const llm::PromptLibrary& prompts,
                                           std::shared_ptr<llm::LlmBackend> backend,
                                           const pipeline::RewardRunConfig& config,
                                           const std::string& run_dir) {
    pipeline::RewardPipeline pipe(prompts, std::move(backend), config);
    std::vector<PreparedItem> prepared = prepare_items(suite, config);
    std::vector<pipeline::BatchItem> items;
    items.reserve(prepared.size());
    for (auto& p : prepared) items.push_back(p.item);
    return pipeline::assign_reward_batch(pipe, items, run_dir, config.parallelism);
}

TtsLoopReport run_tts_loop_on_suite(const simenv::FixtureSuite& suite,
                                    const llm::PromptLibrary& prompts,
                                    std::shared_ptr<llm::LlmBackend> backend,
                                    pipeline::RewardRunConfig config, double policy_success_prob,
                                    int budget_n, int episodes, std::uint64_t seed,
                                    bool adversarial_only) {
    struct Pair {
        const simenv::TaskFixture* success = nullptr;
        const simenv::TaskFixture* failure = nullptr;
    };
    std::map<std::string, Pair> pairs;
    for (const auto& t : suite.tasks) {
        if (adversarial_only && !t.adversarial) continue;
        if (t.variant == "success") pairs[t.pair_id].success = &t;
        if (t.variant == "failure") pairs[t.pair_id].failure = &t;
    }
    std::vector<Pair> usable;
    for (const auto& [id, p] : pairs) {
        if (p.success && p.failure) usable.push_back(p);
    }
    if (usable.empty()) throw InputError("tts loop: no usable success/failure pairs in suite");

    pipeline::RewardPipeline pipe(prompts, std::move(backend), config);

    long long hits = 0, trial_sum = 0, early = 0;
    for (int e = 0; e < episodes; ++e) {
        const Pair& pair = usable[static_cast<std::size_t>(e) % usable.size()];
        const simenv::TaskFixture& task = *pair.success;
        const simenv::WorldSpec& spec = suite.world_for(task);

        tts::TrialRunner runner = [&](int trial) {
            simenv::SimAgentConfig cfg;
            cfg.role = core::AgentRole::policy;
            cfg.mode = simenv::SimAgentMode::stochastic;
            cfg.success_prob = policy_success_prob;
            cfg.script = task.policy_script;
            cfg.fail_script = pair.failure->policy_script;
            cfg.seed = seed;
            const std::uint64_t episode_index =
                static_cast<std::uint64_t>(e) * 1000ULL + static_cast<std::uint64_t>(trial);
            simenv::SimAgent agent(cfg, episode_index);
            const int max_steps = static_cast<int>(
                std::max(task.policy_script.size(), pair.failure->policy_script.size()));
            simenv::EpisodeResult rollout =
                simenv::run_episode(spec, task.goal, agent, max_steps, task.task_id);

            auto final_env = std::shared_ptr<simenv::SimEnvironment>(std::move(rollout.final_env));
            pipeline::EnvFactory factory;
            factory.fork_final = [final_env](const std::string& id) {
                return std::unique_ptr<probing::Environment>(final_env->fork(id));
            };
            auto world = std::make_shared<simenv::WorldSpec>(spec);
            factory.make_fresh = [world]() {
                return std::unique_ptr<probing::Environment>(
                    std::make_unique<simenv::SimEnvironment>(*world, "fresh"));
            };
            auto app_hint = task.goal.app_hint;
            factory.make_evaluator = [app_hint]() {
                simenv::SimAgentConfig probe_cfg;
                probe_cfg.role = core::AgentRole::evaluator;
                probe_cfg.mode = simenv::SimAgentMode::guided;
                probe_cfg.app_hint = app_hint;
                return simenv::make_agent_fn(probe_cfg, 0);
            };

            pipeline::RewardRunRecord record =
                pipe.assign_reward(task.goal, rollout.trajectory, factory);
            tts::TrialResult result;
            result.judged_success = record.final_outcome.value == core::RewardValue::success;
            result.oracle_success = task.oracle.check(*final_env);
            return result;
        };

        tts::EpisodeOutcome outcome = tts::run_tts_loop(runner, budget_n);
        if (outcome.submitted_success) ++hits;
        trial_sum += outcome.submitted_trial;
        if (outcome.stopped_early) ++early;
    }

    TtsLoopReport report;
    report.episodes = episodes;
    report.budget = budget_n;
    report.success_rate = static_cast<double>(hits) / episodes;
    report.mean_submitted_trial = static_cast<double>(trial_sum) / episodes;
    report.early_stop_rate = static_cast<double>(early) / episodes;
    return report;
}

namespace {

void print_metrics_table(const core::Metrics& m, const std::string& judge_mode) {
    std::cout << std::left << std::setw(18) << "judge" << std::setw(10) << "accuracy"
              << std::setw(10) << "f1" << std::setw(6) << "tp" << std::setw(6) << "tn"
              << std::setw(6) << "fp" << std::setw(6) << "fn" << std::setw(6) << "n" << "\n";
    std::cout << std::left << std::setw(18) << judge_mode << std::setw(10) << std::fixed
              << std::setprecision(4) << m.accuracy << std::setw(10) << m.f1 << std::setw(6)
              << m.tp << std::setw(6) << m.tn << std::setw(6) << m.fp << std::setw(6) << m.fn
              << std::setw(6) << m.total() << "\n";
}

json metrics_json(const core::Metrics& m, const pipeline::RewardRunConfig& config) {
    json j;
    j["accuracy"] = m.accuracy;
    j["f1"] = m.f1;
    j["tp"] = m.tp;
    j["tn"] = m.tn;
    j["fp"] = m.fp;
    j["fn"] = m.fn;
    j["n"] = m.total();
    j["config_hash"] = config.config_hash();
    j["seed"] = config.seed;
    return j;
}

} // namespace

namespace {

// "trajectory-only" and "trajectory_only" are both accepted on the CLI.
std::string normalize_judge(std::string judge) {
    std::replace(judge.begin(), judge.end(), '-', '_');
    return judge;
}

} // namespace

int cmd_evaluate(const EvaluateOptions& options) {
    pipeline::RewardRunConfig config;
    if (!options.config_path.empty()) config = pipeline::RewardRunConfig::load(options.config_path);
    if (!options.judge.empty()) config.judge_mode = normalize_judge(options.judge);
    if (options.seed) config.seed = *options.seed;
    if (options.parallelism > 0) config.parallelism = options.parallelism;
    config.validate();

    const std::string assets =
        options.assets_dir.empty() ? llm::default_assets_dir() : options.assets_dir;
    llm::PromptLibrary prompts = llm::PromptLibrary::load(assets);
    simenv::FixtureSuite suite = simenv::FixtureSuite::load(options.suite_path);
    auto backend = make_backend(config, suite);

    fs::create_directories(options.out_dir);
    const std::string run_dir = (fs::path(options.out_dir) / "runs").string();
    std::cout << "seed: " << config.seed << "  config_hash: " << config.config_hash() << "\n";

    pipeline::BatchResult batch =
        run_suite_evaluation(suite, prompts, backend, config, run_dir);

    bool findings = false;
    for (std::size_t i = 0; i < batch.records.size(); ++i) {
        const auto& r = batch.records[i];
        const bool match = batch.predictions[i] == batch.truths[i];
        if (!match || !r.error.empty()) findings = true;
        std::cout << std::left << std::setw(28) << r.goal.id << " predicted="
                  << std::setw(8) << core::to_string(batch.predictions[i])
                  << " truth=" << std::setw(8) << core::to_string(batch.truths[i])
                  << (match ? "  ok" : "  MISMATCH") << (r.resumed ? "  (resumed)" : "")
                  << (r.error.empty() ? "" : "  error: " + r.error) << "\n";
    }
    print_metrics_table(batch.metrics, config.judge_mode);

    std::ofstream out(fs::path(options.out_dir) / "metrics.json", std::ios::binary);
    if (!out) throw IoError("cannot write metrics.json under " + options.out_dir);
    out << metrics_json(batch.metrics, config).dump(2) << "\n";

    return findings ? kExitFindings : kExitOk;
}

int cmd_tts_sim(const TtsSimOptions& options) {
    const tts::SimMode mode = tts::sim_mode_from_string(options.mode);
    if (options.sweep) {
        std::vector<double> p_a_grid, p_c_grid;
        for (double v = 0.2; v <= 0.81; v += 0.2) p_a_grid.push_back(v);
        for (double v = 0.5; v <= 1.001; v += 0.1) p_c_grid.push_back(v);
        const std::vector<int> n_grid = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
        auto rows = tts::sweep_grid(p_a_grid, p_c_grid, n_grid, options.trials, options.seed, mode);
        const std::string csv = tts::sweep_to_csv(rows);
        if (options.sweep_out.empty()) {
            std::cout << csv;
        } else {
            std::ofstream out(options.sweep_out, std::ios::binary);
            if (!out) throw IoError("cannot write sweep CSV: " + options.sweep_out);
            out << csv;
            std::cout << "sweep written to " << options.sweep_out << " (" << rows.size()
                      << " rows)\n";
        }
        return kExitOk;
    }
    if (!options.discrepancy_out.empty()) {
        auto rows = tts::discrepancy_report(options.p_a, options.p_c, {1, 2, 3}, options.trials,
                                            options.seed);
        std::ofstream out(options.discrepancy_out, std::ios::binary);
        if (!out) throw IoError("cannot write discrepancy CSV: " + options.discrepancy_out);
        out << tts::discrepancy_to_csv(options.p_a, options.p_c, rows);
        std::cout << "discrepancy report written to " << options.discrepancy_out << "\n";
        return kExitOk;
    }

    tts::TtsConfig config{options.p_a, options.p_c, options.budget_n, options.trials, options.seed,
                          mode};
    tts::TtsEstimate est = tts::simulate_tts(config);
    std::cout << "seed: " << options.seed << "  rng: " << tts::SplitMix64::kAlgorithmId << "\n";
    std::cout << std::fixed << std::setprecision(6) << "analytic " << est.analytic << "  mc "
              << est.monte_carlo << "  stderr " << est.std_error << "  samples " << est.samples
              << "  mode " << tts::to_string(mode) << "\n";
    return kExitOk;
}

int cmd_tts_loop(const TtsLoopOptions& options) {
    pipeline::RewardRunConfig config;
    if (!options.config_path.empty()) config = pipeline::RewardRunConfig::load(options.config_path);
    config.judge_mode = normalize_judge(options.judge);
    config.seed = options.seed;
    config.validate();

    const std::string assets =
        options.assets_dir.empty() ? llm::default_assets_dir() : options.assets_dir;
    llm::PromptLibrary prompts = llm::PromptLibrary::load(assets);
    simenv::FixtureSuite suite = simenv::FixtureSuite::load(options.suite_path);
    auto backend = make_backend(config, suite);

    std::cout << "seed: " << options.seed << "\n";
    TtsLoopReport report =
        run_tts_loop_on_suite(suite, prompts, backend, config, options.p_a, options.budget_n,
                              options.episodes, options.seed, options.adversarial_only);
    std::cout << std::fixed << std::setprecision(4) << "judge=" << options.judge
              << " episodes=" << report.episodes << " budget=" << report.budget
              << " SR=" << report.success_rate
              << " mean_submitted_trial=" << std::setprecision(2)
              << report.mean_submitted_trial << " early_stop_rate=" << std::setprecision(4)
              << report.early_stop_rate << "\n";
    return kExitOk;
}

int cmd_replay(const ReplayOptions& options) {
    const std::string assets =
        options.assets_dir.empty() ? llm::default_assets_dir() : options.assets_dir;
    llm::PromptLibrary prompts = llm::PromptLibrary::load(assets);
    simenv::FixtureSuite suite = simenv::FixtureSuite::load(options.suite_path);
    auto backend = std::make_shared<llm::ScriptedStubBackend>(
        suite.stub_knowledge(options.key_state_threshold));

    pipeline::ReplayReport report =
        pipeline::replay_record(options.run_dir, options.goal_id, prompts, *backend);
    if (report.pass) {
        std::cout << "PASS " << options.goal_id << "\n";
        return kExitOk;
    }
    std::cout << "DIFF " << options.goal_id << "\n";
    for (const auto& d : report.differences) std::cout << "  - " << d << "\n";
    return kExitFindings;
}

int cmd_report(const ReportOptions& options) {
    const fs::path run_dir(options.run_dir);
    if (!fs::exists(run_dir)) throw IoError("run directory missing: " + options.run_dir);

    std::cout << std::left << std::setw(28) << "goal" << std::setw(10) << "reward" << std::setw(8)
              << "votes" << std::setw(12) << "tie_broken" << std::setw(12) << "tokens~"
              << "\n";
    int rows = 0;
    for (const auto& entry : fs::directory_iterator(run_dir)) {
        if (!entry.is_directory()) continue;
        const fs::path outcome_path = entry.path() / "outcome.json";
        if (!fs::exists(outcome_path)) continue;
        std::ifstream in(outcome_path, std::ios::binary);
        json outcome;
        in >> outcome;
        std::cout << std::left << std::setw(28)
                  << outcome.at("goal").value("id", entry.path().filename().string())
                  << std::setw(10) << outcome.value("reward", std::string("?")) << std::setw(8)
                  << outcome.value("votes", json::array()).size() << std::setw(12)
                  << (outcome.value("tie_broken", false) ? "yes" : "no") << std::setw(12)
                  << outcome.value("approx_tokens", 0LL) << "\n";
        ++rows;
    }
    if (rows == 0) {
        std::cout << "(no records)\n";
        return kExitFindings;
    }
    return kExitOk;
}

} // namespace prore::cli
