#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "prore/llm/stub.hpp"
#include "prore/pipeline/pipeline.hpp"
#include "prore/simenv/fixture.hpp"

namespace prore::cli {

// Exit-code contract: 0 clean, 1 evaluation produced failures to examine
// (mispredictions or per-item errors), 2 usage/IO error.
constexpr int kExitOk = 0;
constexpr int kExitFindings = 1;
constexpr int kExitUsage = 2;

std::shared_ptr<llm::LlmBackend> make_backend(const pipeline::RewardRunConfig& config,
                                              const simenv::FixtureSuite& suite);

/// Rolls every fixture's policy script, wires environment factories and the
/// guided evaluator, and runs the reward batch against the simenv oracles.
pipeline::BatchResult run_suite_evaluation(const simenv::FixtureSuite& suite,
                                           const llm::PromptLibrary& prompts,
                                           std::shared_ptr<llm::LlmBackend> backend,
                                           const pipeline::RewardRunConfig& config,
                                           const std::string& run_dir);

struct TtsLoopReport {
    double success_rate = 0.0;
    double mean_submitted_trial = 0.0;
    double early_stop_rate = 0.0;
    int episodes = 0;
    int budget = 0;
};

/// Test-time scaling over paired fixtures: a stochastic policy re-rolls up to
/// budget_n times; the configured reward pipeline decides when to stop early.
/// Success is scored by the ground-truth oracle on the submitted trial.
TtsLoopReport run_tts_loop_on_suite(const simenv::FixtureSuite& suite,
                                    const llm::PromptLibrary& prompts,
                                    std::shared_ptr<llm::LlmBackend> backend,
                                    pipeline::RewardRunConfig config, double policy_success_prob,
                                    int budget_n, int episodes, std::uint64_t seed,
                                    bool adversarial_only);

struct EvaluateOptions {
    std::string config_path;
    std::string suite_path;
    std::string out_dir;
    std::string judge; // empty = config value
    std::optional<std::uint64_t> seed;
    int parallelism = 0; // 0 = config value
    std::string assets_dir;
};

int cmd_evaluate(const EvaluateOptions& options);

struct TtsSimOptions {
    double p_a = 0.6;
    double p_c = 0.9;
    int budget_n = 5;
    long long trials = 50000;
    std::uint64_t seed = 17;
    std::string mode = "formula_consistent";
    bool sweep = false;
    std::string sweep_out;       // CSV path for --sweep
    std::string discrepancy_out; // CSV path for the fallback-assumption report
};

int cmd_tts_sim(const TtsSimOptions& options);

struct TtsLoopOptions {
    std::string suite_path;
    std::string config_path;
    std::string judge = "prore";
    double p_a = 0.6;
    int budget_n = 5;
    int episodes = 50;
    std::uint64_t seed = 17;
    bool adversarial_only = false;
    std::string assets_dir;
};

int cmd_tts_loop(const TtsLoopOptions& options);

struct ReplayOptions {
    std::string run_dir;
    std::string goal_id;
    std::string suite_path;
    std::string assets_dir;
    double key_state_threshold = 0.6;
};

int cmd_replay(const ReplayOptions& options);

struct ReportOptions {
    std::string run_dir;
};

int cmd_report(const ReportOptions& options);

} // namespace prore::cli
