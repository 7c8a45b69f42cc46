#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "prore/claims/claims.hpp"
#include "prore/claims/compress.hpp"
#include "prore/core/metrics.hpp"
#include "prore/core/types.hpp"
#include "prore/llm/backend.hpp"
#include "prore/probing/probing.hpp"
#include "prore/reasoner/reasoner.hpp"

namespace prore::pipeline {

struct RewardRunConfig {
    int parallel_k = 3;
    int iterative_rounds = 2;
    std::optional<int> probe_budget; // default: policy trajectory length
    double fuzzy_threshold = 0.6;
    double key_state_threshold = 0.6;
    int min_claims = 3;
    int max_claims = 8;
    std::uint64_t seed = 0;
    std::string judge_mode = "prore"; // or "trajectory_only"
    bool merge_then_judge = false;    // pool evaluator claims into one judgment
    int parallelism = 1;
    std::string backend_kind = "scripted_stub";
    std::map<std::string, std::string> backend_config;

    void validate() const;
    nlohmann::json to_json() const;
    static RewardRunConfig from_json(const nlohmann::json& j);
    static RewardRunConfig load(const std::string& path);
    std::string config_hash() const; // FNV-1a over the canonical JSON dump
};

/// How the pipeline gets environment instances: a fresh instance at the
/// task's initial state (for action replay) and, when the environment
/// supports it, a snapshot of the policy agent's final state.
struct EnvFactory {
    std::function<std::unique_ptr<probing::Environment>()> make_fresh;
    std::function<std::unique_ptr<probing::Environment>(const std::string& instance_id)> fork_final;
    std::function<probing::AgentFn()> make_evaluator; // fresh navigator per probe
};

struct VoteArtifacts {
    int instance = 0;
    std::vector<reasoner::ProbingPlan> plans;       // one per round
    std::vector<probing::ProbeResult> probes;       // one per round
    claims::ClaimSet evaluator_claims;              // from the final round's probe
    reasoner::Judgment judgment;
};

struct RewardRunRecord {
    core::Goal goal;
    core::RewardOutcome final_outcome;
    probing::VoteRecord vote;
    reasoner::Expectation expectation;
    claims::ClaimSet policy_claims;
    core::Trajectory compressed_policy;
    std::vector<VoteArtifacts> votes;
    int policy_length = 0;
    int max_probe_steps = 0;
    long long approx_prompt_chars = 0; // tokens ~ chars/4, approximate by design
    double wall_seconds = 0.0;
    bool resumed = false;
    std::string error;

    long long approx_tokens() const { return approx_prompt_chars / 4; }
};

/// End-to-end reward assignment: compress, analyze, schedule, probe in
/// parallel with iterative refinement, extract claims, judge per instance,
/// majority-vote. Deterministic under the scripted stub and a deterministic
/// environment.
class RewardPipeline {
public:
    RewardPipeline(const llm::PromptLibrary& prompts, std::shared_ptr<llm::LlmBackend> backend,
                   RewardRunConfig config);

    RewardRunRecord assign_reward(const core::Goal& goal, const core::Trajectory& policy_trajectory,
                                  const EnvFactory& env_factory) const;

    const RewardRunConfig& config() const { return config_; }
    llm::LlmBackend& backend() const { return *backend_; }
    const llm::PromptLibrary& prompts() const { return prompts_; }

private:
    struct CountingBackend;

    const llm::PromptLibrary& prompts_;
    std::shared_ptr<llm::LlmBackend> backend_;
    RewardRunConfig config_;
    reasoner::Reasoner reasoner_;
};

struct BatchItem {
    core::Goal goal;
    core::Trajectory trajectory;
    EnvFactory env_factory;
    core::RewardValue oracle_truth = core::RewardValue::failure;
};

struct BatchResult {
    core::Metrics metrics;
    std::vector<RewardRunRecord> records;
    std::vector<core::RewardValue> predictions;
    std::vector<core::RewardValue> truths;
};

/// Runs the batch with up to `parallelism` items in flight, persisting every
/// record under run_dir and skipping items whose stored outcome carries the
/// same config hash (resumability). The probe-budget law (probe steps <=
/// policy steps) is asserted for every record.
BatchResult assign_reward_batch(const RewardPipeline& pipeline, const std::vector<BatchItem>& items,
                                const std::string& run_dir, int parallelism);

// Run-directory persistence (one directory per goal).
void persist_record(const std::string& run_dir, const RewardRunRecord& record,
                    const RewardRunConfig& config);
std::optional<core::RewardValue> load_persisted_outcome(const std::string& run_dir,
                                                        const std::string& goal_id,
                                                        const std::string& config_hash);

struct ReplayReport {
    bool pass = false;
    std::vector<std::string> differences;
};

/// Re-derives the verdict of a persisted record from its artifacts alone
/// (claims files re-judged through the backend, artifact hashes compared)
/// and diffs against the stored outcome.
ReplayReport replay_record(const std::string& run_dir, const std::string& goal_id,
                           const llm::PromptLibrary& prompts, llm::LlmBackend& backend);

} // namespace prore::pipeline
