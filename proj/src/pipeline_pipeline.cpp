#include "prore/pipeline/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

#include "prore/core/jsonl.hpp"
#include "prore/core/text.hpp"

namespace prore::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;

void RewardRunConfig::validate() const {
    if (parallel_k < 1) throw InputError("config: parallel_K must be >= 1");
    if (iterative_rounds < 1) throw InputError("config: iterative_rounds must be >= 1");
    if (probe_budget && *probe_budget < 1) throw InputError("config: probe_budget must be >= 1");
    if (min_claims < 0 || max_claims < min_claims) {
        throw InputError("config: claim bounds must satisfy 0 <= min <= max");
    }
    if (fuzzy_threshold < 0.0 || fuzzy_threshold > 1.0) {
        throw InputError("config: fuzzy_threshold must be in [0,1]");
    }
    if (key_state_threshold < 0.0 || key_state_threshold > 1.0) {
        throw InputError("config: key_state_threshold must be in [0,1]");
    }
    if (parallelism < 1) throw InputError("config: parallelism must be >= 1");
    if (judge_mode != "prore" && judge_mode != "trajectory_only") {
        throw InputError("config: judge_mode must be prore or trajectory_only");
    }
}

json RewardRunConfig::to_json() const {
    json j;
    j["parallel_K"] = parallel_k;
    j["iterative_rounds"] = iterative_rounds;
    if (probe_budget) j["probe_budget"] = *probe_budget;
    j["fuzzy_threshold"] = fuzzy_threshold;
    j["key_state_threshold"] = key_state_threshold;
    j["min_claims"] = min_claims;
    j["max_claims"] = max_claims;
    j["seed"] = seed;
    j["judge_mode"] = judge_mode;
    j["merge_then_judge"] = merge_then_judge;
    j["parallelism"] = parallelism;
    j["backend"] = {{"kind", backend_kind}, {"config", backend_config}};
    return j;
}

RewardRunConfig RewardRunConfig::from_json(const json& j) {
    RewardRunConfig c;
    c.parallel_k = j.value("parallel_K", c.parallel_k);
    c.iterative_rounds = j.value("iterative_rounds", c.iterative_rounds);
    if (j.contains("probe_budget") && !j.at("probe_budget").is_null()) {
        c.probe_budget = j.at("probe_budget").get<int>();
    }
    c.fuzzy_threshold = j.value("fuzzy_threshold", c.fuzzy_threshold);
    c.key_state_threshold = j.value("key_state_threshold", c.key_state_threshold);
    c.min_claims = j.value("min_claims", c.min_claims);
    c.max_claims = j.value("max_claims", c.max_claims);
    c.seed = j.value("seed", c.seed);
    c.judge_mode = j.value("judge_mode", c.judge_mode);
    c.merge_then_judge = j.value("merge_then_judge", c.merge_then_judge);
    c.parallelism = j.value("parallelism", c.parallelism);
    if (j.contains("backend")) {
        c.backend_kind = j.at("backend").value("kind", c.backend_kind);
        if (j.at("backend").contains("config")) {
            c.backend_config =
                j.at("backend").at("config").get<std::map<std::string, std::string>>();
        }
    }
    c.validate();
    return c;
}

RewardRunConfig RewardRunConfig::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(std::string("config parse: ") + e.what());
    }
    return from_json(j);
}

std::string RewardRunConfig::config_hash() const {
    return text::hex64(text::fnv1a64(to_json().dump()));
}

// Counts prompt/response characters flowing through the backend.
struct RewardPipeline::CountingBackend final : llm::LlmBackend {
    llm::LlmBackend& inner;
    mutable std::atomic<long long> chars{0};

    explicit CountingBackend(llm::LlmBackend& b) : inner(b) {}

    std::string complete(const llm::ChatRequest& request) override {
        long long n = 0;
        for (const auto& m : request.messages) n += static_cast<long long>(m.content.size());
        std::string reply = inner.complete(request);
        chars += n + static_cast<long long>(reply.size());
        return reply;
    }
    std::string kind() const override { return inner.kind(); }
};

RewardPipeline::RewardPipeline(const llm::PromptLibrary& prompts,
                               std::shared_ptr<llm::LlmBackend> backend, RewardRunConfig config)
    : prompts_(prompts), backend_(std::move(backend)), config_(std::move(config)),
      reasoner_(prompts_, config_.key_state_threshold) {
    config_.validate();
    if (!backend_) throw InputError("pipeline: backend required");
}

namespace {

// Executes every goal of a plan sequentially on one instance under a shared
// step budget; the round's trajectory is their concatenation.
probing::ProbeResult probe_plan_round(probing::Environment& env, const EnvFactory& factory,
                                      const core::Goal& goal, const reasoner::ProbingPlan& plan,
                                      int budget) {
    probing::ProbeResult round_result;
    round_result.plan_round = plan.round;
    round_result.instance_id = env.instance_id();
    round_result.trajectory.agent_role = core::AgentRole::evaluator;
    std::string joined;
    for (const auto& g : plan.probing_goals) {
        if (!joined.empty()) joined += " ";
        joined += g;
    }
    round_result.trajectory.goal = core::Goal{goal.id + ":probe", joined, goal.app_hint};
    round_result.terminated = probing::ProbeTermination::budget_exhausted;

    int remaining = budget;
    int index_base = 0;
    for (const auto& probing_goal : plan.probing_goals) {
        if (remaining < 1) break;
        probing::AgentFn evaluator = factory.make_evaluator();
        probing::ProbeResult r =
            probing::run_probe(env, evaluator, goal, probing_goal, remaining, plan.round,
                               index_base);
        round_result.budget_used += r.budget_used;
        remaining -= r.budget_used;
        for (auto& s : r.trajectory.steps) round_result.trajectory.steps.push_back(std::move(s));
        round_result.trajectory.final_state = r.trajectory.final_state;
        round_result.terminated = r.terminated;
        index_base = r.trajectory.final_state.captured_at_step + 1;
        if (r.terminated == probing::ProbeTermination::error) break;
    }
    if (round_result.trajectory.steps.empty()) {
        round_result.trajectory.final_state = core::UiState{};
    }
    return round_result;
}

} // namespace

RewardRunRecord RewardPipeline::assign_reward(const core::Goal& goal,
                                              const core::Trajectory& policy_trajectory,
                                              const EnvFactory& env_factory) const {
    goal.validate();
    policy_trajectory.validate();

    CountingBackend counted(*backend_);
    const auto started = std::chrono::steady_clock::now();
    RewardRunRecord record;
    record.goal = goal;
    record.policy_length = static_cast<int>(policy_trajectory.steps.size());

    try {
        record.compressed_policy =
            claims::compress_trajectory(policy_trajectory, goal, &counted, &prompts_);

        // Expectations; scheduling failures degrade to the rule-based plan.
        try {
            record.expectation = reasoner_.analyze_expectations(goal, counted);
        } catch (const prore::Error&) {
            record.expectation =
                reasoner::Expectation{goal.id, "expectation analysis unavailable", {}};
        }

        record.policy_claims = claims::generate_claims(
            core::AgentRole::policy, goal, record.compressed_policy,
            claims::render_action_history(record.compressed_policy), counted, prompts_,
            config_.min_claims, config_.max_claims);

        const int budget = config_.probe_budget.value_or(
            std::max(1, static_cast<int>(policy_trajectory.steps.size())));

        std::vector<core::RewardValue> ballots;

        if (config_.judge_mode == "trajectory_only") {
            claims::ClaimSet empty_evaluator;
            empty_evaluator.role = core::AgentRole::evaluator;
            VoteArtifacts vote;
            vote.instance = 0;
            vote.judgment = reasoner_.judge_with_claims(goal, record.expectation,
                                                        record.policy_claims, empty_evaluator,
                                                        counted);
            ballots.push_back(vote.judgment.reward.value);
            record.votes.push_back(std::move(vote));
        } else {
            const reasoner::ProbingPlan initial_plan =
                reasoner_.schedule_probing(goal, record.expectation, counted);

            std::vector<core::Action> recorded_actions;
            for (const auto& s : policy_trajectory.steps) recorded_actions.push_back(s.action);

            // Snapshot-preferred provisioning of the policy agent's final
            // state, falling back to action replay on a fresh instance.
            auto provision = [&](const std::string& id) {
                if (env_factory.fork_final) {
                    if (auto env = env_factory.fork_final(id)) return env;
                }
                if (!env_factory.make_fresh) throw EnvError("no environment source configured");
                auto env = env_factory.make_fresh();
                probing::replay_actions(*env, recorded_actions, config_.fuzzy_threshold);
                return env;
            };

            probing::EnvProvider provider = [&](int instance) {
                return provision(goal.id + ":vote-" + std::to_string(instance));
            };

            // Each refinement round re-probes from a pristine copy of the
            // final state with the improved plan.
            probing::ProbeTask task = [&](probing::Environment& env) {
                probing::ProbeResult last;
                reasoner::ProbingPlan plan = initial_plan;
                for (int round = 1; round <= config_.iterative_rounds; ++round) {
                    if (round > 1) {
                        plan = reasoner_.refine_probing(goal, record.expectation, plan,
                                                        last.trajectory, counted);
                        auto fresh = provision(env.instance_id() + ":r" + std::to_string(round));
                        last = probe_plan_round(*fresh, env_factory, goal, plan, budget);
                        last.instance_id = env.instance_id();
                    } else {
                        last = probe_plan_round(env, env_factory, goal, plan, budget);
                        last.instance_id = env.instance_id();
                    }
                }
                return last;
            };

            std::vector<probing::ProbeResult> finals =
                probing::parallel_probe(provider, task, config_.parallel_k);

            // Rebuild the per-instance audit sequentially (plans and earlier
            // rounds) so artifacts are complete without sharing state across
            // workers. Only the final round's probe feeds claims.
            for (int instance = 0; instance < config_.parallel_k; ++instance) {
                VoteArtifacts vote;
                vote.instance = instance;
                const probing::ProbeResult& final_probe =
                    finals[static_cast<std::size_t>(instance)];
                reasoner::ProbingPlan plan = initial_plan;
                vote.plans.push_back(plan);
                for (int round = 2; round <= config_.iterative_rounds; ++round) {
                    plan = reasoner_.refine_probing(goal, record.expectation, plan,
                                                    final_probe.trajectory, counted);
                    vote.plans.push_back(plan);
                }
                vote.probes.push_back(final_probe);
                record.max_probe_steps =
                    std::max(record.max_probe_steps,
                             static_cast<int>(final_probe.trajectory.steps.size()));

                core::Trajectory probe_traj = final_probe.trajectory;
                if (final_probe.terminated == probing::ProbeTermination::error) {
                    probe_traj.steps.clear(); // treat a faulted probe as uninformative
                }
                core::Trajectory compressed_probe =
                    claims::compress_trajectory(probe_traj, goal, &counted, &prompts_);
                vote.evaluator_claims = claims::generate_claims(
                    core::AgentRole::evaluator, goal, compressed_probe,
                    claims::render_action_history(compressed_probe), counted, prompts_,
                    config_.min_claims, config_.max_claims);
                record.votes.push_back(std::move(vote));
            }

            if (config_.merge_then_judge) {
                claims::ClaimSet merged;
                merged.role = core::AgentRole::evaluator;
                merged.source_trajectory_id = goal.id + ":merged";
                int next = 0;
                for (const auto& vote : record.votes) {
                    for (claims::Claim c : vote.evaluator_claims.claims) {
                        c.id = "e" + std::to_string(++next);
                        merged.claims.push_back(std::move(c));
                    }
                }
                reasoner::Judgment judgment = reasoner_.judge_with_claims(
                    goal, record.expectation, record.policy_claims, merged, counted);
                ballots.push_back(judgment.reward.value);
                record.votes.front().judgment = std::move(judgment);
            } else {
                for (auto& vote : record.votes) {
                    vote.judgment = reasoner_.judge_with_claims(goal, record.expectation,
                                                                record.policy_claims,
                                                                vote.evaluator_claims, counted);
                    ballots.push_back(vote.judgment.reward.value);
                }
            }
        }

        record.vote = probing::aggregate_majority(ballots);
        record.final_outcome.value = record.vote.decision;
        for (const auto& vote : record.votes) {
            if (vote.judgment.reward.value == record.vote.decision) {
                record.final_outcome.rationale = vote.judgment.reward.rationale;
                break;
            }
        }
        if (record.final_outcome.rationale.empty()) {
            record.final_outcome.rationale = "majority vote";
        }
        record.final_outcome.relation_audit = "judgment_0.json";
    } catch (const std::exception& e) {
        record.error = e.what();
        record.final_outcome.value = core::RewardValue::failure;
        record.final_outcome.rationale = std::string("pipeline error: ") + e.what();
        if (record.votes.empty()) {
            record.vote.votes = {core::RewardValue::failure};
            record.vote.decision = core::RewardValue::failure;
        }
    }
    record.approx_prompt_chars = counted.chars.load();
    record.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return record;
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

namespace {

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

json plan_to_json(const reasoner::ProbingPlan& plan) {
    json j;
    j["goal_id"] = plan.goal_id;
    j["round"] = plan.round;
    j["provenance"] = reasoner::to_string(plan.provenance);
    j["probing_goals"] = plan.probing_goals;
    j["analysis"] = plan.analysis;
    return j;
}

std::string sanitize(const std::string& s) {
    std::string out;
    for (char c : s) {
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    }
    return out.substr(0, 60);
}

} // namespace

void persist_record(const std::string& run_dir, const RewardRunRecord& record,
                    const RewardRunConfig& config) {
    const fs::path dir = fs::path(run_dir) / record.goal.id;
    fs::create_directories(dir);

    std::map<std::string, std::string> artifacts;
    auto put = [&](const std::string& name, const std::string& content) {
        write_file(dir / name, content);
        artifacts[name] = text::hex64(text::fnv1a64(content));
    };

    put("trajectory.jsonl", core::trajectory_to_jsonl(record.compressed_policy));
    put("claims_policy.json", claims::claims_to_json(record.policy_claims));
    for (const auto& vote : record.votes) {
        for (std::size_t i = 0; i < vote.plans.size(); ++i) {
            if (vote.instance == 0) {
                put("plan_round_" + std::to_string(vote.plans[i].round) + ".json",
                    plan_to_json(vote.plans[i]).dump(2));
            }
        }
        for (const auto& probe : vote.probes) {
            put("probe_" + sanitize(record.goal.id) + "_" + std::to_string(probe.plan_round) +
                    "_" + std::to_string(vote.instance) + ".jsonl",
                core::trajectory_to_jsonl(probe.trajectory));
        }
        put("claims_evaluator_" + std::to_string(vote.instance) + ".json",
            claims::claims_to_json(vote.evaluator_claims));
        put("judgment_" + std::to_string(vote.instance) + ".json",
            reasoner::judgment_to_json(vote.judgment));
    }

    json outcome;
    outcome["schema_version"] = 1;
    outcome["goal"] = core::to_json(record.goal);
    outcome["reward"] = core::to_string(record.final_outcome.value);
    outcome["rationale"] = record.final_outcome.rationale;
    json votes = json::array();
    for (const auto& v : record.vote.votes) votes.push_back(core::to_string(v));
    outcome["votes"] = std::move(votes);
    outcome["tie_broken"] = record.vote.tie_broken;
    outcome["config_hash"] = config.config_hash();
    outcome["seed"] = config.seed;
    outcome["expectation"] = {{"analysis", record.expectation.analysis},
                              {"key_states", record.expectation.key_states}};
    outcome["policy_length"] = record.policy_length;
    outcome["policy_traj_len"] = record.compressed_policy.final_state.captured_at_step + 1;
    outcome["max_probe_steps"] = record.max_probe_steps;
    outcome["approx_tokens"] = record.approx_tokens();
    outcome["wall_seconds"] = record.wall_seconds;
    outcome["min_claims"] = config.min_claims;
    outcome["max_claims"] = config.max_claims;
    outcome["error"] = record.error;
    outcome["artifact_hashes"] = artifacts;
    write_file(dir / "outcome.json", outcome.dump(2));
}

std::optional<core::RewardValue> load_persisted_outcome(const std::string& run_dir,
                                                        const std::string& goal_id,
                                                        const std::string& config_hash) {
    const fs::path path = fs::path(run_dir) / goal_id / "outcome.json";
    if (!fs::exists(path)) return std::nullopt;
    try {
        json j = json::parse(read_file(path));
        if (j.value("schema_version", 0) != 1) return std::nullopt;
        if (j.value("config_hash", std::string()) != config_hash) return std::nullopt;
        if (!j.value("error", std::string()).empty()) return std::nullopt;
        return core::reward_value_from_string(j.at("reward").get<std::string>());
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

BatchResult assign_reward_batch(const RewardPipeline& pipeline, const std::vector<BatchItem>& items,
                                const std::string& run_dir, int parallelism) {
    if (items.empty()) throw InputError("assign_reward_batch: empty batch");
    if (parallelism < 1) parallelism = 1;

    const std::string config_hash = pipeline.config().config_hash();
    BatchResult result;
    result.records.resize(items.size());
    result.predictions.resize(items.size());
    result.truths.resize(items.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= items.size()) return;
            const BatchItem& item = items[i];
            RewardRunRecord record;
            if (auto stored = load_persisted_outcome(run_dir, item.goal.id, config_hash)) {
                record.goal = item.goal;
                record.resumed = true;
                record.final_outcome.value = *stored;
                record.final_outcome.rationale = "resumed from persisted record";
            } else {
                record = pipeline.assign_reward(item.goal, item.trajectory, item.env_factory);
                if (!run_dir.empty()) persist_record(run_dir, record, pipeline.config());
                // Probe budget law: no probe may outrun the policy trajectory.
                if (record.error.empty() && record.max_probe_steps > record.policy_length) {
                    throw ValidationError("probe budget law violated for goal " + item.goal.id);
                }
            }
            result.predictions[i] = record.final_outcome.value;
            result.truths[i] = item.oracle_truth;
            result.records[i] = std::move(record);
        }
    };

    if (parallelism == 1) {
        worker();
    } else {
        std::vector<std::future<void>> workers;
        for (int w = 0; w < parallelism; ++w) {
            workers.push_back(std::async(std::launch::async, worker));
        }
        for (auto& f : workers) f.get();
    }

    result.metrics = core::compute_metrics(result.predictions, result.truths);
    return result;
}

ReplayReport replay_record(const std::string& run_dir, const std::string& goal_id,
                           const llm::PromptLibrary& prompts, llm::LlmBackend& backend) {
    ReplayReport report;
    const fs::path dir = fs::path(run_dir) / goal_id;
    if (!fs::exists(dir / "outcome.json")) {
        throw IoError("no record at " + (dir / "outcome.json").string());
    }
    json outcome = json::parse(read_file(dir / "outcome.json"));
    if (outcome.value("schema_version", 0) != 1) {
        throw ParseError("record schema version " +
                         std::to_string(outcome.value("schema_version", 0)) +
                         " is not supported (expected 1)");
    }

    // Artifact integrity.
    for (const auto& [name, hash] : outcome.at("artifact_hashes").items()) {
        const fs::path artifact = dir / name;
        if (!fs::exists(artifact)) {
            report.differences.push_back("missing artifact: " + name);
            continue;
        }
        const std::string actual = text::hex64(text::fnv1a64(read_file(artifact)));
        if (actual != hash.get<std::string>()) {
            report.differences.push_back("artifact hash mismatch: " + name);
        }
    }

    // Re-derive the verdict from the persisted claims alone.
    core::Goal goal = core::goal_from_json(outcome.at("goal"));
    reasoner::Expectation expectation;
    expectation.goal_id = goal.id;
    expectation.analysis = outcome.at("expectation").value("analysis", std::string());
    expectation.key_states =
        outcome.at("expectation").at("key_states").get<std::vector<std::string>>();

    const int traj_len = outcome.value("policy_traj_len", 1 << 20);
    const int min_claims = outcome.value("min_claims", 0);
    const int max_claims = outcome.value("max_claims", 1 << 20);
    reasoner::Reasoner reasoner(prompts);

    claims::ClaimSet policy_claims = claims::parse_claims_json(
        read_file(dir / "claims_policy.json"), core::AgentRole::policy, traj_len, min_claims,
        max_claims);

    std::vector<core::RewardValue> ballots;
    for (int k = 0;; ++k) {
        const fs::path claims_path = dir / ("claims_evaluator_" + std::to_string(k) + ".json");
        if (!fs::exists(claims_path)) break;
        claims::ClaimSet evaluator_claims =
            claims::parse_claims_json(read_file(claims_path), core::AgentRole::evaluator,
                                      1 << 20, 0, 1 << 20);
        reasoner::Judgment judgment =
            reasoner.judge_with_claims(goal, expectation, policy_claims, evaluator_claims, backend);
        ballots.push_back(judgment.reward.value);
    }
    if (ballots.empty()) {
        claims::ClaimSet empty_evaluator;
        empty_evaluator.role = core::AgentRole::evaluator;
        ballots.push_back(reasoner
                              .judge_with_claims(goal, expectation, policy_claims, empty_evaluator,
                                                 backend)
                              .reward.value);
    }
    const core::RewardValue rederived = probing::aggregate_majority(ballots).decision;
    const core::RewardValue stored =
        core::reward_value_from_string(outcome.at("reward").get<std::string>());
    if (rederived != stored) {
        report.differences.push_back("re-derived verdict " + core::to_string(rederived) +
                                     " differs from stored " + core::to_string(stored));
    }
    report.pass = report.differences.empty();
    return report;
}

} // namespace prore::pipeline
