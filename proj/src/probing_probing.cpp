#include "prore/probing/probing.hpp"

#include <algorithm>
#include <future>

#include "prore/core/text.hpp"

namespace prore::probing {

std::string to_string(ProbeTermination t) {
    switch (t) {
        case ProbeTermination::answered: return "answered";
        case ProbeTermination::budget_exhausted: return "budget_exhausted";
        case ProbeTermination::agent_done: return "agent_done";
        case ProbeTermination::error: return "error";
    }
    return "error";
}

namespace {

double text_overlap(const std::string& a, const std::string& b) {
    if (a.empty() && b.empty()) return 1.0;
    std::vector<std::string> ta, tb;
    for (const auto& t : text::tokenize(a)) ta.push_back(text::to_lower(t));
    for (const auto& t : text::tokenize(b)) tb.push_back(text::to_lower(t));
    if (ta.empty() || tb.empty()) return 0.0;
    auto counterpart = [](const std::string& x, const std::string& y) {
        if (x == y) return true;
        if (x.size() >= 3 && y.rfind(x, 0) == 0) return true;
        if (y.size() >= 3 && x.rfind(y, 0) == 0) return true;
        return false;
    };
    std::size_t hits = 0;
    for (const auto& x : ta) {
        if (std::any_of(tb.begin(), tb.end(),
                        [&](const std::string& y) { return counterpart(x, y); })) {
            ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(std::max(ta.size(), tb.size()));
}

double attribute_key_overlap(const std::map<std::string, std::string>& want,
                             const std::map<std::string, std::string>& have) {
    if (want.empty()) return 1.0;
    std::size_t hits = 0;
    for (const auto& [k, v] : want) {
        (void)v;
        if (have.count(k)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(want.size());
}

} // namespace

double element_match_score(const core::ElementDescriptor& descriptor,
                           const core::UiElement& candidate) {
    const double text_part = text_overlap(descriptor.text, candidate.text);
    const double role_part = descriptor.role == candidate.role ? 1.0 : 0.0;
    const double attr_part = attribute_key_overlap(descriptor.attributes, candidate.attributes);
    return 0.5 * text_part + 0.3 * role_part + 0.2 * attr_part;
}

const core::UiElement& fuzzy_match_element(const core::ElementDescriptor& descriptor,
                                           const std::vector<core::UiElement>& candidates,
                                           double threshold) {
    if (candidates.empty()) throw prore::InputError("fuzzy_match_element: no candidates");
    const core::UiElement* best = nullptr;
    double best_score = -1.0;
    for (const auto& c : candidates) {
        const double score = element_match_score(descriptor, c);
        if (score > best_score ||
            (score == best_score && best && c.element_id < best->element_id)) {
            best = &c;
            best_score = score;
        }
    }
    if (best_score < threshold) {
        throw prore::NoMatchError("fuzzy_match_element: best score " + std::to_string(best_score) +
                                      " below threshold for \"" + descriptor.text + "\"",
                                  best_score);
    }
    return *best;
}

ProbeResult run_probe(Environment& env, const AgentFn& evaluator, const core::Goal& original_goal,
                      const std::string& probing_goal, int budget, int plan_round,
                      int step_index_base) {
    if (budget < 1) throw prore::InputError("run_probe: budget must be >= 1");

    ProbeResult result;
    result.plan_round = plan_round;
    result.instance_id = env.instance_id();
    result.trajectory.agent_role = core::AgentRole::evaluator;
    result.trajectory.goal = core::Goal{original_goal.id + ":probe", probing_goal,
                                        original_goal.app_hint};
    result.terminated = ProbeTermination::budget_exhausted;

    int index = step_index_base;
    try {
        core::UiState obs = env.observe();
        obs.captured_at_step = index;
        for (int used = 0; used < budget; ++used) {
            core::Action action = evaluator(obs, probing_goal);
            action.validate();
            core::Step step;
            step.state = obs;
            step.action = action;
            result.trajectory.steps.push_back(step);
            result.budget_used = used + 1;

            if (action.kind == core::ActionKind::answer) {
                result.terminated = ProbeTermination::answered;
                result.trajectory.final_state = obs;
                result.trajectory.final_state.captured_at_step = index + 1;
                return result;
            }
            if (action.kind == core::ActionKind::done) {
                result.terminated = ProbeTermination::agent_done;
                result.trajectory.final_state = obs;
                result.trajectory.final_state.captured_at_step = index + 1;
                return result;
            }
            obs = env.step(action);
            ++index;
            obs.captured_at_step = index;
        }
        result.trajectory.final_state = obs;
        result.terminated = ProbeTermination::budget_exhausted;
    } catch (const prore::Error& e) {
        result.terminated = ProbeTermination::error;
        result.error_message = e.what();
        if (result.trajectory.steps.empty()) {
            result.trajectory.final_state = core::UiState{};
            result.trajectory.final_state.captured_at_step = index;
        } else {
            result.trajectory.final_state = result.trajectory.steps.back().state;
            result.trajectory.final_state.captured_at_step =
                result.trajectory.steps.back().state.captured_at_step + 1;
        }
    }
    return result;
}

core::UiState replay_actions(Environment& fresh_env, const std::vector<core::Action>& recorded,
                             double match_threshold) {
    core::UiState state = fresh_env.observe();
    int step = 0;
    for (const auto& original : recorded) {
        core::Action action = original;
        if (action.target) {
            try {
                const core::UiElement& live =
                    fuzzy_match_element(*action.target, state.elements, match_threshold);
                action.target = core::ElementDescriptor::from_element(live);
            } catch (const prore::Error& e) {
                throw prore::EnvError("replay failed at step " + std::to_string(step) + ": " +
                                      e.what());
            }
        }
        state = fresh_env.step(action);
        ++step;
    }
    return state;
}

std::vector<ProbeResult> parallel_probe(const EnvProvider& provider, const ProbeTask& task, int k) {
    if (k < 1) throw prore::InputError("parallel_probe: K must be >= 1");

    std::vector<std::future<ProbeResult>> futures;
    futures.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        futures.push_back(std::async(std::launch::async, [&provider, &task, i]() {
            ProbeResult result;
            result.instance_id = "slot-" + std::to_string(i);
            try {
                std::unique_ptr<Environment> env = provider(i);
                if (!env) throw prore::EnvError("provider returned no environment");
                result = task(*env);
            } catch (const std::exception& e) {
                result.terminated = ProbeTermination::error;
                result.error_message = e.what();
                result.trajectory.agent_role = core::AgentRole::evaluator;
            }
            return result;
        }));
    }

    std::vector<ProbeResult> results;
    results.reserve(futures.size());
    for (auto& f : futures) results.push_back(f.get());
    std::stable_sort(results.begin(), results.end(),
                     [](const ProbeResult& a, const ProbeResult& b) {
                         return a.instance_id < b.instance_id;
                     });

    const bool any_ok = std::any_of(results.begin(), results.end(), [](const ProbeResult& r) {
        return r.terminated != ProbeTermination::error;
    });
    if (!any_ok) throw prore::EnvError("parallel_probe: every instance failed");
    return results;
}

VoteRecord aggregate_majority(const std::vector<core::RewardValue>& votes) {
    if (votes.empty()) throw prore::InputError("aggregate_majority: empty vote list");
    VoteRecord record;
    record.votes = votes;
    const std::size_t successes = static_cast<std::size_t>(
        std::count(votes.begin(), votes.end(), core::RewardValue::success));
    const std::size_t failures = votes.size() - successes;
    record.tie_broken = successes == failures;
    record.decision = successes > failures ? core::RewardValue::success : core::RewardValue::failure;
    return record;
}

} // namespace prore::probing
