#include "prore/claims/compress.hpp"

#include <algorithm>

#include "prore/llm/parse.hpp"

namespace prore::claims {

std::vector<std::pair<int, int>> detect_loops(const std::vector<std::string>& signatures) {
    const int n = static_cast<int>(signatures.size());
    std::vector<std::pair<int, int>> ranges;
    int start = 0;
    while (start < n) {
        int best_len = 0;
        for (int period = 2; start + 2 * period <= n; ++period) {
            int reps = 1;
            while (start + (reps + 1) * period <= n) {
                bool equal = true;
                for (int i = 0; i < period && equal; ++i) {
                    equal = signatures[start + i] == signatures[start + reps * period + i];
                }
                if (!equal) break;
                ++reps;
            }
            if (reps >= 2) best_len = std::max(best_len, reps * period);
        }
        if (best_len > 0) {
            ranges.emplace_back(start, start + best_len - 1);
            start += best_len;
        } else {
            ++start;
        }
    }
    return ranges;
}

std::vector<std::pair<int, int>> detect_loops(const core::Trajectory& traj) {
    std::vector<std::string> sigs;
    sigs.reserve(traj.steps.size());
    for (const auto& step : traj.steps) sigs.push_back(step.state.signature());
    return detect_loops(sigs);
}

namespace {

bool loop_is_unrelated(const core::Trajectory& traj, const core::Goal& goal, int start, int end,
                       llm::LlmBackend* backend, const llm::PromptLibrary* prompts) {
    if (!backend || !prompts) return false; // keep by default
    std::string states;
    for (int i = start; i <= end; ++i) {
        states += "Step " + std::to_string(traj.steps[static_cast<std::size_t>(i)].state.captured_at_step) +
                  ": " + traj.steps[static_cast<std::size_t>(i)].state.raw_text + "\n";
    }
    try {
        auto request = llm::ChatRequest::for_prompt(
            llm::PromptFamily::loop_filter, prompts->render_loop_filter(goal.instruction, states));
        std::string reply = llm::complete(request, *backend);
        return !llm::parse_loop_verdict(reply);
    } catch (const prore::Error&) {
        return false; // keep on backend failure
    }
}

// One filtering pass: home-screen steps, duplicate-state runs, unrelated loops.
bool compress_pass(core::Trajectory& traj, const core::Goal& goal, llm::LlmBackend* backend,
                   const llm::PromptLibrary* prompts) {
    const std::size_t before = traj.steps.size();

    std::vector<core::Step> kept;
    kept.reserve(traj.steps.size());
    for (auto& step : traj.steps) {
        if (step.state.is_home) continue;
        if (!kept.empty() && kept.back().state.signature() == step.state.signature()) continue;
        kept.push_back(std::move(step));
    }
    traj.steps = std::move(kept);

    std::vector<std::string> sigs;
    sigs.reserve(traj.steps.size());
    for (const auto& step : traj.steps) sigs.push_back(step.state.signature());
    std::vector<bool> drop(traj.steps.size(), false);
    for (const auto& [start, end] : detect_loops(sigs)) {
        if (loop_is_unrelated(traj, goal, start, end, backend, prompts)) {
            for (int i = start; i <= end; ++i) drop[static_cast<std::size_t>(i)] = true;
        }
    }
    if (std::find(drop.begin(), drop.end(), true) != drop.end()) {
        std::vector<core::Step> filtered;
        filtered.reserve(traj.steps.size());
        for (std::size_t i = 0; i < traj.steps.size(); ++i) {
            if (!drop[i]) filtered.push_back(std::move(traj.steps[i]));
        }
        traj.steps = std::move(filtered);
    }
    return traj.steps.size() != before;
}

} // namespace

core::Trajectory compress_trajectory(const core::Trajectory& traj, const core::Goal& goal,
                                     llm::LlmBackend* backend, const llm::PromptLibrary* prompts) {
    core::Trajectory out = traj;
    // Loop removal can create new duplicate runs, so iterate to a fixed point.
    while (compress_pass(out, goal, backend, prompts)) {
    }
    return out;
}

} // namespace prore::claims
