#pragma once

#include <string>
#include <utility>
#include <vector>

#include "prore/core/types.hpp"
#include "prore/llm/backend.hpp"

namespace prore::claims {

// Maximal non-overlapping [start, end] index ranges over the state-signature
// sequence where a block of period >= 2 repeats >= 2 times consecutively.
std::vector<std::pair<int, int>> detect_loops(const std::vector<std::string>& signatures);
std::vector<std::pair<int, int>> detect_loops(const core::Trajectory& traj);

/// Drops home-screen steps, collapses consecutive identical states (first
/// kept), and removes detected loops the backend marks unrelated to the goal
/// (kept when no backend is given or the call fails). Passes repeat until a
/// fixed point so the result is idempotent. Surviving steps keep their
/// original indices; the output is always a subsequence of the input.
core::Trajectory compress_trajectory(const core::Trajectory& traj, const core::Goal& goal,
                                     llm::LlmBackend* backend = nullptr,
                                     const llm::PromptLibrary* prompts = nullptr);

} // namespace prore::claims
