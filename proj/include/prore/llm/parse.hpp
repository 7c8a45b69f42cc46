#pragma once

#include <string>
#include <vector>

#include "prore/core/types.hpp"

namespace prore::llm {

struct ScheduleOutput {
    std::string analysis;
    std::vector<std::string> probing_goals; // one per "Goal:" line, in order
};

// Splits on the literal "Analysis:" / "Goal:" markers. Multiple Goal lines
// become an ordered list. Missing Goal marker throws ParseError.
ScheduleOutput parse_schedule_output(const std::string& text);

struct JudgeOutput {
    std::string analysis;
    core::RewardValue status = core::RewardValue::failure;
};

// Status is read case-insensitively from the final "Status:" line; anything
// outside {success, failure} is a ParseError.
JudgeOutput parse_judge_output(const std::string& text);

// "Verdict: related|unrelated" -> true when related.
bool parse_loop_verdict(const std::string& text);

} // namespace prore::llm
