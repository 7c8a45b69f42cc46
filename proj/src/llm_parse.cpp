#include "prore/llm/parse.hpp"

#include "prore/core/text.hpp"

namespace prore::llm {

namespace {

bool starts_with_marker(const std::string& line, const char* marker, std::string* rest) {
    std::string trimmed = text::trim(line);
    std::string low = text::to_lower(trimmed);
    std::string mk = text::to_lower(marker);
    if (low.rfind(mk, 0) != 0) return false;
    *rest = text::trim(trimmed.substr(mk.size()));
    return true;
}

} // namespace

ScheduleOutput parse_schedule_output(const std::string& text) {
    ScheduleOutput out;
    bool in_analysis = false;
    std::string analysis;
    for (const auto& line : text::split_lines(text)) {
        std::string rest;
        if (starts_with_marker(line, "Goal:", &rest)) {
            in_analysis = false;
            if (!rest.empty()) out.probing_goals.push_back(rest);
            continue;
        }
        if (starts_with_marker(line, "Analysis:", &rest)) {
            in_analysis = true;
            if (!rest.empty()) analysis += rest + "\n";
            continue;
        }
        if (in_analysis) analysis += line + "\n";
    }
    out.analysis = text::trim(analysis);
    if (out.probing_goals.empty()) {
        throw ParseError("schedule output: missing \"Goal:\" marker");
    }
    return out;
}

JudgeOutput parse_judge_output(const std::string& text) {
    JudgeOutput out;
    bool in_analysis = false;
    std::string analysis;
    std::string status_token;
    bool saw_status = false;
    for (const auto& line : text::split_lines(text)) {
        std::string rest;
        if (starts_with_marker(line, "Status:", &rest)) {
            in_analysis = false;
            status_token = rest; // final Status line wins
            saw_status = true;
            continue;
        }
        if (starts_with_marker(line, "Analysis:", &rest)) {
            in_analysis = true;
            if (!rest.empty()) analysis += rest + "\n";
            continue;
        }
        if (in_analysis) analysis += line + "\n";
    }
    if (!saw_status) throw ParseError("judge output: missing \"Status:\" line");
    std::string low = text::to_lower(text::trim(status_token));
    // Tolerate trailing punctuation but nothing else.
    while (!low.empty() && (low.back() == '.' || low.back() == '!')) low.pop_back();
    if (low == "success") {
        out.status = core::RewardValue::success;
    } else if (low == "failure") {
        out.status = core::RewardValue::failure;
    } else {
        throw ParseError("judge output: status token \"" + status_token +
                         "\" is not success/failure");
    }
    out.analysis = text::trim(analysis);
    return out;
}

bool parse_loop_verdict(const std::string& text) {
    for (const auto& line : text::split_lines(text)) {
        std::string rest;
        if (starts_with_marker(line, "Verdict:", &rest)) {
            std::string low = text::to_lower(text::trim(rest));
            if (low == "related") return true;
            if (low == "unrelated") return false;
            throw ParseError("loop verdict: unknown token \"" + rest + "\"");
        }
    }
    throw ParseError("loop verdict: missing \"Verdict:\" line");
}

} // namespace prore::llm
