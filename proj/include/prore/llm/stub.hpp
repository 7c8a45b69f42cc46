#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "prore/llm/backend.hpp"

namespace prore::llm {

/// What the stub "knows" about one task instruction: the expectation analysis
/// with its key states, the probing goals it schedules, and an optional
/// refinement used from round 2 on.
struct ScheduleEntry {
    std::string analysis;
    std::vector<std::string> key_states;
    std::vector<std::string> goals;
    std::vector<std::string> refined_goals; // empty -> refinement repeats the previous plan
    std::string refined_analysis;
};

struct StubKnowledge {
    std::map<std::string, ScheduleEntry> by_instruction;
    double match_threshold = 0.6; // key-state vs claim token recall gate
};

/// Deterministic offline model. Replies are a pure function of the rendered
/// prompt: the schedule family is answered from the knowledge table, the
/// claims family by mining the HTML state trace embedded in the prompt, and
/// the judge family by matching claims against the task's key states.
/// A schedule/judge request whose task is not in the table is a BackendError.
class ScriptedStubBackend : public LlmBackend {
public:
    explicit ScriptedStubBackend(StubKnowledge knowledge);

    std::string complete(const ChatRequest& request) override;
    std::string kind() const override { return "scripted_stub"; }

    const StubKnowledge& knowledge() const { return knowledge_; }

private:
    std::string answer_schedule(const std::string& prompt) const;
    std::string answer_claims(const std::string& prompt) const;
    std::string answer_judge(const std::string& prompt) const;
    std::string answer_loop_filter(const std::string& prompt) const;

    StubKnowledge knowledge_;
};

// Prompt-mining helpers shared by the stub families (exposed for tests).
namespace stubdetail {

struct ViewElement {
    std::string role;
    std::string text;
    int list_index = -1; // absolute index for list rows, -1 otherwise
};

struct View {
    int step = 0;
    std::string screen_id;
    std::string title;
    bool home = false;
    bool final_view = false;
    bool more_above = false;
    bool more_below = false;
    std::vector<ViewElement> elements;
};

struct ParsedClaim {
    std::string id;
    std::vector<int> steps;
    std::string statement;
};

std::string section_after(const std::string& prompt, const std::string& marker);
std::string first_line(const std::string& block);
std::vector<View> parse_views(const std::string& html_block);
std::vector<ParsedClaim> parse_claim_lines(const std::string& block);

} // namespace stubdetail

} // namespace prore::llm
