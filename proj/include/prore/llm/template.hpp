#pragma once

#include <map>
#include <string>
#include <vector>

namespace prore::llm {

enum class PromptFamily { schedule, claims, judge, loop_filter };

std::string to_string(PromptFamily f);

struct PromptTemplate {
    PromptFamily family = PromptFamily::schedule;
    std::string body;
    std::vector<std::string> placeholders;
};

using Bindings = std::map<std::string, std::string>;

// Replaces every declared {name} marker. Throws RenderError naming the first
// unbound placeholder; also fails if any declared marker survives the pass.
// Unknown binding keys are ignored; literal braces in the body are untouched.
std::string render_template(const PromptTemplate& tmpl, const Bindings& bindings);

// Same substitution rule over an ad-hoc body with an explicit placeholder set.
std::string render_text(const std::string& body, const std::vector<std::string>& placeholders,
                        const Bindings& bindings);

/// Prompt bodies plus the versioned prompt assets (few-shot examples and
/// guideline blocks) shipped under an assets directory.
class PromptLibrary {
public:
    static PromptLibrary load(const std::string& assets_dir);

    const PromptTemplate& get(PromptFamily family) const;

    // Renders a family template with composite assets pre-bound.
    std::string render_schedule(const std::string& goal, const std::string& previous_task,
                                const std::string& collected_info) const;
    std::string render_claims(const std::string& role_key, const std::string& intent,
                              const std::string& action_history, const std::string& html_text_block,
                              int min_claims, int max_claims) const;
    std::string render_judge(const std::string& intent, const std::string& policy_claims,
                             const std::string& evaluator_claims) const;
    std::string render_loop_filter(const std::string& intent, const std::string& loop_states) const;

    std::string schedule_examples;
    std::string schedule_guidelines;
    std::string claims_guidelines_policy;
    std::string claims_guidelines_evaluator;

private:
    std::map<PromptFamily, PromptTemplate> templates_;
};

std::string read_text_file(const std::string& path);

// Default asset root: $PRORE_ASSETS if set, else the build-time source path.
std::string default_assets_dir();
std::string default_fixtures_dir();

} // namespace prore::llm
