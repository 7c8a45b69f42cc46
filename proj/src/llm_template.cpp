#include "prore/llm/template.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "prore/core/errors.hpp"

#ifndef PRORE_SOURCE_DIR
#define PRORE_SOURCE_DIR "."
#endif

namespace prore::llm {

std::string to_string(PromptFamily f) {
    switch (f) {
        case PromptFamily::schedule: return "schedule";
        case PromptFamily::claims: return "claims";
        case PromptFamily::judge: return "judge";
        case PromptFamily::loop_filter: return "loop_filter";
    }
    return "schedule";
}

std::string render_text(const std::string& body, const std::vector<std::string>& placeholders,
                        const Bindings& bindings) {
    std::string out = body;
    for (const auto& name : placeholders) {
        auto it = bindings.find(name);
        if (it == bindings.end()) {
            throw RenderError("render: missing binding for placeholder {" + name + "}");
        }
        const std::string marker = "{" + name + "}";
        std::size_t pos = 0;
        while ((pos = out.find(marker, pos)) != std::string::npos) {
            out.replace(pos, marker.size(), it->second);
            pos += it->second.size();
        }
    }
    for (const auto& name : placeholders) {
        const std::string marker = "{" + name + "}";
        if (out.find(marker) != std::string::npos) {
            throw RenderError("render: placeholder {" + name + "} survived substitution");
        }
    }
    return out;
}

std::string render_template(const PromptTemplate& tmpl, const Bindings& bindings) {
    return render_text(tmpl.body, tmpl.placeholders, bindings);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read asset file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string default_assets_dir() {
    if (const char* env = std::getenv("PRORE_ASSETS")) return env;
    return std::string(PRORE_SOURCE_DIR) + "/assets";
}

std::string default_fixtures_dir() {
    if (const char* env = std::getenv("PRORE_FIXTURES")) return env;
    return std::string(PRORE_SOURCE_DIR) + "/fixtures";
}

namespace {

std::string strip_trailing_newline(std::string s) {
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
    return s;
}

} // namespace

PromptLibrary PromptLibrary::load(const std::string& assets_dir) {
    PromptLibrary lib;
    lib.schedule_examples = strip_trailing_newline(read_text_file(assets_dir + "/schedule_examples.txt"));
    lib.schedule_guidelines = strip_trailing_newline(read_text_file(assets_dir + "/guidelines.txt"));
    lib.claims_guidelines_policy =
        strip_trailing_newline(read_text_file(assets_dir + "/prompts/claims_guidelines_policy.txt"));
    lib.claims_guidelines_evaluator =
        strip_trailing_newline(read_text_file(assets_dir + "/prompts/claims_guidelines_evaluator.txt"));

    PromptTemplate schedule;
    schedule.family = PromptFamily::schedule;
    schedule.body = read_text_file(assets_dir + "/prompts/schedule.txt");
    schedule.placeholders = {"guidelines", "examples", "goal", "previous_state_probing_task",
                             "collected_info"};
    lib.templates_[PromptFamily::schedule] = std::move(schedule);

    PromptTemplate claims;
    claims.family = PromptFamily::claims;
    claims.body = read_text_file(assets_dir + "/prompts/claims.txt");
    claims.placeholders = {"role_cap", "intent", "action_history", "html_text_block",
                           "guidelines", "role_key"};
    lib.templates_[PromptFamily::claims] = std::move(claims);

    PromptTemplate judge;
    judge.family = PromptFamily::judge;
    judge.body = read_text_file(assets_dir + "/prompts/judge.txt");
    judge.placeholders = {"intent", "policy_claims", "evaluator_claims"};
    lib.templates_[PromptFamily::judge] = std::move(judge);

    PromptTemplate loop;
    loop.family = PromptFamily::loop_filter;
    loop.body = read_text_file(assets_dir + "/prompts/loop_filter.txt");
    loop.placeholders = {"intent", "loop_states"};
    lib.templates_[PromptFamily::loop_filter] = std::move(loop);

    return lib;
}

const PromptTemplate& PromptLibrary::get(PromptFamily family) const {
    auto it = templates_.find(family);
    if (it == templates_.end()) throw InputError("prompt family not loaded");
    return it->second;
}

std::string PromptLibrary::render_schedule(const std::string& goal, const std::string& previous_task,
                                           const std::string& collected_info) const {
    return render_template(get(PromptFamily::schedule),
                           {{"guidelines", schedule_guidelines},
                            {"examples", schedule_examples},
                            {"goal", goal},
                            {"previous_state_probing_task", previous_task},
                            {"collected_info", collected_info}});
}

std::string PromptLibrary::render_claims(const std::string& role_key, const std::string& intent,
                                         const std::string& action_history,
                                         const std::string& html_text_block, int min_claims,
                                         int max_claims) const {
    std::string role_cap = role_key;
    if (!role_cap.empty()) role_cap[0] = static_cast<char>(std::toupper(role_cap[0]));
    const std::string& guideline_body =
        role_key == "policy" ? claims_guidelines_policy : claims_guidelines_evaluator;
    std::string guidelines = render_text(guideline_body, {"min_claims", "max_claims"},
                                         {{"min_claims", std::to_string(min_claims)},
                                          {"max_claims", std::to_string(max_claims)}});
    return render_template(get(PromptFamily::claims),
                           {{"role_cap", role_cap},
                            {"intent", intent},
                            {"action_history",
                             action_history.empty() ? "[No action history provided]" : action_history},
                            {"html_text_block", html_text_block},
                            {"guidelines", guidelines},
                            {"role_key", role_key}});
}

std::string PromptLibrary::render_judge(const std::string& intent, const std::string& policy_claims,
                                        const std::string& evaluator_claims) const {
    return render_template(get(PromptFamily::judge), {{"intent", intent},
                                                      {"policy_claims", policy_claims},
                                                      {"evaluator_claims", evaluator_claims}});
}

std::string PromptLibrary::render_loop_filter(const std::string& intent,
                                              const std::string& loop_states) const {
    return render_template(get(PromptFamily::loop_filter),
                           {{"intent", intent}, {"loop_states", loop_states}});
}

} // namespace prore::llm
