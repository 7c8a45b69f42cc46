#include "prore/llm/stub.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "prore/core/errors.hpp"
#include "prore/core/text.hpp"

namespace prore::llm {

using nlohmann::json;

namespace stubdetail {

std::string section_after(const std::string& prompt, const std::string& marker) {
    std::size_t pos = prompt.find(marker);
    if (pos == std::string::npos) return {};
    return prompt.substr(pos + marker.size());
}

std::string first_line(const std::string& block) {
    for (const auto& line : text::split_lines(block)) {
        std::string t = text::trim(line);
        if (!t.empty()) return t;
    }
    return {};
}

std::vector<ViewElement> parse_raw_elements(const std::string& raw) {
    std::vector<ViewElement> out;
    std::size_t pos = 0;
    while ((pos = raw.find("<e ", pos)) != std::string::npos) {
        std::size_t tag_end = raw.find('>', pos);
        std::size_t text_end = raw.find("</e>", tag_end);
        if (tag_end == std::string::npos || text_end == std::string::npos) break;
        const std::string tag = raw.substr(pos, tag_end - pos);
        ViewElement e;
        std::size_t rb = tag.find("role=\"");
        if (rb != std::string::npos) {
            std::size_t re = tag.find('"', rb + 6);
            if (re != std::string::npos) e.role = tag.substr(rb + 6, re - rb - 6);
        }
        std::size_t ib = tag.find("idx=\"");
        if (ib != std::string::npos) {
            std::size_t ie = tag.find('"', ib + 5);
            if (ie != std::string::npos) {
                try {
                    e.list_index = std::stoi(tag.substr(ib + 5, ie - ib - 5));
                } catch (...) {
                }
            }
        }
        e.text = raw.substr(tag_end + 1, text_end - tag_end - 1);
        out.push_back(std::move(e));
        pos = text_end + 4;
    }
    return out;
}

std::vector<View> parse_views(const std::string& html_block) {
    std::vector<View> views;
    for (const auto& line : text::split_lines(html_block)) {
        std::string t = text::trim(line);
        if (t.rfind("Step ", 0) != 0) continue;
        std::size_t colon = t.find(": <screen");
        if (colon == std::string::npos) continue;
        View v;
        try {
            v.step = std::stoi(t.substr(5, t.find(' ', 5) - 5));
        } catch (...) {
            continue;
        }
        std::size_t screen_b = t.find("(screen: ");
        std::size_t screen_e = t.find(')', screen_b);
        if (screen_b == std::string::npos || screen_e == std::string::npos) continue;
        v.screen_id = t.substr(screen_b + 9, screen_e - screen_b - 9);
        const std::string head = t.substr(0, colon);
        v.home = head.find("[home]") != std::string::npos;
        v.final_view = head.find("[final]") != std::string::npos;
        const std::string raw = t.substr(colon + 2);

        const std::string title_marker = "title=\"";
        std::size_t tb = raw.find(title_marker);
        if (tb != std::string::npos) {
            std::size_t te = raw.find('"', tb + title_marker.size());
            if (te != std::string::npos) {
                v.title = raw.substr(tb + title_marker.size(), te - tb - title_marker.size());
            }
        }
        if (v.title.empty()) v.title = v.screen_id;
        v.more_above = raw.find("[more above]") != std::string::npos;
        v.more_below = raw.find("[more below]") != std::string::npos;
        v.elements = parse_raw_elements(raw);
        views.push_back(std::move(v));
    }
    return views;
}

std::vector<ParsedClaim> parse_claim_lines(const std::string& block) {
    std::vector<ParsedClaim> claims;
    for (const auto& line : text::split_lines(block)) {
        std::string t = text::trim(line);
        if (t.empty() || (t[0] != 'P' && t[0] != 'E')) continue;
        std::size_t bracket = t.find(" [steps ");
        if (bracket == std::string::npos) continue;
        std::size_t close = t.find("]: ", bracket);
        if (close == std::string::npos) continue;
        ParsedClaim c;
        c.id = text::to_lower(t.substr(0, bracket));
        for (auto n : text::extract_numbers(t.substr(bracket + 8, close - bracket - 8))) {
            c.steps.push_back(static_cast<int>(n));
        }
        c.statement = t.substr(close + 3);
        claims.push_back(std::move(c));
    }
    return claims;
}

} // namespace stubdetail

namespace {

using stubdetail::ParsedClaim;
using stubdetail::View;
using stubdetail::ViewElement;

PromptFamily detect_family(const std::string& prompt) {
    if (prompt.find("You are an expert judge evaluating whether a mobile GUI agent") !=
        std::string::npos) {
        return PromptFamily::judge;
    }
    if (prompt.find("produce concise **claims**") != std::string::npos) {
        return PromptFamily::claims;
    }
    if (prompt.find("A recorded trajectory contains a repeated loop") != std::string::npos) {
        return PromptFamily::loop_filter;
    }
    return PromptFamily::schedule;
}

// Aggregate of the final consecutive visit to one screen title.
struct ScreenAgg {
    std::string title;
    std::vector<int> steps;
    std::vector<std::string> items;            // list rows, first-seen order
    std::map<std::string, std::set<int>> item_positions;
    std::vector<std::string> rows;             // text-role rows
    std::vector<std::string> controls;         // buttons, toggles, inputs
    bool saw_top = false;
    bool saw_bottom = false;
};

std::string view_render_key(const View& v) {
    std::string key = v.screen_id;
    for (const auto& e : v.elements) key += "|" + e.role + ">" + e.text;
    key += v.more_above ? "^" : "";
    key += v.more_below ? "v" : "";
    return key;
}

std::vector<ScreenAgg> aggregate_final_visits(const std::vector<View>& views) {
    std::vector<ScreenAgg> visits;
    std::string last_render;
    for (const auto& v : views) {
        if (v.home) continue;
        // Duplicate consecutive renders carry no new evidence; keeping only
        // the first mirrors trajectory compression, so claims line up whether
        // or not the trace was compressed.
        const std::string render = view_render_key(v);
        if (!visits.empty() && render == last_render) continue;
        last_render = render;
        if (visits.empty() || visits.back().title != v.title) {
            ScreenAgg agg;
            agg.title = v.title;
            visits.push_back(std::move(agg));
        }
        ScreenAgg& agg = visits.back();
        agg.steps.push_back(v.step);
        if (!v.more_above) agg.saw_top = true;
        if (!v.more_below) agg.saw_bottom = true;
        agg.rows.clear(); // value rows reflect the last view: the after-state
        for (const auto& e : v.elements) {
            if (e.role == "list_item") {
                if (std::find(agg.items.begin(), agg.items.end(), e.text) == agg.items.end()) {
                    agg.items.push_back(e.text);
                }
                if (e.list_index >= 0) agg.item_positions[e.text].insert(e.list_index);
            } else if (e.role == "text") {
                agg.rows.push_back(e.text);
            } else {
                if (std::find(agg.controls.begin(), agg.controls.end(), e.text) ==
                    agg.controls.end()) {
                    agg.controls.push_back(e.text);
                }
            }
        }
    }
    // Keep only the last visit per title, preserving visit order.
    std::vector<ScreenAgg> out;
    for (auto it = visits.rbegin(); it != visits.rend(); ++it) {
        if (std::none_of(out.begin(), out.end(),
                         [&](const ScreenAgg& a) { return a.title == it->title; })) {
            out.push_back(*it);
        }
    }
    std::reverse(out.begin(), out.end());
    return out;
}

bool element_matches_entity(const std::string& element_text, const std::string& entity) {
    std::vector<std::string> etoks;
    for (const auto& t : text::tokenize(element_text)) etoks.push_back(text::to_lower(t));
    for (const auto& want : text::tokenize(entity)) {
        if (std::find(etoks.begin(), etoks.end(), text::to_lower(want)) == etoks.end()) return false;
    }
    return true;
}

bool title_in_goal(const std::string& title, const std::vector<std::string>& goal_tokens) {
    for (const auto& t : text::content_tokens(title)) {
        if (std::find(goal_tokens.begin(), goal_tokens.end(), t) != goal_tokens.end()) return true;
    }
    return false;
}

std::size_t overlap_with(const std::string& s, const std::vector<std::string>& pool) {
    std::size_t n = 0;
    for (const auto& t : text::content_tokens(s)) {
        if (std::find(pool.begin(), pool.end(), t) != pool.end()) ++n;
    }
    return n;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep,
                 std::size_t limit = 0) {
    std::string out;
    const std::size_t n = limit == 0 ? parts.size() : std::min(parts.size(), limit);
    for (std::size_t i = 0; i < n; ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

struct DraftClaim {
    std::vector<int> steps;
    std::string reasoning;
    std::string statement;
};

void add_claim(std::vector<DraftClaim>& drafts, std::vector<int> steps, std::string reasoning,
               std::string statement) {
    for (const auto& d : drafts) {
        if (d.statement == statement) return; // merge duplicates
    }
    if (steps.empty()) steps.push_back(0);
    std::sort(steps.begin(), steps.end());
    steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
    drafts.push_back(DraftClaim{std::move(steps), std::move(reasoning), std::move(statement)});
}

struct ActionLine {
    int step = 0;
    std::string kind;
    std::string arg;
};

std::vector<ActionLine> parse_action_history(const std::string& block) {
    std::vector<ActionLine> out;
    for (const auto& line : text::split_lines(block)) {
        std::string t = text::trim(line);
        if (t.rfind("Step ", 0) != 0) continue;
        std::size_t colon = t.find(": ");
        if (colon == std::string::npos) continue;
        ActionLine a;
        try {
            a.step = std::stoi(t.substr(5, colon - 5));
        } catch (...) {
            continue;
        }
        std::string rest = t.substr(colon + 2);
        std::size_t quote = rest.find('"');
        if (quote == std::string::npos) {
            a.kind = text::trim(rest);
        } else {
            a.kind = text::trim(rest.substr(0, quote));
            std::size_t endq = rest.rfind('"');
            if (endq > quote) a.arg = rest.substr(quote + 1, endq - quote - 1);
        }
        out.push_back(std::move(a));
    }
    return out;
}

std::string capitalized(std::string id) {
    if (!id.empty()) id[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(id[0])));
    return id;
}

} // namespace

ScriptedStubBackend::ScriptedStubBackend(StubKnowledge knowledge)
    : knowledge_(std::move(knowledge)) {}

std::string ScriptedStubBackend::complete(const ChatRequest& request) {
    const std::string prompt = request.prompt_text();
    switch (detect_family(prompt)) {
        case PromptFamily::schedule: return answer_schedule(prompt);
        case PromptFamily::claims: return answer_claims(prompt);
        case PromptFamily::judge: return answer_judge(prompt);
        case PromptFamily::loop_filter: return answer_loop_filter(prompt);
    }
    throw BackendError("scripted stub: unrecognized prompt family");
}

std::string ScriptedStubBackend::answer_schedule(const std::string& prompt) const {
    std::size_t pos = prompt.find("Original task: ");
    if (pos == std::string::npos) throw BackendError("scripted stub: no task in schedule prompt");
    std::size_t eol = prompt.find('\n', pos);
    const std::string goal = text::trim(prompt.substr(pos + 15, eol - pos - 15));

    auto it = knowledge_.by_instruction.find(goal);
    if (it == knowledge_.by_instruction.end()) {
        throw BackendError("scripted stub: no schedule entry for task: " + goal);
    }
    const ScheduleEntry& entry = it->second;

    const std::string prev_marker = "A previous state probing task was:\n";
    std::size_t prev_b = prompt.find(prev_marker);
    std::size_t prev_e = prompt.find("\nThe Evaluator Agent probed the following states:");
    std::string previous;
    if (prev_b != std::string::npos && prev_e != std::string::npos) {
        previous = text::trim(
            prompt.substr(prev_b + prev_marker.size(), prev_e - prev_b - prev_marker.size()));
    }
    const bool refinement = !previous.empty() && previous != "None.";

    std::ostringstream out;
    auto emit_keys = [&] {
        out << "Key states to verify:\n";
        for (const auto& k : entry.key_states) out << "- " << k << "\n";
    };
    if (!refinement) {
        out << "Analysis: " << entry.analysis << "\n";
        emit_keys();
        for (const auto& g : entry.goals) out << "Goal: " << g << "\n";
    } else if (!entry.refined_goals.empty()) {
        out << "Analysis: "
            << (entry.refined_analysis.empty()
                    ? "The earlier probe left part of the evidence unchecked; the goal is narrowed."
                    : entry.refined_analysis)
            << "\n";
        emit_keys();
        for (const auto& g : entry.refined_goals) out << "Goal: " << g << "\n";
    } else {
        out << "Analysis: The previous probing task already targets the key states; it is kept "
               "unchanged.\n";
        emit_keys();
        for (const auto& line : text::split_lines(previous)) {
            std::string t = text::trim(line);
            if (!t.empty()) out << "Goal: " << t << "\n";
        }
    }
    return out.str();
}

std::string ScriptedStubBackend::answer_claims(const std::string& prompt) const {
    const std::string intent =
        stubdetail::first_line(stubdetail::section_after(prompt, "TASK GOAL:\n"));
    const bool policy_role = prompt.find("\"policy\": [") != std::string::npos;

    int min_claims = 3, max_claims = 8;
    if (std::size_t aim = prompt.find("Aim for "); aim != std::string::npos) {
        auto nums = text::extract_numbers(prompt.substr(aim, 40));
        if (nums.size() >= 2) {
            min_claims = static_cast<int>(nums[0]);
            max_claims = static_cast<int>(nums[1]);
        }
    }

    std::size_t hist_b = prompt.find("ACTION HISTORY (");
    std::size_t hist_colon = hist_b == std::string::npos ? std::string::npos
                                                         : prompt.find("):\n", hist_b);
    std::size_t html_b = prompt.find("HTML STATES (TRACE of ");
    std::size_t html_colon = html_b == std::string::npos ? std::string::npos
                                                         : prompt.find(":\n", html_b);
    std::size_t html_e = prompt.find("------ OUTPUT GUIDELINES ------");
    std::string history_block;
    if (hist_colon != std::string::npos && html_b != std::string::npos) {
        history_block = prompt.substr(hist_colon + 3, html_b - hist_colon - 3);
    }
    std::string html_block;
    if (html_colon != std::string::npos && html_e != std::string::npos) {
        html_block = prompt.substr(html_colon + 2, html_e - html_colon - 2);
    }

    const std::vector<View> views = stubdetail::parse_views(html_block);
    const std::vector<ActionLine> actions = parse_action_history(history_block);
    const std::vector<std::string> goal_tokens = text::content_tokens(intent);
    const std::vector<std::string> entities = text::extract_entities(intent);
    const std::vector<ScreenAgg> screens = aggregate_final_visits(views);

    std::vector<DraftClaim> drafts;
    auto all_texts = [](const ScreenAgg& s) {
        std::vector<std::string> v = s.items;
        v.insert(v.end(), s.rows.begin(), s.rows.end());
        v.insert(v.end(), s.controls.begin(), s.controls.end());
        return v;
    };

    // Explicit answers first; question tasks are judged on them.
    if (policy_role) {
        for (const auto& a : actions) {
            if (a.kind == "answer") {
                add_claim(drafts, {a.step}, "The agent's reply is recorded in the action history.",
                          "The agent answered: \"" + a.arg + "\".");
            }
        }
    }

    // Entity presence on visited screens, quoting the matched element.
    for (const auto& entity : entities) {
        for (const auto& s : screens) {
            const auto texts = all_texts(s);
            auto hit = std::find_if(texts.begin(), texts.end(), [&](const std::string& t) {
                return element_matches_entity(t, entity);
            });
            if (hit != texts.end()) {
                add_claim(drafts, s.steps, "Observed directly on the listed screen.",
                          "\"" + *hit + "\" is present on the " + s.title + " screen.");
                break;
            }
        }
    }

    // Absence reports come from the detective role only, for goal-named
    // screens enumerated top to bottom, and only for concrete items (files,
    // records, multi-word names), never app or folder names.
    if (!policy_role) {
        auto item_like = [](const std::string& entity) {
            if (entity.find(' ') != std::string::npos) return true;
            const bool has_digit = std::any_of(entity.begin(), entity.end(), [](unsigned char c) {
                return std::isdigit(c) != 0;
            });
            return has_digit || entity.find_first_of("._@") != std::string::npos;
        };
        for (const auto& s : screens) {
            if (!title_in_goal(s.title, goal_tokens)) continue;
            if (!(s.saw_top && s.saw_bottom)) continue;
            for (const auto& entity : entities) {
                if (!item_like(entity)) continue;
                if (text::contains_ci(s.title, entity)) continue;
                const auto texts = all_texts(s);
                const bool found = std::any_of(texts.begin(), texts.end(),
                                               [&](const std::string& t) {
                                                   return element_matches_entity(t, entity);
                                               });
                if (!found) {
                    add_claim(drafts, s.steps, "The full list was enumerated without finding it.",
                              "\"" + entity + "\" is absent from the " + s.title + " screen.");
                }
            }
        }
    }

    // Duplicate scan when the task is about duplicates.
    if (std::find(goal_tokens.begin(), goal_tokens.end(), "duplicate") != goal_tokens.end()) {
        for (const auto& s : screens) {
            if (!title_in_goal(s.title, goal_tokens) || !(s.saw_top && s.saw_bottom)) continue;
            std::vector<std::string> dups;
            for (const auto& [item, positions] : s.item_positions) {
                if (positions.size() > 1) dups.push_back(item);
            }
            if (dups.empty()) {
                add_claim(drafts, s.steps, "Every enumerated entry appears exactly once.",
                          "The " + s.title + " screen lists unique entries only.");
            } else {
                std::sort(dups.begin(), dups.end());
                add_claim(drafts, s.steps, "The same entry appears at several list positions.",
                          "The " + s.title + " screen lists duplicated entries: " +
                              join(dups, ", ") + ".");
            }
        }
    }

    // Value rows (Label: value). The detective reports every row it saw; the
    // actor sticks to goal-named screens and rows echoing the goal.
    for (const auto& s : screens) {
        const bool container = title_in_goal(s.title, goal_tokens);
        for (const auto& row : s.rows) {
            if (row.find(": ") == std::string::npos) continue;
            if (policy_role && !container && overlap_with(row, goal_tokens) == 0) continue;
            add_claim(drafts, s.steps, "Shown verbatim on the screen.",
                      "The " + s.title + " screen shows \"" + row + "\".");
        }
    }

    // Enumerations: the detective lists every screen it visited; the actor
    // covers goal-named screens plus its final screen. An empty fully-seen
    // list screen is itself evidence.
    for (std::size_t si = 0; si < screens.size(); ++si) {
        const ScreenAgg& s = screens[si];
        const bool container = title_in_goal(s.title, goal_tokens);
        bool relevant = container || !policy_role;
        if (policy_role && si + 1 == screens.size()) relevant = true;
        if (!relevant) continue;
        if (s.items.empty()) {
            if (s.saw_top && s.saw_bottom && s.rows.empty() && s.controls.empty()) {
                add_claim(drafts, s.steps, "The list is empty end to end.",
                          "The " + s.title + " screen lists 0 items.");
            }
            continue;
        }
        if (s.saw_top && s.saw_bottom) {
            add_claim(drafts, s.steps, "Counted after scrolling the whole list.",
                      "The " + s.title + " screen lists " + std::to_string(s.items.size()) +
                          " items: " + join(s.items, ", ", 10) + ".");
        } else {
            add_claim(drafts, s.steps, "Partial view; the list was not fully scrolled.",
                      "The " + s.title + " screen lists items: " + join(s.items, ", ", 10) + ".");
        }
    }

    // Actor's action report, one claim per run of identical screen renders so
    // compressed and raw traces produce the same set. Home views are skipped
    // before run detection, matching the compression order.
    if (policy_role) {
        std::map<int, const View*> view_by_step;
        std::set<int> run_starts;
        std::string prev_render;
        for (const auto& v : views) {
            view_by_step[v.step] = &v;
            if (v.home) continue;
            const std::string render = view_render_key(v);
            if (render != prev_render && !v.final_view) run_starts.insert(v.step);
            prev_render = render;
        }
        for (const auto& a : actions) {
            if (!run_starts.count(a.step)) continue;
            auto vit = view_by_step.find(a.step);
            if (vit == view_by_step.end() || vit->second->home) continue;
            if (a.kind == "tap") {
                add_claim(drafts, {a.step}, "Recorded in the action history.",
                          "Tapped \"" + a.arg + "\" on the " + vit->second->title + " screen.");
            } else if (a.kind == "type") {
                add_claim(drafts, {a.step}, "Recorded in the action history.",
                          "Typed \"" + a.arg + "\" on the " + vit->second->title + " screen.");
            }
        }
    }

    // Deliberate detective slip so the judge's stage-1 filter has work to do.
    if (!policy_role) {
        auto scroll_it = std::find_if(actions.begin(), actions.end(),
                                      [](const ActionLine& a) { return a.kind == "scroll"; });
        if (scroll_it != actions.end() && static_cast<int>(drafts.size()) < max_claims) {
            const std::string where = screens.empty() ? "last" : screens.back().title;
            add_claim(drafts, {scroll_it->step}, "Investigation note.",
                      "Evaluator action: scrolled the " + where + " screen while inspecting.");
        }
    }

    // Pad to the floor from the final view only: it survives compression, so
    // filler never depends on which noisy steps were dropped, and it carries
    // no numbers that could collide with count-bearing key states.
    if (!views.empty()) {
        const View& final_view = views.back();
        const std::vector<std::string> pads = {
            "The trace ends on the " + final_view.title + " screen.",
            "The " + final_view.title + " screen was inspected.",
            "The recorded trace was reviewed end to end.",
        };
        for (const auto& pad : pads) {
            if (static_cast<int>(drafts.size()) >= min_claims) break;
            add_claim(drafts, {final_view.step}, "Trace summary.", pad);
        }
    }
    if (static_cast<int>(drafts.size()) > max_claims) {
        drafts.resize(static_cast<std::size_t>(max_claims));
    }

    json arr = json::array();
    for (const auto& d : drafts) {
        json item;
        item["steps"] = d.steps;
        item["reasoning"] = d.reasoning;
        item["claim"] = d.statement;
        arr.push_back(std::move(item));
    }
    json out;
    out[policy_role ? "policy" : "evaluator"] = std::move(arr);
    return "Claims:\n" + out.dump(2);
}

std::string ScriptedStubBackend::answer_judge(const std::string& prompt) const {
    const std::string intent =
        stubdetail::first_line(stubdetail::section_after(prompt, "TASK GOAL:\n"));
    auto it = knowledge_.by_instruction.find(intent);
    if (it == knowledge_.by_instruction.end()) {
        throw BackendError("scripted stub: no judgment knowledge for task: " + intent);
    }
    const ScheduleEntry& entry = it->second;
    const double tau = knowledge_.match_threshold;

    std::size_t pol_b = prompt.find("POLICY CLAIMS:");
    std::size_t eva_b = prompt.find("EVALUATOR CLAIMS:");
    std::size_t out_b = prompt.find("------ OUTPUT INSTRUCTIONS ------");
    if (pol_b == std::string::npos || eva_b == std::string::npos || out_b == std::string::npos) {
        throw BackendError("scripted stub: judge prompt blocks missing");
    }
    std::vector<ParsedClaim> policy =
        stubdetail::parse_claim_lines(prompt.substr(pol_b, eva_b - pol_b));
    std::vector<ParsedClaim> evaluator =
        stubdetail::parse_claim_lines(prompt.substr(eva_b, out_b - eva_b));

    // Stage 1: drop self-action and off-goal evaluator claims.
    std::vector<std::pair<std::string, std::string>> discarded;
    std::vector<ParsedClaim> evidence;
    std::vector<std::string> relevance_pool = text::content_tokens(intent);
    for (const auto& k : entry.key_states) {
        for (const auto& t : text::content_tokens(k)) relevance_pool.push_back(t);
    }
    for (const auto& e : evaluator) {
        if (e.statement.rfind("Evaluator action:", 0) == 0 ||
            text::contains_ci(e.statement, "the evaluator agent")) {
            discarded.emplace_back(e.id, "describes the evaluator's own action");
            continue;
        }
        if (overlap_with(e.statement, relevance_pool) == 0) {
            discarded.emplace_back(e.id, "not relevant to the task goal");
            continue;
        }
        evidence.push_back(e);
    }

    // Stage 2: pairwise relations.
    struct Edge {
        std::string p, e, relation;
    };
    std::vector<Edge> edges;
    std::set<std::string> referenced;
    for (const auto& p : policy) {
        std::string relation = "unsupported";
        const ParsedClaim* partner = nullptr;
        for (const auto& e : evidence) {
            const auto m = text::match_statement(p.statement, e.statement, tau);
            if (m == text::StatementMatch::contradicted) {
                relation = "contradicted";
                partner = &e;
                break;
            }
            if (m == text::StatementMatch::confirmed && relation != "confirmed") {
                relation = "confirmed";
                partner = &e;
            }
        }
        if (!partner && !evidence.empty()) {
            std::size_t best = 0, best_overlap = 0;
            const auto p_tokens = text::content_tokens(p.statement);
            for (std::size_t i = 0; i < evidence.size(); ++i) {
                const std::size_t ov = overlap_with(evidence[i].statement, p_tokens);
                if (ov > best_overlap) {
                    best_overlap = ov;
                    best = i;
                }
            }
            partner = &evidence[best];
        }
        if (partner) {
            edges.push_back({p.id, partner->id, relation});
            referenced.insert(partner->id);
        }
    }
    for (const auto& e : evidence) {
        if (referenced.count(e.id)) continue;
        edges.push_back({policy.empty() ? "p0" : policy.front().id, e.id, "complementary"});
    }

    // Key-state verdict; with no surviving evidence, judge from the policy
    // claims alone and flag the fallback.
    const bool trajectory_only = evidence.empty();
    const std::vector<ParsedClaim>& basis = trajectory_only ? policy : evidence;
    const std::string answer_prefix = "The agent answered:";
    std::vector<std::pair<std::string, std::string>> key_status;
    bool all_confirmed = !entry.key_states.empty();
    bool any_contradicted = false;
    for (const auto& k : entry.key_states) {
        bool conf = false, contra = false;
        // A key about the agent's explicit answer is checked against the
        // policy's answer claims only; environment evidence cannot stand in
        // for the reply itself.
        const bool answer_key = k.rfind(answer_prefix, 0) == 0;
        const std::vector<ParsedClaim>& pool = answer_key ? policy : basis;
        for (const auto& c : pool) {
            if (answer_key && c.statement.rfind(answer_prefix, 0) != 0) continue;
            const auto m = text::match_statement(k, c.statement, tau);
            if (m == text::StatementMatch::confirmed) conf = true;
            if (m == text::StatementMatch::contradicted) contra = true;
        }
        const char* status = contra ? "contradicted" : (conf ? "confirmed" : "unverified");
        if (contra) any_contradicted = true;
        if (std::string(status) != "confirmed") all_confirmed = false;
        key_status.emplace_back(status, k);
    }
    // A contradicted relation is decisive when the policy claim asserted a
    // key state outright (goal-critical claim). Claims that merely brush a
    // key state (e.g. a before-modification snapshot) do not force failure.
    for (const auto& edge : edges) {
        if (edge.relation != "contradicted") continue;
        for (const auto& p : policy) {
            if (p.id != edge.p) continue;
            for (const auto& k : entry.key_states) {
                if (text::match_statement(k, p.statement, tau) == text::StatementMatch::confirmed) {
                    any_contradicted = true;
                }
            }
        }
    }
    const bool success = all_confirmed && !any_contradicted;

    std::ostringstream out;
    out << "Analysis:\n";
    out << "Stage 1:\n";
    if (discarded.empty()) {
        out << "- none discarded\n";
    } else {
        for (const auto& [id, reason] : discarded) {
            out << "- discarded " << capitalized(id) << ": " << reason << "\n";
        }
    }
    out << "Stage 2:\n";
    if (edges.empty()) {
        out << "- no claim pairs to compare\n";
    } else {
        for (const auto& e : edges) {
            out << "- " << capitalized(e.p) << " vs " << capitalized(e.e) << ": " << e.relation
                << "\n";
        }
    }
    out << "Key states:\n";
    for (const auto& [status, k] : key_status) out << "- [" << status << "] " << k << "\n";
    if (trajectory_only) {
        out << "No evaluator evidence survived filtering; judged from the policy claims alone "
               "(low-confidence).\n";
    }
    out << (success ? "Every key state is confirmed by the evidence."
                    : "At least one key state is unverified or contradicted.")
        << "\n";
    out << "\nStatus: " << (success ? "success" : "failure") << "\n";
    return out.str();
}

std::string ScriptedStubBackend::answer_loop_filter(const std::string& prompt) const {
    const std::string intent =
        stubdetail::first_line(stubdetail::section_after(prompt, "TASK GOAL:\n"));
    std::size_t b = prompt.find("LOOP STATES (HTML):");
    std::size_t e = prompt.find("------ OUTPUT INSTRUCTIONS ------");
    std::string states;
    if (b != std::string::npos) {
        states = prompt.substr(b, e == std::string::npos ? std::string::npos : e - b);
    }
    const std::vector<std::string> goal_tokens = text::content_tokens(intent);
    bool related = false;
    for (const auto& elem : stubdetail::parse_raw_elements(states)) {
        if (overlap_with(elem.text, goal_tokens) > 0) {
            related = true;
            break;
        }
    }
    return std::string("Verdict: ") + (related ? "related" : "unrelated") + "\n";
}

} // namespace prore::llm
