#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "prore/claims/claims.hpp"
#include "prore/claims/compress.hpp"
#include "prore/core/jsonl.hpp"
#include "prore/llm/stub.hpp"
#include "prore/tts/rng.hpp"

using namespace prore;

namespace {

core::UiState state_of(const std::string& screen, int step,
                       const std::vector<std::string>& texts, bool home = false) {
    core::UiState s;
    s.screen_id = screen;
    s.captured_at_step = step;
    s.is_home = home;
    int i = 0;
    std::string raw = "<screen id=\"" + screen + "\" title=\"" + screen + "\">";
    for (const auto& t : texts) {
        core::UiElement e;
        e.element_id = "e" + std::to_string(i++);
        e.role = core::ElementRole::button;
        e.text = t;
        s.elements.push_back(e);
        raw += "<e role=\"button\">" + t + "</e>";
    }
    raw += "</screen>";
    s.raw_text = raw;
    return s;
}

// Trajectory whose state signatures follow `screens`; actions are scrolls.
core::Trajectory signature_trajectory(const std::vector<std::string>& screens) {
    core::Trajectory traj;
    traj.goal = core::Goal{"sig", "visit some screens", std::nullopt};
    int step = 0;
    for (const auto& s : screens) {
        traj.steps.push_back(core::Step{state_of(s, step, {s + "-content"}, s == "home"),
                                        core::Action::scroll()});
        ++step;
    }
    traj.final_state = state_of("end", step, {"end-content"});
    return traj;
}

// Reference loop finder: smallest repeating start wins, longest total block,
// checked by direct comparison of every candidate (start, period, reps).
std::vector<std::pair<int, int>> naive_loops(const std::vector<std::string>& sig) {
    const int n = static_cast<int>(sig.size());
    std::vector<std::pair<int, int>> out;
    int start = 0;
    while (start < n) {
        int best_len = 0;
        for (int period = 2; period <= (n - start) / 2; ++period) {
            int reps = 1;
            while (true) {
                const int block_begin = start + reps * period;
                if (block_begin + period > n) break;
                bool same = true;
                for (int i = 0; i < period; ++i) {
                    if (sig[static_cast<std::size_t>(start + i)] !=
                        sig[static_cast<std::size_t>(block_begin + i)]) {
                        same = false;
                        break;
                    }
                }
                if (!same) break;
                ++reps;
            }
            if (reps >= 2 && reps * period > best_len) best_len = reps * period;
        }
        if (best_len > 0) {
            out.emplace_back(start, start + best_len - 1);
            start += best_len;
        } else {
            ++start;
        }
    }
    return out;
}

} // namespace

TEST_CASE("detect_loops on canonical sequences") {
    CHECK(claims::detect_loops(std::vector<std::string>{"A", "B", "A", "B", "C"}) ==
          std::vector<std::pair<int, int>>{{0, 3}});
    CHECK(claims::detect_loops(std::vector<std::string>{"A", "B", "C"}).empty());
    // runs of one symbol belong to duplicate collapse, not loop removal
    CHECK(claims::detect_loops(std::vector<std::string>{"A", "A", "A"}).empty());
}

TEST_CASE("detect_loops agrees with the brute-force reference on all short sequences") {
    const std::vector<std::string> alphabet = {"A", "B", "C"};
    // exhaustive over all signature sequences of length <= 5 on 3 symbols
    for (int len = 0; len <= 5; ++len) {
        int combos = 1;
        for (int i = 0; i < len; ++i) combos *= 3;
        for (int code = 0; code < combos; ++code) {
            std::vector<std::string> sig;
            int c = code;
            for (int i = 0; i < len; ++i) {
                sig.push_back(alphabet[static_cast<std::size_t>(c % 3)]);
                c /= 3;
            }
            CHECK(claims::detect_loops(sig) == naive_loops(sig));
        }
    }
}

TEST_CASE("compression removes home screens and duplicate runs, keeping first") {
    core::Trajectory traj;
    traj.goal = core::Goal{"g", "open the notes app", std::nullopt};
    traj.steps = {
        core::Step{state_of("home", 0, {"Notes"}, true), core::Action::open_app("Notes")},
        core::Step{state_of("notes", 1, {"list"}), core::Action::scroll()},
        core::Step{state_of("notes", 2, {"list"}), core::Action::scroll()},
        core::Step{state_of("notes", 3, {"list"}), core::Action::scroll()},
        core::Step{state_of("detail", 4, {"body"}), core::Action::done()},
    };
    traj.final_state = state_of("detail", 5, {"body"});

    core::Trajectory compressed = claims::compress_trajectory(traj, traj.goal);
    REQUIRE(compressed.steps.size() == 2);
    CHECK(compressed.steps[0].state.captured_at_step == 1); // first of the dup run
    CHECK(compressed.steps[1].state.captured_at_step == 4);
    CHECK(core::trajectory_to_jsonl(compressed).size() < core::trajectory_to_jsonl(traj).size());
}

TEST_CASE("empty trajectory compresses to itself") {
    core::Trajectory traj;
    traj.goal = core::Goal{"g", "noop goal", std::nullopt};
    traj.final_state = state_of("end", 0, {});
    core::Trajectory compressed = claims::compress_trajectory(traj, traj.goal);
    CHECK(compressed.steps.empty());
}

TEST_CASE("goal-unrelated loop removal drops exactly the loop, goal-related loops stay") {
    llm::ScriptedStubBackend stub(llm::StubKnowledge{});
    const llm::PromptLibrary& prompts = llm::PromptLibrary::load(llm::default_assets_dir());

    // 12 steps with a 4-step settings loop far from the notes goal.
    std::vector<std::string> screens = {"notes1", "notes2", "settings", "wifi",
                                        "settings", "wifi", "notes3", "notes4",
                                        "notes5", "notes6", "notes7", "notes8"};
    core::Trajectory traj;
    traj.goal = core::Goal{"g", "read the notes list", std::nullopt};
    for (std::size_t i = 0; i < screens.size(); ++i) {
        traj.steps.push_back(core::Step{
            state_of(screens[i], static_cast<int>(i), {screens[i] + " row", "notes row"}),
            core::Action::scroll()});
    }
    // make loop screens goal-unrelated: rebuild them without the "notes" token
    for (std::size_t i : {2u, 3u, 4u, 5u}) {
        traj.steps[i].state = state_of(screens[i], static_cast<int>(i), {screens[i] + " row"});
    }
    traj.final_state = state_of("notes8", 12, {"notes8 row", "notes row"});

    core::Trajectory compressed = claims::compress_trajectory(traj, traj.goal, &stub, &prompts);
    CHECK(compressed.steps.size() == 8);
    std::set<int> surviving;
    for (const auto& s : compressed.steps) surviving.insert(s.state.captured_at_step);
    for (int i : {2, 3, 4, 5}) CHECK(surviving.count(i) == 0);
    for (int i : {0, 1, 6, 7, 8, 9, 10, 11}) CHECK(surviving.count(i) == 1);

    // the same loop over goal-related screens is kept
    core::Trajectory related = traj;
    for (std::size_t i : {2u, 3u, 4u, 5u}) {
        related.steps[i].state =
            state_of(screens[i], static_cast<int>(i), {"notes backup row"});
    }
    CHECK(claims::compress_trajectory(related, related.goal, &stub, &prompts).steps.size() == 12);
}

TEST_CASE("compression is idempotent and order-preserving on random traces") {
    tts::SplitMix64 rng(2024);
    const std::vector<std::string> screens = {"home", "a", "b", "c"};
    for (int round = 0; round < 200; ++round) {
        std::vector<std::string> seq;
        const int n = 1 + static_cast<int>(rng.next_below(12));
        for (int i = 0; i < n; ++i) {
            seq.push_back(screens[static_cast<std::size_t>(rng.next_below(screens.size()))]);
        }
        core::Trajectory traj = signature_trajectory(seq);
        core::Trajectory once = claims::compress_trajectory(traj, traj.goal);
        core::Trajectory twice = claims::compress_trajectory(once, traj.goal);
        CHECK(core::trajectory_to_jsonl(once) == core::trajectory_to_jsonl(twice));

        // output is a subsequence of the input (original indices increasing)
        int prev = -1;
        for (const auto& s : once.steps) {
            CHECK(s.state.captured_at_step > prev);
            prev = s.state.captured_at_step;
            CHECK_FALSE(s.state.is_home);
        }
        // serialized size never grows, strictly shrinks when steps dropped
        const auto before = core::trajectory_to_jsonl(traj).size();
        const auto after = core::trajectory_to_jsonl(once).size();
        if (once.steps.size() < traj.steps.size()) {
            CHECK(after < before);
        } else {
            CHECK(after == before);
        }
    }
}

TEST_CASE("parse_claims_json validates schema, bounds and step ranges") {
    const std::string good = R"(Claims:
{"policy": [
  {"steps": [0, 2], "reasoning": "saw it", "claim": "Tapped \"X\" on the A screen."},
  {"steps": [3], "reasoning": "saw it", "claim": "The B screen lists 2 items: x, y."},
  {"steps": [1], "reasoning": "saw it", "claim": "The agent answered: \"yes\"."}
]})";
    claims::ClaimSet set = claims::parse_claims_json(good, core::AgentRole::policy, 5, 3, 8);
    REQUIRE(set.claims.size() == 3);
    CHECK(set.claims[0].id == "p1");
    CHECK(set.claims[1].steps == std::vector<int>{3});

    // step index == traj_len is out of range (0-based)
    const std::string off_by_one =
        R"({"policy": [{"steps": [5], "reasoning": "r", "claim": "c"},
                       {"steps": [0], "reasoning": "r", "claim": "c2"},
                       {"steps": [1], "reasoning": "r", "claim": "c3"}]})";
    CHECK_THROWS_WITH_AS(claims::parse_claims_json(off_by_one, core::AgentRole::policy, 5, 1, 8),
                         doctest::Contains("outside"), ParseError);

    const std::string too_many =
        R"({"policy": [{"steps": [0], "reasoning": "r", "claim": "a"},
                       {"steps": [0], "reasoning": "r", "claim": "b"},
                       {"steps": [0], "reasoning": "r", "claim": "c"}]})";
    CHECK_THROWS_WITH_AS(claims::parse_claims_json(too_many, core::AgentRole::policy, 5, 1, 2),
                         doctest::Contains("max_claims"), ParseError);

    CHECK_THROWS_AS(claims::parse_claims_json("not json at all {", core::AgentRole::policy, 5, 1, 8),
                    ParseError);

    // empty set tolerated for the evaluator only
    CHECK(claims::parse_claims_json(R"({"evaluator": []})", core::AgentRole::evaluator, 5, 3, 8)
              .claims.empty());
    CHECK_THROWS_AS(claims::parse_claims_json(R"({"policy": []})", core::AgentRole::policy, 5, 3, 8),
                    ParseError);
}

TEST_CASE("claims round-trip through the persisted JSON schema") {
    claims::ClaimSet set;
    set.role = core::AgentRole::evaluator;
    claims::Claim c;
    c.id = "e1";
    c.role = core::AgentRole::evaluator;
    c.steps = {1, 4};
    c.reasoning = "seen";
    c.statement = "\"x.md\" is present on the Folder screen.";
    set.claims.push_back(c);
    const std::string json_text = claims::claims_to_json(set);
    claims::ClaimSet parsed =
        claims::parse_claims_json(json_text, core::AgentRole::evaluator, 10, 0, 8);
    REQUIRE(parsed.claims.size() == 1);
    CHECK(parsed.claims[0].statement == c.statement);
    CHECK(parsed.claims[0].steps == c.steps);
}

TEST_CASE("generate_claims rejects zero-step policy traces and skips empty evaluator probes") {
    llm::ScriptedStubBackend stub(llm::StubKnowledge{});
    const llm::PromptLibrary& prompts = llm::PromptLibrary::load(llm::default_assets_dir());
    core::Trajectory empty;
    empty.goal = core::Goal{"g", "anything", std::nullopt};
    empty.final_state = state_of("end", 0, {});

    CHECK_THROWS_AS(claims::generate_claims(core::AgentRole::policy, empty.goal, empty, "", stub,
                                            prompts, 3, 8),
                    InputError);
    claims::ClaimSet evaluator_set = claims::generate_claims(
        core::AgentRole::evaluator, empty.goal, empty, "", stub, prompts, 3, 8);
    CHECK(evaluator_set.claims.empty());
}
