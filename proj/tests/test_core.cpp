#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "prore/core/jsonl.hpp"
#include "prore/core/metrics.hpp"
#include "prore/core/text.hpp"
#include "prore/core/types.hpp"
#include "prore/tts/rng.hpp"

using namespace prore;
using core::RewardValue;

namespace {

std::vector<core::RewardValue> from_bools(const std::vector<int>& v) {
    std::vector<core::RewardValue> out;
    for (int b : v) out.push_back(b ? RewardValue::success : RewardValue::failure);
    return out;
}

core::UiState make_state(const std::string& screen, int step,
                         const std::vector<std::string>& texts, bool home = false) {
    core::UiState s;
    s.screen_id = screen;
    s.captured_at_step = step;
    s.is_home = home;
    int i = 0;
    for (const auto& t : texts) {
        core::UiElement e;
        e.element_id = "e" + std::to_string(i++);
        e.role = core::ElementRole::button;
        e.text = t;
        s.elements.push_back(e);
    }
    s.raw_text = "<screen id=\"" + screen + "\">";
    for (const auto& t : texts) s.raw_text += "<e>" + t + "</e>";
    s.raw_text += "</screen>";
    return s;
}

} // namespace

TEST_CASE("confusion metrics reproduce the reported accuracy on scaled counts") {
    // 50.0 / 44.8 / 2.6 / 2.6 percent of 1000 decisions.
    core::Metrics m = core::metrics_from_counts(500, 448, 26, 26);
    CHECK(m.accuracy == doctest::Approx(0.948).epsilon(1e-12));
    CHECK(m.accuracy == 948.0 / 1000.0);
    CHECK(m.f1 == doctest::Approx(1000.0 / 1052.0).epsilon(1e-12));
    CHECK(std::abs(m.f1 - 0.9506) < 5e-5); // 4-decimal agreement
}

TEST_CASE("perfect all-positive predictions score 1.0 accuracy and f1") {
    auto preds = from_bools({1, 1, 1, 1});
    core::Metrics m = core::compute_metrics(preds, preds);
    CHECK(m.accuracy == 1.0);
    CHECK(m.f1 == 1.0);
    CHECK(m.tp == 4);
    CHECK(m.tn == 0);
}

TEST_CASE("f1 is zero when no positives exist anywhere") {
    auto preds = from_bools({0, 0, 0});
    core::Metrics m = core::compute_metrics(preds, preds);
    CHECK(m.accuracy == 1.0);
    CHECK(m.f1 == 0.0);
}

TEST_CASE("metrics input validation") {
    CHECK_THROWS_AS(core::compute_metrics({}, {}), InputError);
    CHECK_THROWS_AS(core::compute_metrics(from_bools({1}), from_bools({1, 0})), InputError);
}

TEST_CASE("metrics are permutation invariant") {
    tts::SplitMix64 rng(41);
    for (int round = 0; round < 100; ++round) {
        std::vector<int> preds, truths;
        const int n = 5 + static_cast<int>(rng.next_below(40));
        for (int i = 0; i < n; ++i) {
            preds.push_back(rng.bernoulli(0.5) ? 1 : 0);
            truths.push_back(rng.bernoulli(0.5) ? 1 : 0);
        }
        core::Metrics base = core::compute_metrics(from_bools(preds), from_bools(truths));
        std::vector<std::size_t> order(static_cast<std::size_t>(n));
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[rng.next_below(i)]);
        }
        std::vector<int> p2, t2;
        for (auto i : order) {
            p2.push_back(preds[i]);
            t2.push_back(truths[i]);
        }
        core::Metrics shuffled = core::compute_metrics(from_bools(p2), from_bools(t2));
        CHECK(base.accuracy == shuffled.accuracy);
        CHECK(base.f1 == shuffled.f1);
        CHECK(base.tp == shuffled.tp);
    }
}

TEST_CASE("label swap maps counts symmetrically and preserves accuracy") {
    tts::SplitMix64 rng(77);
    for (int round = 0; round < 100; ++round) {
        std::vector<int> preds, truths;
        const int n = 4 + static_cast<int>(rng.next_below(30));
        for (int i = 0; i < n; ++i) {
            preds.push_back(rng.bernoulli(0.6) ? 1 : 0);
            truths.push_back(rng.bernoulli(0.4) ? 1 : 0);
        }
        core::Metrics base = core::compute_metrics(from_bools(preds), from_bools(truths));
        std::vector<int> ip, it;
        for (int v : preds) ip.push_back(1 - v);
        for (int v : truths) it.push_back(1 - v);
        core::Metrics swapped = core::compute_metrics(from_bools(ip), from_bools(it));
        CHECK(swapped.tp == base.tn);
        CHECK(swapped.tn == base.tp);
        CHECK(swapped.fp == base.fn);
        CHECK(swapped.fn == base.fp);
        CHECK(swapped.accuracy == base.accuracy);
    }
}

TEST_CASE("metrics over concatenated lists equal metrics from summed counts") {
    auto p1 = from_bools({1, 0, 1});
    auto t1 = from_bools({1, 1, 0});
    auto p2 = from_bools({0, 0, 1, 1});
    auto t2 = from_bools({0, 1, 1, 1});
    core::Metrics a = core::compute_metrics(p1, t1);
    core::Metrics b = core::compute_metrics(p2, t2);
    std::vector<core::RewardValue> pc = p1, tc = t1;
    pc.insert(pc.end(), p2.begin(), p2.end());
    tc.insert(tc.end(), t2.begin(), t2.end());
    core::Metrics joined = core::compute_metrics(pc, tc);
    core::Metrics summed =
        core::metrics_from_counts(a.tp + b.tp, a.tn + b.tn, a.fp + b.fp, a.fn + b.fn);
    CHECK(joined.accuracy == summed.accuracy);
    CHECK(joined.f1 == summed.f1);
}

TEST_CASE("action invariants") {
    core::Action bare_tap{core::ActionKind::tap, std::nullopt, std::nullopt};
    core::Action bare_type{core::ActionKind::type_text, std::nullopt, std::nullopt};
    core::Action bare_answer{core::ActionKind::answer, std::nullopt, std::nullopt};
    CHECK_THROWS_AS(bare_tap.validate(), ValidationError);
    CHECK_THROWS_AS(bare_type.validate(), ValidationError);
    CHECK_THROWS_AS(bare_answer.validate(), ValidationError);
    CHECK_NOTHROW(core::Action::done().validate());
    CHECK_NOTHROW(core::Action::open_app("Markor").validate());
}

TEST_CASE("trajectory JSONL round-trips bit-exactly") {
    core::Trajectory traj;
    traj.goal = core::Goal{"g1", "Take one photo.", "Camera"};
    traj.agent_role = core::AgentRole::policy;
    core::Step s1{make_state("home", 0, {"Camera", "Markor"}, true),
                  core::Action::open_app("Camera")};
    core::ElementDescriptor d;
    d.element_id = "e0";
    d.role = core::ElementRole::button;
    d.text = "Shutter";
    d.attributes["idx"] = "0";
    core::Step s2{make_state("camera", 1, {"Shutter", "Gallery"}), core::Action::tap(d)};
    traj.steps = {s1, s2};
    traj.final_state = make_state("camera", 2, {"Shutter", "Gallery"});
    traj.validate();

    const std::string jsonl = core::trajectory_to_jsonl(traj);
    core::Trajectory parsed = core::trajectory_from_jsonl(jsonl, traj.goal, traj.agent_role);
    CHECK(parsed.steps.size() == 2);
    CHECK(parsed.steps[1].action.target->text == "Shutter");
    CHECK(parsed.steps[1].action.target->attributes.at("idx") == "0");
    CHECK(core::trajectory_to_jsonl(parsed) == jsonl);

    // Wire format details: "t" + state/action objects per line, final_state tail.
    CHECK(jsonl.find("\"t\":0") != std::string::npos);
    CHECK(jsonl.find("\"final_state\"") != std::string::npos);
}

TEST_CASE("trajectory invariants reject non-increasing steps") {
    core::Trajectory traj;
    traj.goal = core::Goal{"g", "do something", std::nullopt};
    traj.steps = {{make_state("a", 3, {}), core::Action::scroll()},
                  {make_state("b", 3, {}), core::Action::scroll()}};
    traj.final_state = make_state("b", 4, {});
    CHECK_THROWS_AS(traj.validate(), ValidationError);
}

TEST_CASE("statement matcher: presence, absence, counts, antonyms") {
    using text::StatementMatch;
    const double tau = 0.6;
    CHECK(text::match_statement("\"shy_king_copy.md\" is present on the MeetingMinutes screen",
                                "\"shy_king_copy.md\" is present on the MeetingMinutes screen.",
                                tau) == StatementMatch::confirmed);
    CHECK(text::match_statement("\"shy_king_copy.md\" is present on the MeetingMinutes screen",
                                "\"shy_king_copy.md\" is absent from the MeetingMinutes screen.",
                                tau) == StatementMatch::contradicted);
    CHECK(text::match_statement("The Gallery screen lists 2 items",
                                "The Gallery screen lists 2 items: IMG_0001.jpg, IMG_0002.jpg.",
                                tau) == StatementMatch::confirmed);
    CHECK(text::match_statement("The Gallery screen lists 2 items",
                                "The Gallery screen lists 1 items: IMG_0001.jpg.", tau) ==
          StatementMatch::contradicted);
    // A claim about a different screen with a coincidental count stays unrelated.
    CHECK(text::match_statement("The Gallery screen lists 2 items",
                                "The Camera screen lists 2 items: Shutter, Flash.", tau) ==
          StatementMatch::unrelated);
    CHECK(text::match_statement("The Timer Detail screen shows \"Status: Paused\"",
                                "The Timer Detail screen shows \"Status: Running\".", tau) ==
          StatementMatch::contradicted);
    CHECK(text::match_statement("The Timer Detail screen shows \"Duration: 00:16:35\"",
                                "The Timer Detail screen shows \"Duration: 00:16:36\".", tau) ==
          StatementMatch::contradicted);
    // Action claims never cover multi-token key states.
    CHECK(text::match_statement("\"shy_king_copy.md\" is present on the MeetingMinutes screen",
                                "Tapped \"MeetingMinutes\" on the Move Note screen.", tau) ==
          StatementMatch::unrelated);
}

TEST_CASE("entity extraction finds filenames, numbers and proper names") {
    auto entities = text::extract_entities(
        "In Markor, move the note shy_king_copy.md from StudyGuides to MeetingMinutes.");
    CHECK(std::find(entities.begin(), entities.end(), "shy_king_copy.md") != entities.end());
    CHECK(std::find(entities.begin(), entities.end(), "markor") != entities.end());
    CHECK(std::find(entities.begin(), entities.end(), "studyguides") != entities.end());

    auto contact = text::extract_entities(
        "Create a new contact for Hugo Pereira. Their number is +13920741751.");
    CHECK(std::find(contact.begin(), contact.end(), "hugo pereira") != contact.end());
    CHECK(std::find(contact.begin(), contact.end(), "+13920741751") != contact.end());

    auto quoted = text::extract_entities("Find the 'Rental Income' expense in the pro expense app.");
    CHECK(std::find(quoted.begin(), quoted.end(), "rental income") != quoted.end());
}

TEST_CASE("state signature ignores screenshots and captures element texts") {
    core::UiState a = make_state("s", 0, {"A", "B"});
    core::UiState b = make_state("s", 9, {"A", "B"});
    b.screenshot_ref = "blob";
    CHECK(a.signature() == b.signature());
    core::UiState c = make_state("s", 0, {"A", "C"});
    CHECK(a.signature() != c.signature());
}
