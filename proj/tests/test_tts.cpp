#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "prore/tts/tts.hpp"

using namespace prore;

TEST_CASE("q_positive matches the closed form") {
    CHECK(tts::q_positive(0.6, 0.9) == doctest::Approx(0.58).epsilon(1e-12));
    // p_c = 1/2 collapses q to exactly 1/2 for every p_a
    for (double p_a : {0.0, 0.1, 0.3, 0.5, 0.77, 1.0}) {
        CHECK(tts::q_positive(p_a, 0.5) == 0.5);
    }
    for (double p_c : {0.0, 0.25, 0.5, 0.9, 1.0}) {
        CHECK(tts::q_positive(1.0, p_c) == doctest::Approx(p_c).epsilon(1e-12));
    }
    CHECK_THROWS_AS(tts::q_positive(-0.1, 0.5), InputError);
    CHECK_THROWS_AS(tts::q_positive(0.5, 1.1), InputError);
}

TEST_CASE("analytic_p_final reproduces the hand-evaluated point") {
    // q = 0.58, A = 0.54/0.58, P = A + (p_a - A) * 0.42^5
    CHECK(tts::analytic_p_final(0.6, 0.9, 5) == doctest::Approx(0.92670815232).epsilon(1e-10));
}

TEST_CASE("analytic_p_final collapse and fixed points are exact") {
    for (double p_a : {0.0, 0.1, 0.25, 0.3, 0.5, 0.6, 0.75, 0.9, 1.0}) {
        for (int n : {1, 2, 3, 5, 10, 20}) {
            CHECK(tts::analytic_p_final(p_a, 0.5, n) == p_a);
        }
    }
    for (double p_c : {0.0, 0.3, 0.5, 0.9, 1.0}) {
        for (int n : {1, 2, 7}) {
            CHECK(tts::analytic_p_final(1.0, p_c, n) == 1.0);
            CHECK(tts::analytic_p_final(0.0, p_c, n) == 0.0);
        }
    }
    // q = 0 corners return p_a
    CHECK(tts::analytic_p_final(0.0, 1.0, 4) == 0.0);
    CHECK(tts::analytic_p_final(1.0, 0.0, 4) == 1.0);
}

TEST_CASE("analytic_p_final stays within [0,1] across the unit square") {
    for (double p_a = 0.0; p_a <= 1.0001; p_a += 0.05) {
        for (double p_c = 0.0; p_c <= 1.0001; p_c += 0.05) {
            for (int n : {1, 2, 5, 10, 50}) {
                const double p = tts::analytic_p_final(std::min(p_a, 1.0), std::min(p_c, 1.0), n);
                CHECK(p >= 0.0);
                CHECK(p <= 1.0);
            }
        }
    }
}

TEST_CASE("perfect judge with a large budget approaches certainty") {
    // p_c = 1: q = p_a, early stop only on true successes. The formula's
    // fallback is one extra fresh trial; the exact procedure resubmits the
    // failed Nth trial. Both land at ~1 - 0.7^20 ~ 0.9992.
    const double exact_expected = 1.0 - std::pow(0.7, 20);
    const double formula_expected = 1.0 - std::pow(0.7, 21);
    CHECK(tts::analytic_p_final(0.3, 1.0, 20) ==
          doctest::Approx(formula_expected).epsilon(1e-12));
    CHECK(tts::exact_procedure_p_final(0.3, 1.0, 20) ==
          doctest::Approx(exact_expected).epsilon(1e-12));
    CHECK(std::abs(formula_expected - exact_expected) < 3e-4); // modes agree to ~0.9992

    tts::TtsConfig cfg{0.3, 1.0, 20, 200000, 4242, tts::SimMode::formula_consistent};
    tts::TtsEstimate est = tts::simulate_tts(cfg);
    CHECK(std::abs(est.monte_carlo - formula_expected) <= 3.0 * est.std_error + 1e-9);
    tts::TtsConfig exact_cfg = cfg;
    exact_cfg.mode = tts::SimMode::exact_procedure;
    tts::TtsEstimate exact_est = tts::simulate_tts(exact_cfg);
    CHECK(std::abs(exact_est.monte_carlo - exact_expected) <= 3.0 * exact_est.std_error + 1e-9);
}

TEST_CASE("formula-consistent Monte Carlo agrees with the closed form at 1e6 samples") {
    tts::TtsConfig cfg{0.6, 0.9, 5, 1000000, 99, tts::SimMode::formula_consistent};
    tts::TtsEstimate est = tts::simulate_tts(cfg);
    CHECK(est.analytic == doctest::Approx(0.92670815232).epsilon(1e-10));
    CHECK(std::abs(est.monte_carlo - est.analytic) <= 3.0 * est.std_error);
    CHECK(est.std_error == doctest::Approx(std::sqrt(est.monte_carlo * (1 - est.monte_carlo) /
                                                     1000000.0)));
}

TEST_CASE("exact procedure at N=1 collapses to p_a; the verbatim formula does not") {
    // Enumerating the four (success, judged-correct) cells at N=1: a positive
    // judgment submits the trial, a negative judgment submits the same trial,
    // so P(final success) = p_a regardless of p_c.
    const double p_a = 0.6, p_c = 0.9;
    CHECK(tts::exact_procedure_p_final(p_a, p_c, 1) == doctest::Approx(p_a).epsilon(1e-12));
    const double q = tts::q_positive(p_a, p_c);
    CHECK(tts::analytic_p_final(p_a, p_c, 1) ==
          doctest::Approx(p_a * (1 + p_c - q)).epsilon(1e-12));
    CHECK(tts::analytic_p_final(p_a, p_c, 1) == doctest::Approx(0.792).epsilon(1e-12));

    tts::TtsConfig cfg{p_a, p_c, 1, 400000, 7, tts::SimMode::exact_procedure};
    tts::TtsEstimate est = tts::simulate_tts(cfg);
    CHECK(std::abs(est.monte_carlo - p_a) <= 3.0 * est.std_error);
}

TEST_CASE("exact-procedure Monte Carlo tracks its own closed form across N") {
    for (int n : {1, 2, 3, 5}) {
        tts::TtsConfig cfg{0.6, 0.9, n, 300000, 11 + static_cast<std::uint64_t>(n),
                           tts::SimMode::exact_procedure};
        tts::TtsEstimate est = tts::simulate_tts(cfg);
        CHECK(std::abs(est.monte_carlo - est.analytic) <= 3.0 * est.std_error);
    }
}

TEST_CASE("seed reproducibility down to the bits") {
    tts::TtsConfig cfg{0.37, 0.81, 4, 50000, 123456, tts::SimMode::formula_consistent};
    tts::TtsEstimate a = tts::simulate_tts(cfg);
    tts::TtsEstimate b = tts::simulate_tts(cfg);
    CHECK(a.monte_carlo == b.monte_carlo);
    CHECK(a.std_error == b.std_error);
    tts::TtsConfig other = cfg;
    other.seed = 123457;
    CHECK(tts::simulate_tts(other).monte_carlo != a.monte_carlo);
}

TEST_CASE("run_tts_loop stops on the first positive and submits the last trial otherwise") {
    // perfect policy + perfect judge accept immediately
    tts::EpisodeOutcome quick = tts::run_tts_loop(
        [](int) {
            return tts::TrialResult{true, true};
        },
        5);
    CHECK(quick.submitted_trial == 1);
    CHECK(quick.stopped_early);
    CHECK(quick.submitted_success);
    CHECK(quick.positives_seen == 1);

    // hopeless policy: budget exhausted, trial N submitted
    tts::EpisodeOutcome hopeless = tts::run_tts_loop(
        [](int) {
            return tts::TrialResult{false, false};
        },
        5);
    CHECK(hopeless.submitted_trial == 5);
    CHECK_FALSE(hopeless.stopped_early);
    CHECK_FALSE(hopeless.submitted_success);

    // stopped_early implies a positive was seen
    tts::EpisodeOutcome mid = tts::run_tts_loop(
        [](int trial) {
            return tts::TrialResult{trial == 3, trial == 3};
        },
        5);
    CHECK(mid.submitted_trial == 3);
    CHECK(mid.stopped_early);
    CHECK(mid.positives_seen >= 1);

    // a throwing trial is judged failure and the loop continues
    tts::EpisodeOutcome throwing = tts::run_tts_loop(
        [](int trial) -> tts::TrialResult {
            if (trial == 1) throw std::runtime_error("trial exploded");
            return tts::TrialResult{true, true};
        },
        5);
    CHECK(throwing.submitted_trial == 2);
    CHECK(throwing.stopped_early);
}

TEST_CASE("sweep emits the exact CSV header and collapse rows equal p_a") {
    auto rows = tts::sweep_grid({0.2, 0.6}, {0.5, 0.9}, {1, 3}, 2000, 5,
                                tts::SimMode::formula_consistent);
    CHECK(rows.size() == 8);
    const std::string csv = tts::sweep_to_csv(rows);
    CHECK(csv.rfind("p_a,p_c,N,mode,analytic,mc,stderr,samples,seed\n", 0) == 0);
    for (const auto& row : rows) {
        if (row.p_c == 0.5) CHECK(row.estimate.analytic == row.p_a);
    }
    CHECK_THROWS_AS(tts::sweep_grid({}, {0.5}, {1}, 10, 1, tts::SimMode::formula_consistent),
                    InputError);
}

TEST_CASE("discrepancy report quantifies the fallback-assumption gap") {
    auto rows = tts::discrepancy_report(0.6, 0.9, {1, 2, 3}, 200000, 31);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].analytic_formula == doctest::Approx(0.792).epsilon(1e-12));
    CHECK(rows[0].analytic_exact == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(rows[0].gap == doctest::Approx(0.192).epsilon(1e-9));
    for (const auto& r : rows) {
        CHECK(std::abs(r.mc_formula - r.analytic_formula) <= 3.0 * r.stderr_formula);
        CHECK(std::abs(r.mc_exact - r.analytic_exact) <= 3.0 * r.stderr_exact);
        CHECK(r.gap > 0.0); // the verbatim formula is optimistic at small N
    }
    const std::string csv = tts::discrepancy_to_csv(0.6, 0.9, rows);
    CHECK(csv.find("analytic_formula") != std::string::npos);
}
