#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "prore/core/errors.hpp"
#include "prore/tts/rng.hpp"

namespace prore::tts {

// q = p_a*p_c + (1-p_a)*(1-p_c): probability a judged trial looks positive.
// Evaluated as (1-p_c) + p_a*(2*p_c-1) so p_c = 0.5 collapses to exactly 0.5.
double q_positive(double p_a, double p_c);

/// Closed-form final success rate of best-of-N with early stop:
/// P = A + (p_a - A)*(1-q)^N with A = p_a*p_c/q. The q = 0 corner (only at
/// (0,1)/(1,0)) returns p_a: no positive ever appears, so the fallback trial
/// decides. p_a in {0,1} and p_c = 0.5 return exactly p_a.
double analytic_p_final(double p_a, double p_c, int budget_n);

// Same procedure but the budget-exhausted episode submits trial N itself,
// whose success is correlated with its negative judgment:
// P = A*(1-(1-q)^N) + (1-q)^(N-1) * p_a*(1-p_c).
double exact_procedure_p_final(double p_a, double p_c, int budget_n);

enum class SimMode { formula_consistent, exact_procedure };

std::string to_string(SimMode m);
SimMode sim_mode_from_string(const std::string& s);

struct TtsConfig {
    double p_a = 0.5;
    double p_c = 0.9;
    int budget_n = 1;
    long long trials = 50000;
    std::uint64_t seed = 0;
    SimMode mode = SimMode::formula_consistent;

    void validate() const;
};

struct TtsEstimate {
    double analytic = 0.0;
    double monte_carlo = 0.0;
    double std_error = 0.0; // sqrt(p̂(1-p̂)/samples)
    long long samples = 0;
};

/// Seeded Monte Carlo of the test-time-scaling procedure. Episodes draw
/// per-trial (success, judged-correct) pairs; the first positive judgment is
/// submitted. With no positive, formula_consistent submits a fresh unjudged
/// Bernoulli(p_a) trial (the closed form's fallback term) while
/// exact_procedure submits trial N itself. Bit-reproducible from the seed.
TtsEstimate simulate_tts(const TtsConfig& config);

struct EpisodeOutcome {
    int submitted_trial = 0; // in [1, N]
    bool submitted_success = false;
    int positives_seen = 0;
    bool stopped_early = false;
};

struct TrialResult {
    bool judged_success = false;
    bool oracle_success = false;
};

using TrialRunner = std::function<TrialResult(int trial_index)>;

/// Live early-stop loop over real rollouts: runs trials until the reward
/// system judges one successful or the budget is spent, then submits the
/// last trial (exact-procedure semantics). A trial whose runner throws is
/// treated as judged failure and the loop continues.
EpisodeOutcome run_tts_loop(const TrialRunner& runner, int budget_n);

struct SweepRow {
    double p_a = 0.0;
    double p_c = 0.0;
    int budget_n = 0;
    SimMode mode = SimMode::formula_consistent;
    TtsEstimate estimate;
    std::uint64_t seed = 0;
};

std::vector<SweepRow> sweep_grid(const std::vector<double>& p_a_grid,
                                 const std::vector<double>& p_c_grid,
                                 const std::vector<int>& n_grid, long long trials,
                                 std::uint64_t seed, SimMode mode);

// Header: p_a,p_c,N,mode,analytic,mc,stderr,samples,seed
std::string sweep_to_csv(const std::vector<SweepRow>& rows);

struct DiscrepancyRow {
    int budget_n = 0;
    double analytic_formula = 0.0;  // early-stop closed form
    double analytic_exact = 0.0;    // closed form of the exact procedure
    double mc_formula = 0.0;
    double mc_exact = 0.0;
    double gap = 0.0; // analytic_formula - analytic_exact
    double stderr_formula = 0.0;
    double stderr_exact = 0.0;
};

/// Quantifies the closed form's fallback assumption: the unfiltered-trial
/// term vs submitting the Nth (negatively judged) trial.
std::vector<DiscrepancyRow> discrepancy_report(double p_a, double p_c,
                                               const std::vector<int>& n_values, long long trials,
                                               std::uint64_t seed);

std::string discrepancy_to_csv(double p_a, double p_c, const std::vector<DiscrepancyRow>& rows);

} // namespace prore::tts
