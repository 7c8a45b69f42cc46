#include "prore/tts/tts.hpp"

#include <cmath>
#include <sstream>

namespace prore::tts {

namespace {

void check_unit(double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) {
        throw InputError(std::string(name) + " must lie in [0,1]");
    }
}

double pow_int(double base, int n) {
    double result = 1.0;
    double b = base;
    while (n > 0) {
        if (n & 1) result *= b;
        b *= b;
        n >>= 1;
    }
    return result;
}

} // namespace

double q_positive(double p_a, double p_c) {
    check_unit(p_a, "p_a");
    check_unit(p_c, "p_c");
    return (1.0 - p_c) + p_a * (2.0 * p_c - 1.0);
}

double analytic_p_final(double p_a, double p_c, int budget_n) {
    check_unit(p_a, "p_a");
    check_unit(p_c, "p_c");
    if (budget_n < 1) throw InputError("budget N must be >= 1");
    if (p_a == 0.0 || p_a == 1.0) return p_a; // fixed points
    if (p_c == 0.5) return p_a;               // q = 1/2 collapse, exact
    const double q = q_positive(p_a, p_c);
    if (q <= 0.0) return p_a; // no positive can occur; the fallback term decides
    const double a = p_a * p_c / q;
    return a + (p_a - a) * pow_int(1.0 - q, budget_n);
}

double exact_procedure_p_final(double p_a, double p_c, int budget_n) {
    check_unit(p_a, "p_a");
    check_unit(p_c, "p_c");
    if (budget_n < 1) throw InputError("budget N must be >= 1");
    const double q = q_positive(p_a, p_c);
    if (q <= 0.0) return p_a;
    if (q >= 1.0) return p_a * p_c / q; // every trial judged positive
    const double a = p_a * p_c / q;
    // With no positive among N trials, the submitted Nth trial succeeds with
    // probability P(success | negative) = p_a(1-p_c)/(1-q).
    return a * (1.0 - pow_int(1.0 - q, budget_n)) +
           pow_int(1.0 - q, budget_n - 1) * p_a * (1.0 - p_c);
}

std::string to_string(SimMode m) {
    return m == SimMode::formula_consistent ? "formula_consistent" : "exact_procedure";
}

SimMode sim_mode_from_string(const std::string& s) {
    if (s == "formula_consistent") return SimMode::formula_consistent;
    if (s == "exact_procedure") return SimMode::exact_procedure;
    throw ParseError("unknown simulation mode: " + s);
}

void TtsConfig::validate() const {
    check_unit(p_a, "p_a");
    check_unit(p_c, "p_c");
    if (budget_n < 1) throw InputError("budget N must be >= 1");
    if (trials < 1) throw InputError("trials must be >= 1");
}

TtsEstimate simulate_tts(const TtsConfig& config) {
    config.validate();
    long long hits = 0;
    for (long long episode = 0; episode < config.trials; ++episode) {
        SplitMix64 rng = SplitMix64::substream(config.seed, static_cast<std::uint64_t>(episode));
        bool submitted = false;
        bool submitted_success = false;
        bool last_trial_success = false;
        for (int n = 0; n < config.budget_n; ++n) {
            const bool success = rng.bernoulli(config.p_a);
            const bool judged_correctly = rng.bernoulli(config.p_c);
            const bool positive_judgment = (success && judged_correctly) ||
                                           (!success && !judged_correctly);
            last_trial_success = success;
            if (positive_judgment) {
                submitted = true;
                submitted_success = success;
                break;
            }
        }
        if (!submitted) {
            submitted_success = config.mode == SimMode::formula_consistent
                                    ? rng.bernoulli(config.p_a) // fresh unfiltered trial
                                    : last_trial_success;       // the Nth trial itself
        }
        if (submitted_success) ++hits;
    }

    TtsEstimate est;
    est.samples = config.trials;
    est.monte_carlo = static_cast<double>(hits) / static_cast<double>(config.trials);
    est.std_error = std::sqrt(est.monte_carlo * (1.0 - est.monte_carlo) /
                              static_cast<double>(config.trials));
    est.analytic = config.mode == SimMode::formula_consistent
                       ? analytic_p_final(config.p_a, config.p_c, config.budget_n)
                       : exact_procedure_p_final(config.p_a, config.p_c, config.budget_n);
    return est;
}

EpisodeOutcome run_tts_loop(const TrialRunner& runner, int budget_n) {
    if (budget_n < 1) throw InputError("run_tts_loop: budget N must be >= 1");
    EpisodeOutcome outcome;
    for (int trial = 1; trial <= budget_n; ++trial) {
        TrialResult result;
        try {
            result = runner(trial);
        } catch (const std::exception&) {
            result.judged_success = false; // a failed trial is judged failure
            result.oracle_success = false;
        }
        outcome.submitted_trial = trial;
        outcome.submitted_success = result.oracle_success;
        if (result.judged_success) {
            ++outcome.positives_seen;
            outcome.stopped_early = trial < budget_n;
            return outcome;
        }
    }
    outcome.stopped_early = false;
    return outcome;
}

std::vector<SweepRow> sweep_grid(const std::vector<double>& p_a_grid,
                                 const std::vector<double>& p_c_grid,
                                 const std::vector<int>& n_grid, long long trials,
                                 std::uint64_t seed, SimMode mode) {
    if (p_a_grid.empty() || p_c_grid.empty() || n_grid.empty()) {
        throw InputError("sweep_grid: grids must be non-empty");
    }
    std::vector<SweepRow> rows;
    std::uint64_t cell = 0;
    for (double p_a : p_a_grid) {
        for (double p_c : p_c_grid) {
            for (int n : n_grid) {
                TtsConfig config{p_a, p_c, n, trials, seed + cell, mode};
                SweepRow row;
                row.p_a = p_a;
                row.p_c = p_c;
                row.budget_n = n;
                row.mode = mode;
                row.seed = config.seed;
                row.estimate = simulate_tts(config);
                rows.push_back(row);
                ++cell;
            }
        }
    }
    return rows;
}

namespace {

std::string fmt(double v) {
    std::ostringstream out;
    out.precision(9);
    out << v;
    return out.str();
}

} // namespace

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
    std::string out = "p_a,p_c,N,mode,analytic,mc,stderr,samples,seed\n";
    for (const auto& r : rows) {
        out += fmt(r.p_a) + "," + fmt(r.p_c) + "," + std::to_string(r.budget_n) + "," +
               to_string(r.mode) + "," + fmt(r.estimate.analytic) + "," +
               fmt(r.estimate.monte_carlo) + "," + fmt(r.estimate.std_error) + "," +
               std::to_string(r.estimate.samples) + "," + std::to_string(r.seed) + "\n";
    }
    return out;
}

std::vector<DiscrepancyRow> discrepancy_report(double p_a, double p_c,
                                               const std::vector<int>& n_values, long long trials,
                                               std::uint64_t seed) {
    std::vector<DiscrepancyRow> rows;
    std::uint64_t cell = 0;
    for (int n : n_values) {
        DiscrepancyRow row;
        row.budget_n = n;
        row.analytic_formula = analytic_p_final(p_a, p_c, n);
        row.analytic_exact = exact_procedure_p_final(p_a, p_c, n);
        row.gap = row.analytic_formula - row.analytic_exact;
        TtsConfig formula{p_a, p_c, n, trials, seed + cell, SimMode::formula_consistent};
        TtsConfig exact{p_a, p_c, n, trials, seed + cell + 1000003ULL, SimMode::exact_procedure};
        TtsEstimate ef = simulate_tts(formula);
        TtsEstimate ee = simulate_tts(exact);
        row.mc_formula = ef.monte_carlo;
        row.stderr_formula = ef.std_error;
        row.mc_exact = ee.monte_carlo;
        row.stderr_exact = ee.std_error;
        rows.push_back(row);
        cell += 2000003ULL;
    }
    return rows;
}

std::string discrepancy_to_csv(double p_a, double p_c, const std::vector<DiscrepancyRow>& rows) {
    std::string out = "p_a,p_c,N,analytic_formula,analytic_exact,mc_formula,mc_exact,gap,"
                      "stderr_formula,stderr_exact\n";
    for (const auto& r : rows) {
        out += fmt(p_a) + "," + fmt(p_c) + "," + std::to_string(r.budget_n) + "," +
               fmt(r.analytic_formula) + "," + fmt(r.analytic_exact) + "," + fmt(r.mc_formula) +
               "," + fmt(r.mc_exact) + "," + fmt(r.gap) + "," + fmt(r.stderr_formula) + "," +
               fmt(r.stderr_exact) + "\n";
    }
    return out;
}

} // namespace prore::tts
