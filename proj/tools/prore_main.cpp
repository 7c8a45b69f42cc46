#include <iostream>

#include <CLI11.hpp>

#include "prore/cli/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"prore: proactive reward system for simulated GUI agents"};
    app.require_subcommand(1);

    prore::cli::EvaluateOptions eval_opts;
    auto* evaluate = app.add_subcommand("evaluate", "run reward evaluation over a fixture suite");
    evaluate->add_option("--config", eval_opts.config_path, "pipeline config JSON");
    evaluate->add_option("--suite", eval_opts.suite_path, "fixture suite JSON")->required();
    evaluate->add_option("--out", eval_opts.out_dir, "output directory")->required();
    evaluate->add_option("--judge", eval_opts.judge, "prore | trajectory_only");
    std::uint64_t eval_seed = 0;
    auto* eval_seed_opt = evaluate->add_option("--seed", eval_seed, "run seed");
    evaluate->add_option("--parallelism", eval_opts.parallelism, "concurrent batch items");
    evaluate->add_option("--assets", eval_opts.assets_dir, "prompt assets directory");

    prore::cli::TtsSimOptions sim_opts;
    auto* tts_sim = app.add_subcommand("tts-sim", "test-time-scaling law: analytic + Monte Carlo");
    tts_sim->add_option("--p_a", sim_opts.p_a, "policy success rate");
    tts_sim->add_option("--p_c", sim_opts.p_c, "reward accuracy");
    tts_sim->add_option("--N", sim_opts.budget_n, "trial budget");
    tts_sim->add_option("--trials", sim_opts.trials, "Monte Carlo episodes");
    tts_sim->add_option("--seed", sim_opts.seed, "RNG seed");
    tts_sim->add_option("--mode", sim_opts.mode, "formula_consistent | exact_procedure");
    tts_sim->add_flag("--sweep", sim_opts.sweep, "emit the full grid as CSV");
    tts_sim->add_option("--sweep-out", sim_opts.sweep_out, "CSV path for --sweep");
    tts_sim->add_option("--discrepancy-out", sim_opts.discrepancy_out,
                        "CSV path for the fallback-assumption report (N=1..3)");

    prore::cli::TtsLoopOptions loop_opts;
    auto* tts_loop = app.add_subcommand("tts-loop", "early-stop best-of-N over suite fixtures");
    tts_loop->add_option("--suite", loop_opts.suite_path, "fixture suite JSON")->required();
    tts_loop->add_option("--config", loop_opts.config_path, "pipeline config JSON");
    tts_loop->add_option("--judge", loop_opts.judge, "prore | trajectory_only");
    tts_loop->add_option("--p_a", loop_opts.p_a, "policy success probability");
    tts_loop->add_option("--N", loop_opts.budget_n, "trial budget");
    tts_loop->add_option("--episodes", loop_opts.episodes, "episodes");
    tts_loop->add_option("--seed", loop_opts.seed, "seed");
    tts_loop->add_flag("--adversarial-only", loop_opts.adversarial_only,
                       "restrict to adversarial fixture pairs");
    tts_loop->add_option("--assets", loop_opts.assets_dir, "prompt assets directory");

    prore::cli::ReplayOptions replay_opts;
    auto* replay = app.add_subcommand("replay", "re-derive a stored verdict from its artifacts");
    replay->add_option("--run-dir", replay_opts.run_dir, "runs directory")->required();
    replay->add_option("--goal", replay_opts.goal_id, "goal id")->required();
    replay->add_option("--suite", replay_opts.suite_path, "fixture suite JSON")->required();
    replay->add_option("--assets", replay_opts.assets_dir, "prompt assets directory");

    prore::cli::ReportOptions report_opts;
    auto* report = app.add_subcommand("report", "summarize a runs directory");
    report->add_option("--run-dir", report_opts.run_dir, "runs directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (evaluate->parsed()) {
            if (eval_seed_opt->count() > 0) eval_opts.seed = eval_seed;
            return prore::cli::cmd_evaluate(eval_opts);
        }
        if (tts_sim->parsed()) return prore::cli::cmd_tts_sim(sim_opts);
        if (tts_loop->parsed()) return prore::cli::cmd_tts_loop(loop_opts);
        if (replay->parsed()) return prore::cli::cmd_replay(replay_opts);
        if (report->parsed()) return prore::cli::cmd_report(report_opts);
    } catch (const prore::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return prore::cli::kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return prore::cli::kExitUsage;
    }
    return prore::cli::kExitUsage;
}
