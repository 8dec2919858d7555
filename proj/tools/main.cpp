#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "cli.hpp"

int main(int argc, char** argv) {
    using namespace mfg_sl::cli;

    CLI::App app{"Semi-Lagrangian solver for first-order mean field games in 1D"};
    app.require_subcommand(1);
    // "-h" would clash with the time-step option --h.
    app.set_help_flag("--help", "Print this help message and exit");

    RunConfig flags;
    std::string config_path;
    std::optional<double> rho, h, eps, sigma, tau;
    std::optional<int> max_iter, snapshot_every, threads, preset;
    std::optional<std::string> problem, out;
    int levels = 3;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--problem", problem, "Built-in problem: test1, test2, nogame");
        cmd->add_option("--preset", preset, "Parameter row 1..4 for test1");
        cmd->add_option("--config", config_path, "key = value config file");
        cmd->add_option("--out", out, "Output directory (default: $MFG_SL_OUT or ./mfg_out)");
        cmd->add_option("--rho", rho, "Space step");
        cmd->add_option("--h", h, "Time step");
        cmd->add_option("--eps", eps, "Mollifier width");
        cmd->add_option("--sigma", sigma, "Interaction kernel width");
        cmd->add_option("--tau", tau, "Stopping threshold");
        cmd->add_option("--max-iter", max_iter, "Fixed-point iteration cap");
        cmd->add_option("--snapshot-every", snapshot_every, "Write every k-th time level");
        cmd->add_option("--threads", threads, "Worker threads for per-node loops");
    };

    auto* run = app.add_subcommand("run", "Solve one problem and write CSV/JSON outputs");
    add_common(run);
    auto* table1 = app.add_subcommand("table1", "Reproduce the test1 parameter/error table");
    table1->add_option("--out", out, "Output directory");
    table1->add_option("--threads", threads, "Worker threads");
    auto* conv = app.add_subcommand("convergence", "Refinement study with stability statistics");
    add_common(conv);
    conv->add_option("--levels", levels, "Number of refinement levels")->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    auto build_config = [&]() {
        RunConfig cfg = config_path.empty() ? RunConfig{} : load_config_file(config_path);
        if (problem) cfg.problem = *problem;
        if (preset) cfg.preset = *preset;
        if (out) cfg.out = *out;
        if (rho) cfg.rho = rho;
        if (h) cfg.h = h;
        if (eps) cfg.eps = eps;
        if (sigma) cfg.sigma = sigma;
        if (tau) cfg.tau = tau;
        if (max_iter) cfg.max_iter = max_iter;
        if (snapshot_every) cfg.snapshot_every = *snapshot_every;
        if (threads) cfg.threads = *threads;
        return cfg;
    };

    try {
        if (*run) return cmd_run(build_config(), std::cout, std::cerr);
        if (*table1) return cmd_table1(out.value_or(default_out_dir()), threads.value_or(1), std::cout, std::cerr);
        if (*conv) return cmd_convergence(build_config(), levels, std::cout, std::cerr);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kError;
    }
    return kError;
}
