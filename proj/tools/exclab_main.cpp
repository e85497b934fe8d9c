// exclab: config-driven experiment runner. Every subcommand takes the same
// flags; the subcommand names the experiment kind and must match the config.

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "exc/experiment.hpp"

namespace {

struct CliArgs {
    std::string config;
    std::string out;
    uint64_t seed = 0;
    bool seed_set = false;
    int threads = 1;
};

int run_kind(exc::ExperimentKind kind, const CliArgs& args) {
    exc::ExperimentConfig cfg;
    try {
        cfg = exc::parse_experiment_config(args.config);
        if (cfg.kind != kind) {
            std::cerr << args.config << ": config kind \""
                      << exc::kind_name(cfg.kind)
                      << "\" does not match subcommand \""
                      << exc::kind_name(kind) << "\"\n";
            return 2;
        }
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    if (args.seed_set) cfg.seed = args.seed;

    try {
        const exc::RunResult res =
            exc::run_experiment(cfg, args.out, args.threads);
        for (const std::string& a : res.artifacts)
            std::cout << "wrote " << a << "\n";
        if (!res.ok) {
            for (const std::string& f : res.failures)
                std::cerr << "FAILED: " << f << "\n";
            return 1;
        }
        std::cout << "ok (" << res.wall_clock_seconds << " s)\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"open exclusion process lab"};
    app.require_subcommand(1);

    CliArgs args;
    exc::ExperimentKind selected = exc::ExperimentKind::simulate;

    for (exc::ExperimentKind kind :
         {exc::ExperimentKind::simulate, exc::ExperimentKind::pde,
          exc::ExperimentKind::stationary, exc::ExperimentKind::hydro_compare,
          exc::ExperimentKind::tilt_compare, exc::ExperimentKind::ldp_check,
          exc::ExperimentKind::convergence_study}) {
        CLI::App* sub = app.add_subcommand(exc::kind_name(kind));
        sub->add_option("--config", args.config, "experiment config (JSON)")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--out", args.out, "output directory")->required();
        sub->add_option("--seed", args.seed, "override the config seed")
            ->each([&args](const std::string&) { args.seed_set = true; });
        sub->add_option("--threads", args.threads, "worker threads")
            ->check(CLI::PositiveNumber);
        sub->callback([&selected, kind] { selected = kind; });
    }

    CLI11_PARSE(app, argc, argv);
    return run_kind(selected, args);
}
