#include <string>

#include <CLI11.hpp>

#include "topoderiv/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Topological derivative pipeline for two-phase elasticity"};
    app.require_subcommand(1);

    topoderiv::RunOptions opts;
    const std::pair<const char*, const char*> commands[] = {
        {"expand", "Closed-form first- and second-order derivatives for all methods"},
        {"sweep", "Brute-force j(eps) oracle plus residual rates and limit estimates"},
        {"verify", "Expansion and oracle together with every cross-check"},
        {"correctors", "Exterior corrector solves with far-field diagnostics"},
        {"polarisation", "Condensed polarisation tensor of the inclusion"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", opts.config_path, "Problem description file")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--out", opts.out_dir, "Output directory (created if missing)");
        sub->add_option("--jobs", opts.jobs, "Concurrent oracle solves")
            ->check(CLI::PositiveNumber);
        sub->add_option("--cache", opts.cache_dir, "Corrector cache directory");
        sub->callback([&opts, name = std::string(name)] { opts.command = name; });
    }

    CLI11_PARSE(app, argc, argv);
    return topoderiv::run_command(opts);
}
