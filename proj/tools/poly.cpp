#include "polycgo/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"poly: Cauchy transforms, CGO solutions and coefficient recovery for perturbed polyharmonic operators"};
    app.require_subcommand(1);

    std::string config_path;
    polycgo::RunOptions options;

    const std::pair<const char*, const char*> commands[] = {
        {"cauchy-test", "Cauchy inverse identity and oscillatory decay slopes"},
        {"cgo", "CGO construction with remainder, norm and residual scaling"},
        {"recover", "triangular coefficient recovery at interior probes"},
    };
    for (const auto& [name, description] : commands) {
        CLI::App* sub = app.add_subcommand(name, description);
        sub->add_option("--config", config_path, "experiment configuration (JSON)")->required();
        sub->add_option("--out", options.out_dir, "output directory (overrides output.directory)");
        sub->add_option("--threads", options.threads, "OpenMP threads (0 = runtime default)")->check(CLI::NonNegativeNumber);
        sub->add_option("--seed", options.seed, "seed for the power-iteration start field");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : polycgo::kExitConfig;
    }
    const std::string command = app.get_subcommands().front()->get_name();
    return polycgo::run_command(command, config_path, options, std::cout, std::cerr);
}
