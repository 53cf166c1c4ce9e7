#pragma once

#include "polycgo/config.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace polycgo {

enum ExitCode : int {
    kExitOk = 0,
    kExitTolerance = 1,
    kExitConfig = 2,
    kExitNumerical = 3,
};

struct RunOptions {
    /// Overrides output.directory when non-empty.
    std::string out_dir;
    /// OpenMP thread count; 0 keeps the runtime default.
    int threads = 0;
    /// Seeds the random start of the power-iteration probe.
    std::uint64_t seed = 0;
};

/// Column-labelled table rendered as CSV or JSON.
struct Table {
    using Cell = std::variant<double, long long, std::string>;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

void write_csv(std::ostream& os, const Table& table, const std::string& hash);
void write_json(std::ostream& os, const Table& table, const std::string& hash);

/// Inverse identity, L^p ratios and oscillatory decay slopes.
int cmd_cauchy_test(const ExperimentConfig& config, const RunOptions& options);
/// CGO families over the (z0, h) grid with norm, residual and slope columns.
int cmd_cgo(const ExperimentConfig& config, const RunOptions& options);
/// Triangular recovery report.
int cmd_recover(const ExperimentConfig& config, const RunOptions& options);

/// Loads the config and runs `command` ("cauchy-test", "cgo", "recover"),
/// mapping failures to exit codes and printing diagnostics to `err`.
int run_command(const std::string& command, const std::string& config_path, const RunOptions& options,
                std::ostream& out, std::ostream& err);

} // namespace polycgo
