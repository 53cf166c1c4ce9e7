#pragma once

#include "polycgo/cgo.hpp"
#include "polycgo/grid.hpp"
#include "polycgo/operator.hpp"
#include "polycgo/phase.hpp"
#include "polycgo/recovery.hpp"

#include <json.hpp>

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace polycgo {

/// Malformed or inconsistent experiment configuration. The message names the
/// offending field.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct GridConfig {
    std::size_t n = 512;
    double half_width = 1.0;
    cplx center{};
};

struct OperatorConfig {
    int m = 2;
    CoefficientForm form = CoefficientForm::prime;
    /// "j,k" -> expression; missing entries are 0.
    std::map<std::string, std::string> A;
    std::map<std::string, std::string> A_tilde;
};

struct PhaseConfig {
    std::vector<cplx> z0{cplx{}};
    std::vector<double> h{0.2, 0.14, 0.1, 0.07, 0.05};
};

struct CauchyConfig {
    std::string omega = "gauss(0, 0, 0.4, 1)";
    std::vector<double> q{2.0, 4.0};
    /// Minimum decay slope per entry of q; NaN (null in JSON) reports the slope without a bound.
    std::vector<double> min_slope{0.5, 0.2};
    std::vector<double> p{1.5, 2.0, 4.0};
    /// Bound on ||dbar dbar^{-1} omega - omega||_2 / ||omega||_2.
    double inverse_tolerance = 1e-2;
};

struct CGOConfig {
    int amplitude_degree = 0;
    bool adjoint = true;
    int power_iterations = 20;
    double min_w_slope = 0.5;
    double min_g_slope = 0.5;
    double min_r_slope = 0.45;
    double min_norm_slope = 0.4;
};

struct RecoveryConfig {
    RecoveryMode mode = RecoveryMode::amplitude_only;
    std::vector<cplx> probes{cplx{0.1, 0.05}};
    /// Accepted relative error at the smallest h. An entry whose true value is
    /// 0 is measured against the largest true |B| at the same probe.
    double max_rel_error = 0.15;
    /// Accepted absolute error when every true difference at a probe vanishes.
    double zero_abs_tolerance = 1e-9;
    double conditioning_bound = 1e3;
};

struct OutputConfig {
    std::string directory = "out";
    std::string format = "csv";
};

struct ExperimentConfig {
    GridConfig grid;
    OperatorConfig op;
    PhaseConfig phase;
    NeumannOptions solver;
    CauchyConfig cauchy;
    CGOConfig cgo;
    RecoveryConfig recovery;
    OutputConfig output;
};

/// Parses JSON text, reporting syntax errors with line and column. Missing
/// sections take defaults; unknown keys are rejected except a top-level
/// "config_hash", which is ignored so that echoed configs load again.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Throws ConfigError for n, coupling, expression and range problems.
void validate(const ExperimentConfig& config);

nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig from_json(const nlohmann::json& j);

/// FNV-1a 64-bit hash of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

ComplexGrid make_grid(const ExperimentConfig& config);
/// Samples the operator (tilde = false) or the perturbed partner (tilde = true).
PerturbedOperator make_operator(const ExperimentConfig& config, const ComplexGrid& grid, bool tilde);

} // namespace polycgo
