#include "polycgo/commands.hpp"

#include "polycgo/cauchy.hpp"
#include "polycgo/cgo.hpp"
#include "polycgo/expr.hpp"
#include "polycgo/recovery.hpp"

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

namespace polycgo {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_cell(const Table::Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
    if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
    const std::string& s = std::get<std::string>(c);
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string quoted = "\"";
    for (char ch : s) {
        if (ch == '"') quoted += '"';
        quoted += ch;
    }
    return quoted + "\"";
}

json json_cell(const Table::Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) return std::isfinite(*d) ? json(*d) : json(nullptr);
    if (const auto* i = std::get_if<long long>(&c)) return *i;
    return std::get<std::string>(c);
}

// Collects tables and log lines, then writes the run directory in one go.
class RunOutput {
public:
    RunOutput(const ExperimentConfig& config, const RunOptions& options)
        : config_(config),
          hash_(config_hash(config)),
          dir_(options.out_dir.empty() ? config.output.directory : options.out_dir),
          start_(std::chrono::steady_clock::now()) {}

    const std::string& hash() const { return hash_; }

    void log(const std::string& line) { log_ << line << '\n'; }

    void table(const std::string& name, Table t) { tables_.emplace_back(name, std::move(t)); }

    void write(const std::string& status) {
        fs::create_directories(dir_);
        {
            json echo = to_json(config_);
            echo["config_hash"] = hash_;
            std::ofstream f(dir_ / "config.json");
            f << echo.dump(2) << '\n';
        }
        for (const auto& [name, t] : tables_) {
            if (config_.output.format == "json") {
                std::ofstream f(dir_ / (name + ".json"));
                write_json(f, t, hash_);
            } else {
                std::ofstream f(dir_ / (name + ".csv"));
                write_csv(f, t, hash_);
            }
        }
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        std::ofstream f(dir_ / "log.txt");
        f << "# config_hash=" << hash_ << '\n' << log_.str() << "status=" << status << '\n';
        char buf[64];
        std::snprintf(buf, sizeof buf, "wall_time_s=%.3f\n", wall);
        f << buf;
    }

    const fs::path& dir() const { return dir_; }

private:
    const ExperimentConfig& config_;
    std::string hash_;
    fs::path dir_;
    std::chrono::steady_clock::time_point start_;
    std::ostringstream log_;
    std::vector<std::pair<std::string, Table>> tables_;
};

// One pass/fail line of the checks table.
struct Checks {
    Table table{{"quantity", "re_z0", "im_z0", "parameter", "value", "threshold", "pass"}, {}};
    bool all_pass = true;

    void add(const std::string& quantity, cplx z0, double parameter, double value, double threshold, bool pass) {
        table.rows.push_back({quantity, z0.real(), z0.imag(), parameter, value, threshold, static_cast<long long>(pass)});
        all_pass = all_pass && pass;
    }

    // Slope >= threshold; an identically zero series passes (nothing to decay)
    // and a NaN threshold only reports the slope.
    void slope(const std::string& quantity, cplx z0, const std::vector<double>& hs, const std::vector<double>& ys,
               double threshold) {
        bool all_zero = true;
        for (double y : ys) all_zero = all_zero && y == 0.0;
        if (all_zero) {
            add(quantity, z0, kNaN, 0.0, threshold, true);
            return;
        }
        const double s = hs.size() >= 2 ? loglog_slope(hs, ys) : kNaN;
        add(quantity, z0, kNaN, s, threshold, std::isnan(threshold) || (std::isfinite(s) && s >= threshold));
    }
};

void apply_threads(const RunOptions& options) {
    if (options.threads > 0) omp_set_num_threads(options.threads);
}

} // namespace

void write_csv(std::ostream& os, const Table& table, const std::string& hash) {
    os << "# config_hash=" << hash << '\n';
    for (std::size_t c = 0; c < table.columns.size(); ++c) os << (c ? "," : "") << table.columns[c];
    os << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << csv_cell(row[c]);
        os << '\n';
    }
}

void write_json(std::ostream& os, const Table& table, const std::string& hash) {
    json rows = json::array();
    for (const auto& row : table.rows) {
        json r = json::object();
        for (std::size_t c = 0; c < row.size(); ++c) r[table.columns[c]] = json_cell(row[c]);
        rows.push_back(std::move(r));
    }
    json doc = {{"config_hash", hash}, {"columns", table.columns}, {"rows", std::move(rows)}};
    os << doc.dump(2) << '\n';
}

int cmd_cauchy_test(const ExperimentConfig& config, const RunOptions& options) {
    apply_threads(options);
    RunOutput out(config, options);
    const ComplexGrid grid = make_grid(config);
    const ScalarField omega = Expression::parse(config.cauchy.omega).sample(grid);
    Checks checks;

    const double omega_l2 = norm_lp(omega, 2.0);
    if (omega_l2 > 0.0) {
        const double e_bar = norm_lp(wirtinger_dbar(dbar_inv(omega)) - omega, 2.0) / omega_l2;
        const double e_d = norm_lp(wirtinger_d(d_inv(omega)) - omega, 2.0) / omega_l2;
        checks.add("inverse_identity_dbar", {}, kNaN, e_bar, config.cauchy.inverse_tolerance,
                   e_bar <= config.cauchy.inverse_tolerance);
        checks.add("inverse_identity_d", {}, kNaN, e_d, config.cauchy.inverse_tolerance,
                   e_d <= config.cauchy.inverse_tolerance);
        out.log("inverse identity: dbar " + format_double(e_bar) + ", d " + format_double(e_d));
    }
    const ScalarField transformed = dbar_inv(omega);
    for (double p : config.cauchy.p) {
        const double base = norm_lp(omega, p);
        const double ratio = base > 0.0 ? norm_lp(transformed, p) / base : 0.0;
        checks.table.rows.push_back(
            {std::string("lp_ratio"), 0.0, 0.0, p, ratio, kNaN, static_cast<long long>(1)});
    }

    Table results{{"re_z0", "im_z0", "q", "h", "norm"}, {}};
    for (const cplx z0 : config.phase.z0) {
        const auto tables = oscillatory_decay_probe(omega, PhaseSpec{z0, config.phase.h.front(), 1}, config.cauchy.q,
                                                    config.phase.h);
        for (std::size_t qi = 0; qi < tables.size(); ++qi) {
            std::vector<double> hs, ns;
            for (const auto& row : tables[qi].rows) {
                results.rows.push_back({z0.real(), z0.imag(), tables[qi].q, row.h, row.norm});
                hs.push_back(row.h);
                ns.push_back(row.norm);
            }
            checks.slope("decay_slope_q" + format_double(tables[qi].q), z0, hs, ns, config.cauchy.min_slope[qi]);
        }
    }
    out.table("results", std::move(results));
    out.table("slopes", std::move(checks.table));
    const int code = checks.all_pass ? kExitOk : kExitTolerance;
    out.write(code == kExitOk ? "ok" : "tolerance_failure");
    return code;
}

int cmd_cgo(const ExperimentConfig& config, const RunOptions& options) {
    apply_threads(options);
    RunOutput out(config, options);
    const ComplexGrid grid = make_grid(config);
    const PerturbedOperator op = make_operator(config, grid, false);
    const AmplitudeSpec a = AmplitudeSpec::monomial(grid, config.cgo.amplitude_degree);
    Checks checks;
    Table results{{"re_z0", "im_z0", "h", "w_l2", "g_l2", "r_hm", "s_hm", "norm_S", "residual_l2", "residual_rel",
                   "solve_residual", "neumann_terms"},
                  {}};

    for (const cplx z0 : config.phase.z0) {
        std::vector<PhaseSpec> phases;
        for (double h : config.phase.h) phases.push_back({z0, h, 1});
        const NormProbeTable norms = operator_norm_probe(op, phases, options.seed, config.cgo.power_iterations);

        std::vector<double> hs, ws, gs, rs, ss, ns;
        for (std::size_t i = 0; i < phases.size(); ++i) {
            const PhaseSpec& phase = phases[i];
            const CGOSolution u = assemble_cgo(op, phase, a, config.solver);
            double s_hm = kNaN;
            if (config.cgo.adjoint) s_hm = assemble_adjoint_cgo(op, phase, a, config.solver).diagnostics.r_hm;
            const auto& d = u.diagnostics;
            results.rows.push_back({z0.real(), z0.imag(), phase.h, d.w_l2, d.g_l2, d.r_hm, s_hm, norms.rows[i].norm,
                                    d.residual_l2, d.residual_rel, d.solve_residual,
                                    static_cast<long long>(d.neumann_terms)});
            hs.push_back(phase.h);
            ws.push_back(d.w_l2);
            gs.push_back(d.g_l2);
            rs.push_back(d.r_hm);
            ss.push_back(s_hm);
            ns.push_back(norms.rows[i].norm);
            checks.add("norm_S_below_one", z0, phase.h, norms.rows[i].norm, 1.0, norms.rows[i].norm < 1.0);
            out.log("z0=" + format_double(z0.real()) + "," + format_double(z0.imag()) + " h=" + format_double(phase.h) +
                    " terms=" + std::to_string(d.neumann_terms) + " residual_rel=" + format_double(d.residual_rel));
        }
        checks.slope("w_l2_slope", z0, hs, ws, config.cgo.min_w_slope);
        checks.slope("g_l2_slope", z0, hs, gs, config.cgo.min_g_slope);
        checks.slope("r_hm_slope", z0, hs, rs, config.cgo.min_r_slope);
        if (config.cgo.adjoint) checks.slope("s_hm_slope", z0, hs, ss, config.cgo.min_r_slope);
        checks.slope("norm_S_slope", z0, hs, ns, config.cgo.min_norm_slope);
    }
    out.table("results", std::move(results));
    out.table("slopes", std::move(checks.table));
    const int code = checks.all_pass ? kExitOk : kExitTolerance;
    out.write(code == kExitOk ? "ok" : "tolerance_failure");
    return code;
}

int cmd_recover(const ExperimentConfig& config, const RunOptions& options) {
    apply_threads(options);
    RunOutput out(config, options);
    const ComplexGrid grid = make_grid(config);
    const RecoveryProblem problem(make_operator(config, grid, false), make_operator(config, grid, true),
                                  config.recovery.probes, config.phase.h, config.recovery.mode, config.solver,
                                  config.recovery.conditioning_bound);
    const RecoveryReport report = recover_all(problem);

    Table rows{{"m", "j", "k", "re_z0", "im_z0", "h", "re_extracted", "im_extracted", "re_truth", "im_truth", "abs_err",
                "rel_err", "status"},
               {}};
    for (const auto& r : report.rows) {
        rows.rows.push_back({static_cast<long long>(r.m), static_cast<long long>(r.j), static_cast<long long>(r.k),
                             r.z0.real(), r.z0.imag(), r.h, r.extracted.real(), r.extracted.imag(), r.truth.real(),
                             r.truth.imag(), r.abs_err, r.rel_err, r.status});
    }

    Table slopes{{"m", "j", "k", "re_z0", "im_z0", "h_min", "re_extracted", "im_extracted", "error_estimate",
                  "re_truth", "im_truth", "abs_err", "rel_err", "err_slope", "status", "pass"},
                 {}};
    // A vanishing entry is judged against the largest true difference at the
    // same probe; the absolute tolerance applies when all of them vanish.
    std::map<std::pair<double, double>, double> probe_scale;
    for (const auto& s : report.summaries) {
        if (s.status != "ok") continue;
        double& scale = probe_scale[{s.z0.real(), s.z0.imag()}];
        scale = std::max(scale, std::abs(s.truth));
    }
    bool all_pass = true;
    for (const auto& s : report.summaries) {
        bool pass = s.status == "ok";
        if (pass) {
            const double scale = probe_scale[{s.z0.real(), s.z0.imag()}];
            if (std::abs(s.truth) > 0.0) {
                pass = s.rel_err <= config.recovery.max_rel_error;
            } else if (scale > 0.0) {
                pass = s.abs_err <= config.recovery.max_rel_error * scale;
            } else {
                pass = s.abs_err <= config.recovery.zero_abs_tolerance;
            }
        } else {
            out.log("probe error: " + s.detail);
        }
        all_pass = all_pass && pass;
        slopes.rows.push_back({static_cast<long long>(report.m), static_cast<long long>(s.j),
                               static_cast<long long>(s.k), s.z0.real(), s.z0.imag(), s.extraction.h,
                               s.extraction.value.real(), s.extraction.value.imag(), s.extraction.error_estimate,
                               s.truth.real(), s.truth.imag(), s.abs_err, s.rel_err, s.slope, s.status,
                               static_cast<long long>(pass)});
    }
    out.table("results", std::move(rows));
    out.table("slopes", std::move(slopes));
    const int code = all_pass ? kExitOk : kExitTolerance;
    out.write(code == kExitOk ? "ok" : "tolerance_failure");
    return code;
}

int run_command(const std::string& command, const std::string& config_path, const RunOptions& options,
                std::ostream& out, std::ostream& err) {
    ExperimentConfig config;
    try {
        config = load_config(config_path);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    }
    try {
        int code = kExitConfig;
        if (command == "cauchy-test") {
            code = cmd_cauchy_test(config, options);
        } else if (command == "cgo") {
            code = cmd_cgo(config, options);
        } else if (command == "recover") {
            code = cmd_recover(config, options);
        } else {
            err << "unknown command '" << command << "'\n";
            return kExitConfig;
        }
        out << command << ": " << (code == kExitOk ? "ok" : "tolerance failure") << " (config_hash "
            << config_hash(config) << ")\n";
        return code;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const CouplingViolation& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const ExprError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NumericalFailure& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const GridError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
}

} // namespace polycgo
