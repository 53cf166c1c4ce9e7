#include "polycgo/config.hpp"

#include "polycgo/expr.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>

namespace polycgo {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& msg) { throw ConfigError(field + ": " + msg); }

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    const std::set<std::string> keys(allowed.begin(), allowed.end());
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!keys.count(it.key())) bad(where.empty() ? it.key() : where + "." + it.key(), "unknown key");
    }
}

const json* section(const json& root, const char* name) {
    auto it = root.find(name);
    if (it == root.end()) return nullptr;
    if (!it->is_object()) bad(name, "must be an object");
    return &*it;
}

double get_number(const json& v, const std::string& field) {
    if (!v.is_number()) bad(field, "expected a number");
    return v.get<double>();
}

long long get_integer(const json& v, const std::string& field) {
    if (!v.is_number_integer() && !v.is_number_unsigned()) bad(field, "expected an integer");
    return v.get<long long>();
}

std::string get_string(const json& v, const std::string& field) {
    if (!v.is_string()) bad(field, "expected a string");
    return v.get<std::string>();
}

bool get_bool(const json& v, const std::string& field) {
    if (!v.is_boolean()) bad(field, "expected true or false");
    return v.get<bool>();
}

// A complex value is a number or a [re, im] pair.
cplx get_complex(const json& v, const std::string& field) {
    if (v.is_number()) return v.get<double>();
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
        return {v[0].get<double>(), v[1].get<double>()};
    }
    bad(field, "expected a number or a [re, im] pair");
}

std::vector<double> get_numbers(const json& v, const std::string& field) {
    if (!v.is_array()) bad(field, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(get_number(v[i], field + "[" + std::to_string(i) + "]"));
    return out;
}

std::vector<cplx> get_complexes(const json& v, const std::string& field) {
    if (!v.is_array()) bad(field, "expected an array of points");
    std::vector<cplx> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(get_complex(v[i], field + "[" + std::to_string(i) + "]"));
    return out;
}

std::map<std::string, std::string> get_table(const json& v, const std::string& field) {
    if (!v.is_object()) bad(field, "expected an object mapping \"j,k\" to expressions");
    std::map<std::string, std::string> out;
    for (auto it = v.begin(); it != v.end(); ++it) {
        out[it.key()] = get_string(it.value(), field + "[\"" + it.key() + "\"]");
    }
    return out;
}

json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

json complexes_json(const std::vector<cplx>& zs) {
    json a = json::array();
    for (cplx z : zs) a.push_back(complex_json(z));
    return a;
}

const char* form_name(CoefficientForm f) { return f == CoefficientForm::prime ? "prime" : "standard"; }
const char* mode_name(RecoveryMode m) { return m == RecoveryMode::full_cgo ? "full_cgo" : "amplitude_only"; }

bool parse_index(const std::string& key, int m, int& j, int& k) {
    int a = -1, b = -1;
    char tail = 0;
    if (std::sscanf(key.c_str(), " %d , %d %c", &a, &b, &tail) != 2) return false;
    if (a < 0 || b < 0 || a >= m || b >= m) return false;
    j = a;
    k = b;
    return true;
}

void line_column(const std::string& text, std::size_t byte, std::size_t& line, std::size_t& col) {
    line = 1;
    col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
}

} // namespace

ExperimentConfig from_json(const json& root) {
    if (!root.is_object()) throw ConfigError("configuration must be a JSON object");
    reject_unknown(root, "", {"grid", "operator", "phase", "solver", "cauchy", "cgo", "recovery", "output", "config_hash"});
    ExperimentConfig c;

    if (const json* s = section(root, "grid")) {
        reject_unknown(*s, "grid", {"n", "half_width", "center"});
        if (s->contains("n")) {
            const long long n = get_integer(s->at("n"), "grid.n");
            if (n <= 0) bad("grid.n", "must be positive");
            c.grid.n = static_cast<std::size_t>(n);
        }
        if (s->contains("half_width")) c.grid.half_width = get_number(s->at("half_width"), "grid.half_width");
        if (s->contains("center")) c.grid.center = get_complex(s->at("center"), "grid.center");
    }
    if (const json* s = section(root, "operator")) {
        reject_unknown(*s, "operator", {"m", "form", "A", "A_tilde"});
        if (s->contains("m")) c.op.m = static_cast<int>(get_integer(s->at("m"), "operator.m"));
        if (s->contains("form")) {
            const std::string f = get_string(s->at("form"), "operator.form");
            if (f == "prime") {
                c.op.form = CoefficientForm::prime;
            } else if (f == "standard") {
                c.op.form = CoefficientForm::standard;
            } else {
                bad("operator.form", "expected \"standard\" or \"prime\", got \"" + f + "\"");
            }
        }
        if (s->contains("A")) c.op.A = get_table(s->at("A"), "operator.A");
        if (s->contains("A_tilde")) c.op.A_tilde = get_table(s->at("A_tilde"), "operator.A_tilde");
    }
    if (const json* s = section(root, "phase")) {
        reject_unknown(*s, "phase", {"z0", "h"});
        if (s->contains("z0")) c.phase.z0 = get_complexes(s->at("z0"), "phase.z0");
        if (s->contains("h")) c.phase.h = get_numbers(s->at("h"), "phase.h");
    }
    if (const json* s = section(root, "solver")) {
        reject_unknown(*s, "solver", {"tol", "max_terms"});
        if (s->contains("tol")) c.solver.tol = get_number(s->at("tol"), "solver.tol");
        if (s->contains("max_terms")) c.solver.max_terms = static_cast<int>(get_integer(s->at("max_terms"), "solver.max_terms"));
    }
    if (const json* s = section(root, "cauchy")) {
        reject_unknown(*s, "cauchy", {"omega", "q", "min_slope", "p", "inverse_tolerance"});
        if (s->contains("omega")) c.cauchy.omega = get_string(s->at("omega"), "cauchy.omega");
        if (s->contains("q")) c.cauchy.q = get_numbers(s->at("q"), "cauchy.q");
        if (s->contains("min_slope")) {
            const json& v = s->at("min_slope");
            if (!v.is_array()) bad("cauchy.min_slope", "expected an array of numbers or nulls");
            c.cauchy.min_slope.clear();
            for (std::size_t i = 0; i < v.size(); ++i) {
                c.cauchy.min_slope.push_back(v[i].is_null() ? std::numeric_limits<double>::quiet_NaN()
                                                            : get_number(v[i], "cauchy.min_slope[" + std::to_string(i) + "]"));
            }
        }
        if (s->contains("p")) c.cauchy.p = get_numbers(s->at("p"), "cauchy.p");
        if (s->contains("inverse_tolerance")) {
            c.cauchy.inverse_tolerance = get_number(s->at("inverse_tolerance"), "cauchy.inverse_tolerance");
        }
    }
    if (const json* s = section(root, "cgo")) {
        reject_unknown(*s, "cgo",
                       {"amplitude_degree", "adjoint", "power_iterations", "min_w_slope", "min_g_slope", "min_r_slope",
                        "min_norm_slope"});
        if (s->contains("amplitude_degree")) {
            c.cgo.amplitude_degree = static_cast<int>(get_integer(s->at("amplitude_degree"), "cgo.amplitude_degree"));
        }
        if (s->contains("adjoint")) c.cgo.adjoint = get_bool(s->at("adjoint"), "cgo.adjoint");
        if (s->contains("power_iterations")) {
            c.cgo.power_iterations = static_cast<int>(get_integer(s->at("power_iterations"), "cgo.power_iterations"));
        }
        if (s->contains("min_w_slope")) c.cgo.min_w_slope = get_number(s->at("min_w_slope"), "cgo.min_w_slope");
        if (s->contains("min_g_slope")) c.cgo.min_g_slope = get_number(s->at("min_g_slope"), "cgo.min_g_slope");
        if (s->contains("min_r_slope")) c.cgo.min_r_slope = get_number(s->at("min_r_slope"), "cgo.min_r_slope");
        if (s->contains("min_norm_slope")) c.cgo.min_norm_slope = get_number(s->at("min_norm_slope"), "cgo.min_norm_slope");
    }
    if (const json* s = section(root, "recovery")) {
        reject_unknown(*s, "recovery", {"mode", "probes", "max_rel_error", "zero_abs_tolerance", "conditioning_bound"});
        if (s->contains("mode")) {
            const std::string m = get_string(s->at("mode"), "recovery.mode");
            if (m == "amplitude_only") {
                c.recovery.mode = RecoveryMode::amplitude_only;
            } else if (m == "full_cgo") {
                c.recovery.mode = RecoveryMode::full_cgo;
            } else {
                bad("recovery.mode", "expected \"amplitude_only\" or \"full_cgo\", got \"" + m + "\"");
            }
        }
        if (s->contains("probes")) c.recovery.probes = get_complexes(s->at("probes"), "recovery.probes");
        if (s->contains("max_rel_error")) c.recovery.max_rel_error = get_number(s->at("max_rel_error"), "recovery.max_rel_error");
        if (s->contains("zero_abs_tolerance")) {
            c.recovery.zero_abs_tolerance = get_number(s->at("zero_abs_tolerance"), "recovery.zero_abs_tolerance");
        }
        if (s->contains("conditioning_bound")) {
            c.recovery.conditioning_bound = get_number(s->at("conditioning_bound"), "recovery.conditioning_bound");
        }
    }
    if (const json* s = section(root, "output")) {
        reject_unknown(*s, "output", {"directory", "format"});
        if (s->contains("directory")) c.output.directory = get_string(s->at("directory"), "output.directory");
        if (s->contains("format")) c.output.format = get_string(s->at("format"), "output.format");
    }
    return c;
}

json to_json(const ExperimentConfig& c) {
    json j;
    j["grid"] = {{"n", c.grid.n}, {"half_width", c.grid.half_width}, {"center", complex_json(c.grid.center)}};
    j["operator"] = {{"m", c.op.m}, {"form", form_name(c.op.form)}, {"A", c.op.A}, {"A_tilde", c.op.A_tilde}};
    j["phase"] = {{"z0", complexes_json(c.phase.z0)}, {"h", c.phase.h}};
    j["solver"] = {{"tol", c.solver.tol}, {"max_terms", c.solver.max_terms}};
    j["cauchy"] = {{"omega", c.cauchy.omega},
                   {"q", c.cauchy.q},
                   {"min_slope", c.cauchy.min_slope},
                   {"p", c.cauchy.p},
                   {"inverse_tolerance", c.cauchy.inverse_tolerance}};
    j["cgo"] = {{"amplitude_degree", c.cgo.amplitude_degree}, {"adjoint", c.cgo.adjoint},
                {"power_iterations", c.cgo.power_iterations}, {"min_w_slope", c.cgo.min_w_slope},
                {"min_g_slope", c.cgo.min_g_slope},           {"min_r_slope", c.cgo.min_r_slope},
                {"min_norm_slope", c.cgo.min_norm_slope}};
    j["recovery"] = {{"mode", mode_name(c.recovery.mode)},
                     {"probes", complexes_json(c.recovery.probes)},
                     {"max_rel_error", c.recovery.max_rel_error},
                     {"zero_abs_tolerance", c.recovery.zero_abs_tolerance},
                     {"conditioning_bound", c.recovery.conditioning_bound}};
    j["output"] = {{"directory", c.output.directory}, {"format", c.output.format}};
    return j;
}

ExperimentConfig parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 0, col = 0;
        line_column(text, e.byte == 0 ? 0 : e.byte - 1, line, col);
        std::ostringstream os;
        os << "JSON syntax error at line " << line << ", column " << col << ": " << e.what();
        throw ConfigError(os.str());
    }
    ExperimentConfig c = from_json(root);
    validate(c);
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void validate(const ExperimentConfig& c) {
    std::optional<ComplexGrid> grid;
    try {
        grid.emplace(c.grid.center, c.grid.half_width, c.grid.n);
    } catch (const GridError& e) {
        bad("grid", e.what());
    }
    if (c.op.m < 2) bad("operator.m", "order m must be >= 2, got " + std::to_string(c.op.m));
    for (const auto* table : {&c.op.A, &c.op.A_tilde}) {
        const std::string name = (table == &c.op.A) ? "operator.A" : "operator.A_tilde";
        for (const auto& [key, text] : *table) {
            const std::string field = name + "[\"" + key + "\"]";
            int j = 0, k = 0;
            if (!parse_index(key, c.op.m, j, k)) {
                bad(field, "key must be \"j,k\" with 0 <= j, k < m = " + std::to_string(c.op.m));
            }
            try {
                (void)Expression::parse(text);
            } catch (const ExprError& e) {
                bad(field, e.what());
            }
        }
    }
    try {
        (void)Expression::parse(c.cauchy.omega);
    } catch (const ExprError& e) {
        bad("cauchy.omega", e.what());
    }

    if (c.phase.h.empty()) bad("phase.h", "must list at least one h");
    const double spacing = grid->spacing();
    for (std::size_t i = 0; i < c.phase.h.size(); ++i) {
        const double h = c.phase.h[i];
        const std::string field = "phase.h[" + std::to_string(i) + "]";
        if (!(h > 0.0)) bad(field, "h must be positive");
        if (i > 0 && !(h < c.phase.h[i - 1])) bad(field, "h values must be strictly decreasing");
        if (spacing > h / kCellsPerH) {
            std::size_t need = c.grid.n;
            while (2.0 * c.grid.half_width / static_cast<double>(need - 1) > h / kCellsPerH) need *= 2;
            std::ostringstream os;
            os << "grid/h coupling violated for the pair (grid.n = " << c.grid.n << ", h = " << h << "): spacing "
               << spacing << " exceeds h/" << kCellsPerH << " = " << h / kCellsPerH << "; use grid.n >= " << need
               << " or a larger h";
            bad(field, os.str());
        }
    }
    if (c.phase.z0.empty()) bad("phase.z0", "must list at least one point");
    for (std::size_t i = 0; i < c.phase.z0.size(); ++i) {
        if (!grid->contains(c.phase.z0[i])) bad("phase.z0[" + std::to_string(i) + "]", "point lies outside the grid square");
    }
    if (!(c.solver.tol > 0.0)) bad("solver.tol", "must be positive");
    if (c.solver.max_terms < 1) bad("solver.max_terms", "must be >= 1");
    if (c.cauchy.q.size() != c.cauchy.min_slope.size()) bad("cauchy.min_slope", "needs one entry per cauchy.q");
    for (std::size_t i = 0; i < c.cauchy.q.size(); ++i) {
        if (!(c.cauchy.q[i] >= 1.0)) bad("cauchy.q[" + std::to_string(i) + "]", "q must be >= 1");
    }
    for (std::size_t i = 0; i < c.cauchy.p.size(); ++i) {
        if (!(c.cauchy.p[i] >= 1.0)) bad("cauchy.p[" + std::to_string(i) + "]", "p must be >= 1");
    }
    if (c.cgo.amplitude_degree < 0 || c.cgo.amplitude_degree >= c.op.m) {
        bad("cgo.amplitude_degree", "must lie in [0, m - 1]");
    }
    if (c.cgo.power_iterations < 1) bad("cgo.power_iterations", "must be >= 1");
    if (!(c.recovery.max_rel_error > 0.0)) bad("recovery.max_rel_error", "must be positive");
    if (!(c.recovery.zero_abs_tolerance >= 0.0)) bad("recovery.zero_abs_tolerance", "must be >= 0");
    if (!(c.recovery.conditioning_bound >= 1.0)) bad("recovery.conditioning_bound", "must be >= 1");
    if (c.output.format != "csv" && c.output.format != "json") {
        bad("output.format", "expected \"csv\" or \"json\", got \"" + c.output.format + "\"");
    }
}

std::string config_hash(const ExperimentConfig& config) {
    const std::string canonical = to_json(config).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : canonical) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ComplexGrid make_grid(const ExperimentConfig& config) {
    return {config.grid.center, config.grid.half_width, config.grid.n};
}

PerturbedOperator make_operator(const ExperimentConfig& config, const ComplexGrid& grid, bool tilde) {
    const int m = config.op.m;
    const auto& table = tilde ? config.op.A_tilde : config.op.A;
    std::vector<ScalarField> coeffs(static_cast<std::size_t>(m * m), ScalarField::zeros(grid));
    for (const auto& [key, text] : table) {
        int j = 0, k = 0;
        if (!parse_index(key, m, j, k)) throw ConfigError("bad coefficient key \"" + key + "\"");
        const Expression e = Expression::parse(text);
        try {
            coeffs[static_cast<std::size_t>(j * m + k)] = e.sample(grid);
        } catch (const GridError& err) {
            throw ConfigError(std::string(tilde ? "operator.A_tilde" : "operator.A") + "[\"" + key +
                              "\"]: expression is not finite on the grid (" + err.what() + ")");
        }
    }
    return {m, std::move(coeffs), config.op.form};
}

} // namespace polycgo
