#include "polycgo/commands.hpp"
#include "polycgo/config.hpp"
#include "polycgo/expr.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace polycgo;
namespace fs = std::filesystem;

namespace {

std::string config_error_message(const std::string& text) {
    try {
        (void)parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("polycgo_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_file(const fs::path& dir, const std::string& name, const std::string& text) {
    const fs::path p = dir / name;
    std::ofstream(p) << text;
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

int run(const std::string& command, const fs::path& config, const fs::path& out_dir, std::string* err_text = nullptr) {
    RunOptions opts;
    opts.out_dir = out_dir.string();
    std::ostringstream out, err;
    const int code = run_command(command, config.string(), opts, out, err);
    if (err_text) *err_text = err.str();
    return code;
}

const char* kSmallRecover = R"json({
  "grid": {"n": 256},
  "operator": {"m": 2, "form": "prime",
               "A_tilde": {"0,0": "bump(0, 0, 0.85, 1)", "1,1": "bump(0.03, 0.04, 0.84, 0.7 - 0.2i)"}},
  "phase": {"h": [0.2, 0.14, 0.1]},
  "recovery": {"mode": "amplitude_only", "probes": [[0.1, 0.05]], "max_rel_error": 0.15}
})json";

} // namespace

TEST_CASE("expression grammar") {
    const cplx z(0.3, -0.2);
    CHECK(std::abs(Expression::parse("z^2 + 3*zbar - 2i").evaluate(z) - (z * z + 3.0 * std::conj(z) - cplx(0, 2))) < 1e-15);
    CHECK(std::abs(Expression::parse("exp(-(re(z)^2 + im(z)^2)) * conj(z)").evaluate(z) -
                   std::exp(-std::norm(z)) * std::conj(z)) < 1e-15);
    CHECK(std::abs(Expression::parse("abs(z) / pi").evaluate(z) - std::abs(z) / std::numbers::pi) < 1e-15);
    CHECK(Expression::parse("bump(0.1, 0, 0.5, 2)").evaluate({0.1, 0.0}) == cplx(2.0));
    CHECK(Expression::parse("bump(0.1, 0, 0.5, 2)").evaluate({0.7, 0.0}) == cplx{});
    CHECK(std::abs(Expression::parse("gauss(0, 0, 0.5, 1 + i)").evaluate({0.5, 0.0}) - cplx(1, 1) * std::exp(-1.0)) < 1e-15);
    CHECK(std::abs(Expression::parse("z^-1").evaluate(z) - 1.0 / z) < 1e-15);
    CHECK(Expression::parse("2 * (3 - 3)").is_zero_constant());
    CHECK(Expression::parse("bump(0, 0, 0.5, 0)").is_zero_constant());
    CHECK_FALSE(Expression::parse("0 * z + 1").is_zero_constant());

    CHECK_THROWS_AS(Expression::parse("bump("), ExprError);
    CHECK_THROWS_AS(Expression::parse("z +"), ExprError);
    CHECK_THROWS_AS(Expression::parse("foo(z)"), ExprError);
    CHECK_THROWS_AS(Expression::parse("z^zbar"), ExprError);
    CHECK_THROWS_AS(Expression::parse("z^1.5"), ExprError);
    CHECK_THROWS_AS(Expression::parse("bump(z, 0, 1, 1)"), ExprError);
    CHECK_THROWS_AS(Expression::parse("bump(0, 0, -1, 1)"), ExprError);
    CHECK_THROWS_AS(Expression::parse("exp(z, z)"), ExprError);
    CHECK_THROWS_AS(Expression::parse("(z"), ExprError);
    try {
        (void)Expression::parse("z + ) ");
        FAIL("expected a parse error");
    } catch (const ExprError& e) {
        CHECK(e.position() == 4);
    }
}

TEST_CASE("config defaults and validation messages") {
    const ExperimentConfig c = parse_config("{}");
    CHECK(c.grid.n == 512);
    CHECK(c.op.m == 2);
    CHECK(c.phase.h.size() == 5);

    CHECK(config_error_message(R"({"operator": {"A": {"0,0": "bump("}}})").find("operator.A[\"0,0\"]") != std::string::npos);
    CHECK(config_error_message(R"({"operator": {"A_tilde": {"2,0": "z"}}})").find("operator.A_tilde[\"2,0\"]") !=
          std::string::npos);
    CHECK(config_error_message(R"({"grid": {"n": 100}})").find("grid") != std::string::npos);
    const std::string coupling = config_error_message(R"({"grid": {"n": 64}, "phase": {"h": [0.2, 0.1]}})");
    CHECK(coupling.find("phase.h[0]") != std::string::npos);
    CHECK(coupling.find("grid.n = 64") != std::string::npos);
    CHECK(coupling.find("h = 0.2") != std::string::npos);
    CHECK(coupling.find("grid.n >= 128") != std::string::npos);
    CHECK(config_error_message(R"({"phase": {"h": [0.1, 0.2]}})").find("strictly decreasing") != std::string::npos);
    CHECK(config_error_message(R"({"phase": {"z0": [[2, 0]]}})").find("phase.z0[0]") != std::string::npos);
    CHECK(config_error_message(R"({"grid": {"nn": 64}})").find("nn") != std::string::npos);
    CHECK(config_error_message(R"({"operator": {"m": 1}})").find("operator.m") != std::string::npos);
    CHECK(config_error_message(R"({"cgo": {"amplitude_degree": 2}})").find("cgo.amplitude_degree") != std::string::npos);
    CHECK(config_error_message(R"({"output": {"format": "xml"}})").find("output.format") != std::string::npos);
    CHECK(config_error_message(R"({"recovery": {"mode": "fast"}})").find("recovery.mode") != std::string::npos);
    CHECK(config_error_message("{\n  \"grid\": {\n    \"n\": ,\n  }\n}").find("line 3") != std::string::npos);
}

TEST_CASE("config round trip and hash") {
    const ExperimentConfig c = parse_config(kSmallRecover);
    const std::string h = config_hash(c);
    CHECK(h.size() == 16);
    CHECK(h.find_first_not_of("0123456789abcdef") == std::string::npos);
    const ExperimentConfig back = from_json(to_json(c));
    CHECK(config_hash(back) == h);

    nlohmann::json with_hash = to_json(c);
    with_hash["config_hash"] = h;
    CHECK(config_hash(parse_config(with_hash.dump())) == h);

    const ExperimentConfig report_only = parse_config(R"({"cauchy": {"q": [1.5, 2], "min_slope": [null, 0.5]}})");
    CHECK(std::isnan(report_only.cauchy.min_slope[0]));
    CHECK(config_hash(from_json(to_json(report_only))) == config_hash(report_only));
    CHECK(config_error_message(R"({"cauchy": {"min_slope": ["x", 0.5]}})").find("cauchy.min_slope[0]") != std::string::npos);

    ExperimentConfig changed = c;
    changed.phase.h.back() = 0.09;
    CHECK(config_hash(changed) != h);

    const ComplexGrid g = make_grid(c);
    CHECK(g.n() == 256);
    const auto L = make_operator(c, g, false);
    const auto Lt = make_operator(c, g, true);
    CHECK(L.is_unperturbed());
    CHECK(Lt.form() == CoefficientForm::prime);
    CHECK(Lt.coeff(0, 0)(128, 128) == cplx(std::exp(1.0 - 1.0 / (1.0 - std::norm(g.node(128, 128)) / (0.85 * 0.85)))));
    CHECK(Lt.coeff(0, 1).is_zero());
}

TEST_CASE("run_command exit codes") {
    const fs::path dir = scratch_dir("codes");
    std::string err;
    CHECK(run("recover", dir / "missing.json", dir / "o0", &err) == kExitConfig);
    CHECK(err.find("config error") != std::string::npos);

    const fs::path bad_expr = write_file(dir, "bad.json", R"({"operator": {"A": {"0,0": "bump("}}})");
    CHECK(run("cgo", bad_expr, dir / "o1", &err) == kExitConfig);
    CHECK(err.find("operator.A[\"0,0\"]") != std::string::npos);

    const fs::path small = write_file(dir, "small.json", kSmallRecover);
    CHECK(run("frobnicate", small, dir / "o2") == kExitConfig);

    SUBCASE("recovery within tolerance") { CHECK(run("recover", small, dir / "ok") == kExitOk); }
    SUBCASE("degenerate probe fails the run") {
        nlohmann::json j = nlohmann::json::parse(kSmallRecover);
        j["recovery"]["probes"] = {{0.1, 0.05}, {0.97, 0.0}};
        const fs::path p = write_file(dir, "degenerate.json", j.dump());
        CHECK(run("recover", p, dir / "deg") == kExitTolerance);
        const std::string rows = slurp(dir / "deg" / "results.csv");
        CHECK(rows.find("degenerate_probe") != std::string::npos);
    }
    SUBCASE("non-vanishing difference on the frame is a config error") {
        nlohmann::json j = nlohmann::json::parse(kSmallRecover);
        j["operator"]["A_tilde"]["0,0"] = "1";
        const fs::path p = write_file(dir, "frame.json", j.dump());
        CHECK(run("recover", p, dir / "frame", &err) == kExitConfig);
        CHECK(err.find("frame") != std::string::npos);
    }
    SUBCASE("Neumann failure is a numerical failure") {
        nlohmann::json j = nlohmann::json::parse(kSmallRecover);
        j["recovery"]["mode"] = "full_cgo";
        j["solver"] = {{"tol", 1e-14}, {"max_terms", 1}};
        const fs::path p = write_file(dir, "neumann.json", j.dump());
        CHECK(run("recover", p, dir / "neumann", &err) == kExitNumerical);
        CHECK(err.find("numerical failure") != std::string::npos);
    }
}

TEST_CASE("outputs are deterministic and carry the config hash") {
    const fs::path dir = scratch_dir("determinism");
    nlohmann::json j = nlohmann::json::parse(kSmallRecover);
    j["phase"]["z0"] = {{0.05, 0.02}};
    j["operator"]["A"] = {{"0,0", "bump(0, 0, 0.85, 0.5)"}};
    const fs::path config = write_file(dir, "c.json", j.dump());
    for (const std::string command : {"cauchy-test", "cgo", "recover"}) {
        CAPTURE(command);
        const int a = run(command, config, dir / (command + "_a"));
        const int b = run(command, config, dir / (command + "_b"));
        CHECK(a == b);
        CHECK(a != kExitConfig);
        CHECK(a != kExitNumerical);
        for (const std::string name : {"results.csv", "slopes.csv"}) {
            const std::string first = slurp(dir / (command + "_a") / name);
            CHECK(!first.empty());
            CHECK(first == slurp(dir / (command + "_b") / name));
            CHECK(first.rfind("# config_hash=" + config_hash(parse_config(j.dump())), 0) == 0);
        }
        const auto echo = nlohmann::json::parse(slurp(dir / (command + "_a") / "config.json"));
        CHECK(echo.at("config_hash") == config_hash(parse_config(j.dump())));
        CHECK(slurp(dir / (command + "_a") / "log.txt").find("wall_time_s=") != std::string::npos);
    }

    j["output"] = {{"format", "json"}};
    const fs::path as_json = write_file(dir, "j.json", j.dump());
    CHECK(run("recover", as_json, dir / "json") == kExitOk);
    const auto parsed = nlohmann::json::parse(slurp(dir / "json" / "results.json"));
    CHECK(parsed.contains("config_hash"));
}

TEST_CASE("table writers") {
    Table t{{"a", "b", "c"}, {{1.5, 2LL, std::string("x")}, {std::nan(""), -1LL, std::string("y")}}};
    std::ostringstream csv;
    write_csv(csv, t, "0123456789abcdef");
    CHECK(csv.str() == "# config_hash=0123456789abcdef\na,b,c\n1.5,2,x\nnan,-1,y\n");
    std::ostringstream js;
    write_json(js, t, "0123456789abcdef");
    const auto parsed = nlohmann::json::parse(js.str());
    CHECK(parsed.at("config_hash") == "0123456789abcdef");
}
