#include "oracles.hpp"
#include "testbeds.hpp"

#include "polycgo/recovery.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

using namespace polycgo;

namespace {

const std::vector<double> kSweep{0.2, 0.14, 0.1, 0.07, 0.05};

PerturbedOperator single_coefficient(const ComplexGrid& g, int j, int k, cplx center, double R, cplx amp) {
    std::vector<ScalarField> c(4, ScalarField::zeros(g));
    c[static_cast<std::size_t>(j * 2 + k)] = testbed::bump(g, center, R, amp);
    return {2, std::move(c), CoefficientForm::prime};
}

const RecoverySummary& summary_for(const RecoveryReport& r, int j, int k, cplx z0) {
    for (const auto& s : r.summaries) {
        if (s.j == j && s.k == k && s.z0 == z0) return s;
    }
    throw std::logic_error("missing summary");
}

} // namespace

TEST_CASE("oscillatory mean against the Fresnel product") {
    const double a = 0.4;
    const double b = 0.8;
    const auto chi_of = [=](cplx z) { return cplx(oracle::plateau(z.real(), a, b) * oracle::plateau(z.imag(), a, b)); };
    // Phi - conj Phi = 2 i (x^2 - y^2) for z0 = 0, so the integral factors.
    const auto oracle_mean = [=](double h) {
        return oracle::fresnel_plateau(2.0 / h, a, b, 4000) * oracle::fresnel_plateau(-2.0 / h, a, b, 4000) / h;
    };
    const ComplexGrid g({}, 1.0, 512);
    const auto chi = ScalarField::sample(g, chi_of);
    for (double h : {0.2, 0.1, 0.05}) {
        const cplx grid_value = oscillatory_mean(chi, PhaseSpec{{}, h, 1});
        CHECK(std::abs(grid_value - oracle_mean(h)) <= 1e-8 * std::abs(oracle_mean(h)));
    }
    // The oracle itself approaches C = pi / 2.
    const double C = std::numbers::pi / 2.0;
    CHECK(std::abs(oracle_mean(0.02) - C) / C <= 0.05);
    CHECK(std::abs(oracle_mean(0.01) - C) < std::abs(oracle_mean(0.04) - C));
    CHECK(kStationaryPhaseConstant == C);
    CHECK_THROWS_AS(oscillatory_mean(chi, PhaseSpec{{}, 0.01, 1}), CouplingViolation);
}

TEST_CASE("stationary-phase extraction") {
    const cplx B(0.4, -0.3);
    const cplx kappa(2.0, 1.0);
    const double C = kStationaryPhaseConstant;
    std::vector<IdentitySample> samples;
    for (double h : {0.2, 0.1, 0.05}) samples.push_back({h, C * h * (B + kappa * h)});
    const Extraction e = stationary_phase_extract(samples);
    CHECK(e.h == 0.05);
    CHECK(std::abs(e.value - (B + kappa * 0.05)) < 1e-14);
    CHECK(e.error_estimate == doctest::Approx(std::abs(kappa) * 0.05));

    CHECK_THROWS_AS(stationary_phase_extract(std::span<const IdentitySample>(samples.data(), 1)), std::invalid_argument);
    const std::vector<IdentitySample> same{{0.1, 1.0}, {0.1, 2.0}};
    CHECK_THROWS_AS(stationary_phase_extract(same), std::invalid_argument);
    const std::vector<IdentitySample> negative{{-0.1, 1.0}, {0.1, 2.0}};
    CHECK_THROWS_AS(stationary_phase_extract(negative), std::invalid_argument);
}

TEST_CASE("recovery order is triangular") {
    for (int m : {2, 3, 4}) {
        const auto order = recovery_order(m);
        CHECK(order.size() == static_cast<std::size_t>(m * m));
        std::set<std::pair<int, int>> seen;
        for (const auto& [j0, k0] : order) {
            for (int j = 0; j <= j0; ++j) {
                for (int k = 0; k <= k0; ++k) {
                    if (j != j0 || k != k0) CHECK(seen.count({j, k}) == 1);
                }
            }
            seen.insert({j0, k0});
        }
    }
    const auto two = recovery_order(2);
    CHECK(two == std::vector<std::pair<int, int>>{{0, 0}, {0, 1}, {1, 0}, {1, 1}});
}

TEST_CASE("identical operators give exactly zero identity values") {
    const ComplexGrid g({}, 1.0, 256);
    const auto L = testbed::four_bumps(g);
    const cplx z0(0.1, 0.05);
    const std::vector<double> hs{0.2, 0.1};
    for (auto mode : {RecoveryMode::amplitude_only, RecoveryMode::full_cgo}) {
        const RecoveryProblem p(L, L, {z0}, hs, mode);
        CHECK(p.all_differences_zero());
        const auto report = recover_all(p);
        for (const auto& row : report.rows) {
            CHECK(row.extracted == cplx{});
            CHECK(row.status == "ok");
        }
        const double floor = quadrature_noise_floor(p, 1, 1, 0.1, z0);
        CHECK(floor > 0.0);
        CHECK(floor < 1e-12);
    }
}

TEST_CASE("single coefficient recovered at the half-maximum point") {
    const ComplexGrid g({}, 1.0, 512);
    const double R = 0.9;
    const auto L = PerturbedOperator::unperturbed(2, g, CoefficientForm::prime);
    const auto Lt = single_coefficient(g, 0, 0, {}, R, 1.0);
    // exp(1 - 1/(1 - t)) = 1/2 at t = ln 2 / (1 + ln 2).
    const double r = R * std::sqrt(std::log(2.0) / (1.0 + std::log(2.0)));
    const cplx z0(r, 0.0);
    CHECK(oracle::bump(r * r, R) == doctest::Approx(0.5));
    const RecoveryProblem p(L, Lt, {z0}, kSweep, RecoveryMode::amplitude_only);
    const auto report = recover_all(p);
    CHECK(report.rows.size() == 4 * kSweep.size());
    const auto& s = summary_for(report, 0, 0, z0);
    CHECK(std::abs(s.truth - 0.5) < 1e-6);
    CHECK(s.rel_err <= 0.10);
    CHECK(s.slope >= 0.7);
    CHECK(s.slope <= 1.3);
    // Coefficients that are zero come back small.
    for (auto [j, k] : {std::pair{0, 1}, std::pair{1, 0}, std::pair{1, 1}}) CHECK(summary_for(report, j, k, z0).abs_err < 0.05);
}

TEST_CASE("a difference confined to the top entry leaves the lower entries near zero") {
    const ComplexGrid g({}, 1.0, 512);
    const auto L = PerturbedOperator::unperturbed(2, g, CoefficientForm::prime);
    const auto Lt = single_coefficient(g, 1, 1, {0.02, -0.03}, 0.85, {0.6, -0.4});
    const cplx z0(-0.1, 0.15);
    const RecoveryProblem p(L, Lt, {z0}, kSweep, RecoveryMode::amplitude_only);
    const auto report = recover_all(p);
    const auto& top = summary_for(report, 1, 1, z0);
    CHECK(top.rel_err <= 0.05);
    for (auto [j, k] : {std::pair{0, 0}, std::pair{0, 1}, std::pair{1, 0}}) {
        CHECK(summary_for(report, j, k, z0).abs_err <= 0.05 * std::abs(top.truth));
    }
}

TEST_CASE("recovery is deterministic") {
    const ComplexGrid g({}, 1.0, 256);
    const auto L = PerturbedOperator::unperturbed(2, g, CoefficientForm::prime);
    const auto Lt = testbed::four_bumps(g);
    const std::vector<double> hs{0.2, 0.14, 0.1};
    const RecoveryProblem p(L, Lt, {cplx(0.1, 0.05)}, hs, RecoveryMode::full_cgo);
    const auto a = recover_all(p);
    const auto b = recover_all(p);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) CHECK(a.rows[i].extracted == b.rows[i].extracted);
}

TEST_CASE("degenerate probes are reported, not extracted") {
    const ComplexGrid g({}, 1.0, 256);
    const auto L = PerturbedOperator::unperturbed(2, g, CoefficientForm::prime);
    const auto Lt = testbed::four_bumps(g);
    const std::vector<double> hs{0.2, 0.1};
    const cplx good(0.1, 0.05);
    const cplx edge(0.95, 0.0);
    const RecoveryProblem p(L, Lt, {good, edge}, hs, RecoveryMode::amplitude_only);
    CHECK_THROWS_AS(p.check_probe(edge), DegenerateProbe);
    CHECK_THROWS_AS(identity_lhs(p, 0, 0, 0.1, edge), DegenerateProbe);
    const auto report = recover_all(p);
    for (const auto& row : report.rows) {
        if (row.z0 == edge) {
            CHECK(row.status == "degenerate_probe");
            CHECK(std::isnan(row.extracted.real()));
        } else {
            CHECK(row.status == "ok");
        }
    }
    for (const auto& s : report.summaries) {
        if (s.z0 == edge) CHECK(s.detail.find("frame") != std::string::npos);
    }

    const RecoveryProblem strict(L, Lt, {good}, hs, RecoveryMode::amplitude_only, {}, 1.0);
    CHECK(strict.conditioning(good) == doctest::Approx(std::pow(1.0 + std::abs(good), 2)));
    CHECK_THROWS_AS(strict.check_probe(good), DegenerateProbe);
}

TEST_CASE("recovery problem validation") {
    const ComplexGrid g({}, 1.0, 256);
    const auto L = PerturbedOperator::unperturbed(2, g, CoefficientForm::prime);
    const auto Lt = testbed::four_bumps(g);
    const std::vector<cplx> probes{{0.1, 0.05}};
    CHECK_THROWS_AS(RecoveryProblem(L, Lt, probes, {}, RecoveryMode::amplitude_only), std::invalid_argument);
    CHECK_THROWS_AS(RecoveryProblem(L, Lt, probes, {0.1, 0.2}, RecoveryMode::amplitude_only), std::invalid_argument);
    CHECK_THROWS_AS(RecoveryProblem(L, Lt, probes, {0.2, -0.1}, RecoveryMode::amplitude_only), std::invalid_argument);
    CHECK_THROWS_AS(RecoveryProblem(L, Lt, probes, {0.2, 0.01}, RecoveryMode::amplitude_only), CouplingViolation);
    CHECK_THROWS_AS(RecoveryProblem(PerturbedOperator::unperturbed(3, g), Lt, probes, {0.2}, RecoveryMode::amplitude_only),
                    std::invalid_argument);
    const auto wide = single_coefficient(g, 0, 0, {}, 1.2, 1.0);
    CHECK_THROWS_AS(RecoveryProblem(L, wide, probes, {0.2}, RecoveryMode::amplitude_only), std::invalid_argument);
}

TEST_CASE("empirical stationary-phase constant per (j, k)") {
    const ComplexGrid g({}, 1.0, 512);
    const auto L = PerturbedOperator::unperturbed(2, g, CoefficientForm::prime);
    const cplx z0(0.05, -0.04);
    const double h = 0.05;
    const double C = std::numbers::pi / 2.0;
    for (const auto& [j, k] : recovery_order(2)) {
        const auto Lt = single_coefficient(g, j, k, {0.02, 0.01}, 0.85, {0.8, 0.3});
        const RecoveryProblem p(L, Lt, {z0}, {h}, RecoveryMode::amplitude_only);
        // With a single nonzero entry the (j, k) identity is (-1)^j int B e^{(Phi - conj Phi)/h}.
        const cplx empirical = (j % 2 == 0 ? 1.0 : -1.0) * identity_lhs(p, j, k, h, z0) / (h * interpolate(p.difference(j, k), z0));
        MESSAGE("C(" << j << "," << k << ") = " << empirical.real() << " + " << empirical.imag() << "i");
        CHECK(std::abs(empirical - C) / C <= 0.05);
    }
}
