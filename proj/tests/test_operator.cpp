#include "oracles.hpp"
#include "testbeds.hpp"

#include "polycgo/operator.hpp"

#include <doctest.h>

#include <cmath>

using namespace polycgo;

namespace {

ScalarField sample_poly(const ComplexGrid& g, const oracle::WirtingerPoly& p) {
    return ScalarField::sample(g, [&](cplx z) { return p(z); });
}

oracle::WirtingerPoly d_pow(oracle::WirtingerPoly p, int q) {
    for (int i = 0; i < q; ++i) p = p.d();
    return p;
}

oracle::WirtingerPoly dbar_pow(oracle::WirtingerPoly p, int q) {
    for (int i = 0; i < q; ++i) p = p.dbar();
    return p;
}

cplx grid_inner(const ScalarField& a, const ScalarField& b) {
    cplx acc{};
    for (std::size_t k = 0; k < a.grid().size(); ++k) acc += a.at(k) * std::conj(b.at(k));
    return acc;
}

double max_diff(const ScalarField& a, const ScalarField& b) { return norm_lp(a - b, kInfinity); }

ScalarField gaussian(const ComplexGrid& g, cplx c, double s, cplx amp) {
    return ScalarField::sample(g, [=](cplx z) { return amp * std::exp(-std::norm(z - c) / (s * s)); });
}

} // namespace

TEST_CASE("apply matches the symbolic oracle on polynomials") {
    const ComplexGrid g({}, 1.0, 64);
    oracle::WirtingerPoly u;
    u.terms[{2, 2}] = cplx(1.0, 0.5);
    u.terms[{1, 2}] = -2.0;
    u.terms[{0, 3}] = cplx(0.0, 1.0);
    u.terms[{1, 0}] = 0.75;
    oracle::WirtingerPoly c00, c01, c11;
    c00.terms[{0, 0}] = cplx(0.3, -0.2);
    c01.terms[{1, 0}] = 1.5;
    c11.terms[{0, 1}] = cplx(0.0, -0.7);

    const auto field = sample_poly(g, u);
    // Four stacked stencils amplify rounding by about spacing^-4 ~ 1e6.
    const double tol = 1e-6;

    SUBCASE("standard form") {
        const PerturbedOperator op(2, {sample_poly(g, c00), sample_poly(g, c01), ScalarField::zeros(g), sample_poly(g, c11)},
                                   CoefficientForm::standard);
        const auto exact = d_pow(dbar_pow(u, 2), 2) + c00 * u + c01 * u.dbar() + c11 * u.d().dbar();
        CHECK(max_diff(apply(op, field), sample_poly(g, exact)) < tol);
    }
    SUBCASE("prime form") {
        const PerturbedOperator op(2, {sample_poly(g, c00), sample_poly(g, c01), ScalarField::zeros(g), sample_poly(g, c11)},
                                   CoefficientForm::prime);
        const auto exact = d_pow(dbar_pow(u, 2), 2) + c00 * u + c01 * u.dbar() + (c11 * u.dbar()).d();
        CHECK(max_diff(apply(op, field), sample_poly(g, exact)) < tol);
    }
    SUBCASE("unperturbed operator is d^m dbar^m") {
        const auto op = PerturbedOperator::unperturbed(2, g);
        CHECK(op.is_unperturbed());
        CHECK(max_diff(apply(op, field), sample_poly(g, d_pow(dbar_pow(u, 2), 2))) < tol);
    }
}

TEST_CASE("normal form conversions") {
    const ComplexGrid g({}, 1.0, 256);
    for (int m : {2, 3}) {
        const PerturbedOperator standard = testbed::standard(g, m);
        const PerturbedOperator prime = a_to_aprime(standard);
        CHECK(prime.form() == CoefficientForm::prime);

        SUBCASE("round trip is exact up to rounding") {
            const PerturbedOperator back = aprime_to_a(prime);
            for (int j = 0; j < m; ++j) {
                for (int k = 0; k < m; ++k) {
                    CHECK(max_diff(back.coeff(j, k), standard.coeff(j, k)) <= 1e-12 * (1.0 + norm_lp(standard.coeff(j, k), kInfinity)));
                }
            }
        }
        SUBCASE("top row is unchanged") {
            for (int k = 0; k < m; ++k) CHECK(max_diff(prime.coeff(m - 1, k), standard.coeff(m - 1, k)) == 0.0);
        }
        SUBCASE("both forms define the same operator") {
            const auto u = gaussian(g, {0.1, -0.1}, 0.3, {1.0, 0.4});
            const auto a = apply(standard, u);
            const auto b = apply(prime, u);
            const Region inner = Region::central(g, 0.9);
            CHECK(norm_lp(a - b, 2.0, inner) <= 1e-5 * norm_lp(a, 2.0, inner));
        }
        SUBCASE("to_form copies when the form already matches") {
            const auto same = to_form(prime, CoefficientForm::prime);
            CHECK(max_diff(same.coeff(0, 0), prime.coeff(0, 0)) == 0.0);
        }
    }
    CHECK_THROWS_AS(a_to_aprime(a_to_aprime(testbed::standard(g, 2))), std::invalid_argument);
    CHECK_THROWS_AS(aprime_to_a(testbed::standard(g, 2)), std::invalid_argument);
}

TEST_CASE("formal adjoint satisfies the bilinear identity") {
    const ComplexGrid g({}, 1.0, 256);
    const auto u = gaussian(g, {0.1, 0.05}, 0.2, {1.0, -0.5});
    const auto v = gaussian(g, {-0.05, 0.1}, 0.22, {0.3, 0.8});
    for (int m : {2, 3}) {
        CAPTURE(m);
        const PerturbedOperator op = testbed::standard(g, m);
        const PerturbedOperator adj = adjoint(op);
        const cplx lhs = grid_inner(apply(op, u), v);
        const cplx rhs = grid_inner(u, apply(adj, v));
        CHECK(std::abs(lhs - rhs) <= 1e-6 * std::abs(lhs));

        // The prime form has the same adjoint.
        const PerturbedOperator adj_prime = adjoint(a_to_aprime(op));
        CHECK(norm_lp(apply(adj_prime, v) - apply(adj, v), 2.0, Region::central(g, 0.9)) <=
              1e-5 * norm_lp(apply(adj, v), 2.0, Region::central(g, 0.9)));
    }
}

TEST_CASE("adjoint of the unperturbed operator is unperturbed") {
    const ComplexGrid g({}, 1.0, 32);
    CHECK(adjoint(PerturbedOperator::unperturbed(3, g)).is_unperturbed());
}

TEST_CASE("adjoint expansion bookkeeping") {
    for (int m : {2, 3, 4}) {
        const auto terms = adjoint_expansion(m);
        const std::size_t tri = static_cast<std::size_t>(m * (m + 1) / 2);
        CHECK(terms.size() == tri * tri);
        for (const auto& t : terms) {
            CHECK(t.target_a + t.d_order == t.source_k);
            CHECK(t.target_b + t.dbar_order == t.source_j);
            const double sign = ((t.source_j + t.source_k) % 2 == 0) ? 1.0 : -1.0;
            CHECK(t.weight == sign * binomial(t.source_k, t.target_a) * binomial(t.source_j, t.target_b));
        }
    }
    // A d dbar with constant A contributes conj(A) d dbar.
    const ComplexGrid g({}, 1.0, 32);
    std::vector<ScalarField> c(4, ScalarField::zeros(g));
    c[3] = ScalarField::constant(g, {2.0, 3.0});
    const auto adj = adjoint(PerturbedOperator(2, c, CoefficientForm::standard));
    CHECK(max_diff(adj.coeff(1, 1), ScalarField::constant(g, {2.0, -3.0})) < 1e-14);
    CHECK(adj.coeff(0, 0).is_zero());
}

TEST_CASE("binomial coefficients") {
    CHECK(binomial(5, 2) == 10.0);
    CHECK(binomial(4, 0) == 1.0);
    CHECK(binomial(3, 4) == 0.0);
    CHECK(binomial(3, -1) == 0.0);
}

TEST_CASE("operator construction errors") {
    const ComplexGrid g({}, 1.0, 16);
    const ComplexGrid other({}, 2.0, 16);
    CHECK_THROWS_AS(PerturbedOperator(1, {ScalarField::zeros(g)}, CoefficientForm::standard), std::invalid_argument);
    CHECK_THROWS_AS(PerturbedOperator::unperturbed(1, g), std::invalid_argument);
    CHECK_THROWS_AS(PerturbedOperator(2, std::vector<ScalarField>(3, ScalarField::zeros(g)), CoefficientForm::standard),
                    std::invalid_argument);
    std::vector<ScalarField> mixed(4, ScalarField::zeros(g));
    mixed[2] = ScalarField::zeros(other);
    CHECK_THROWS_AS(PerturbedOperator(2, mixed, CoefficientForm::standard), GridError);
    CHECK_THROWS_AS(apply(PerturbedOperator::unperturbed(2, g), ScalarField::zeros(other)), GridError);
}
