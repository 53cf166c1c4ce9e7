#pragma once

// Shared coefficient tables for the CGO and recovery tests.

#include "oracles.hpp"

#include "polycgo/operator.hpp"

#include <vector>

namespace testbed {

using polycgo::cplx;

inline polycgo::ScalarField bump(const polycgo::ComplexGrid& g, cplx center, double R, cplx amp) {
    return polycgo::ScalarField::sample(g, [=](cplx z) { return amp * oracle::bump(std::norm(z - center), R); });
}

/// Standard bump testbed: A_{j,k} is a bump of radius 0.85 centred at
/// 0.05 (j - 1/2) + 0.05 (k - 1/2) i with amplitude 1/(1 + j + k) + 0.3 (j - k) i.
inline polycgo::PerturbedOperator standard(const polycgo::ComplexGrid& g, int m) {
    std::vector<polycgo::ScalarField> coeffs;
    for (int j = 0; j < m; ++j) {
        for (int k = 0; k < m; ++k) {
            const cplx center(0.05 * (j - 0.5), 0.05 * (k - 0.5));
            const cplx amp(1.0 / (1.0 + j + k), 0.3 * (j - k));
            coeffs.push_back(bump(g, center, 0.85, amp));
        }
    }
    return {m, std::move(coeffs), polycgo::CoefficientForm::standard};
}

/// Four distinct prime-form bumps for m = 2 recovery.
inline polycgo::PerturbedOperator four_bumps(const polycgo::ComplexGrid& g) {
    const cplx centers[4] = {{0.0, 0.0}, {0.05, -0.03}, {-0.04, 0.05}, {0.03, 0.04}};
    const double radii[4] = {0.85, 0.8, 0.82, 0.84};
    const cplx amps[4] = {{1.0, 0.0}, {0.5, 0.3}, {-0.4, 0.6}, {0.7, -0.2}};
    std::vector<polycgo::ScalarField> coeffs;
    for (int q = 0; q < 4; ++q) coeffs.push_back(bump(g, centers[q], radii[q], amps[q]));
    return {2, std::move(coeffs), polycgo::CoefficientForm::prime};
}

} // namespace testbed
