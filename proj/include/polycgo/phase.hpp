#pragma once

#include "polycgo/grid.hpp"

#include <stdexcept>

namespace polycgo {

/// The grid cannot resolve the oscillation e^{(Phi - conj Phi)/h}.
class CouplingViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Minimum number of grid cells per unit of h (spacing <= h / 8).
inline constexpr double kCellsPerH = 8.0;

/// Quadratic phase Phi(z) = carrier * i (z - z0)^2 with semiclassical
/// parameter h. carrier = +1 gives the e^{Phi/h} family, carrier = -1 the
/// e^{-Phi/h} family used for adjoint solutions.
struct PhaseSpec {
    cplx z0{};
    double h = 0.1;
    int carrier = 1;

    cplx phi(cplx z) const;
    /// Phi'(z) = 2 i carrier (z - z0).
    cplx phi_prime(cplx z) const;

    /// e^{(Phi - conj Phi)/h}, unimodular.
    ScalarField oscillation(const ComplexGrid& grid) const;
    /// e^{(conj Phi - Phi)/h} = conj of oscillation().
    ScalarField counter_oscillation(const ComplexGrid& grid) const;
    /// |e^{Phi/h}| = e^{Re Phi / h} sampled on the grid.
    std::vector<double> carrier_modulus(const ComplexGrid& grid) const;

    PhaseSpec conjugate_carrier() const { return {z0, h, -carrier}; }

    /// Throws CouplingViolation when spacing > h/8 and GridError when z0 is
    /// not strictly inside the square.
    void validate(const ComplexGrid& grid) const;
};

/// Smallest h the grid resolves under the spacing <= h/8 rule.
double min_resolved_h(const ComplexGrid& grid);

} // namespace polycgo
