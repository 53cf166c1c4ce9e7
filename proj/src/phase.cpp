#include "polycgo/phase.hpp"

#include <cmath>
#include <sstream>

namespace polycgo {

cplx PhaseSpec::phi(cplx z) const {
    const cplx d = z - z0;
    return static_cast<double>(carrier) * cplx(0.0, 1.0) * d * d;
}

cplx PhaseSpec::phi_prime(cplx z) const { return cplx(0.0, 2.0 * carrier) * (z - z0); }

namespace {

// (Phi - conj Phi)/h = 2 i carrier Re((z - z0)^2) / h; returns the angle.
double oscillation_angle(const PhaseSpec& p, cplx z) {
    const cplx d = z - p.z0;
    const double re_sq = d.real() * d.real() - d.imag() * d.imag();
    return 2.0 * p.carrier * re_sq / p.h;
}

} // namespace

ScalarField PhaseSpec::oscillation(const ComplexGrid& grid) const {
    return ScalarField::sample(grid, [this](cplx z) { return std::polar(1.0, oscillation_angle(*this, z)); });
}

ScalarField PhaseSpec::counter_oscillation(const ComplexGrid& grid) const {
    return ScalarField::sample(grid, [this](cplx z) { return std::polar(1.0, -oscillation_angle(*this, z)); });
}

std::vector<double> PhaseSpec::carrier_modulus(const ComplexGrid& grid) const {
    std::vector<double> out(grid.size());
    for (std::size_t j = 0; j < grid.n(); ++j) {
        for (std::size_t i = 0; i < grid.n(); ++i) {
            out[grid.index(i, j)] = std::exp(phi(grid.node(i, j)).real() / h);
        }
    }
    return out;
}

void PhaseSpec::validate(const ComplexGrid& grid) const {
    if (!(h > 0.0) || !std::isfinite(h)) throw CouplingViolation("h must be positive and finite");
    if (carrier != 1 && carrier != -1) throw std::invalid_argument("phase carrier must be +1 or -1");
    if (!grid.contains(z0)) {
        std::ostringstream os;
        os << "critical point z0 = (" << z0.real() << ", " << z0.imag() << ") is not inside the grid square";
        throw GridError(os.str());
    }
    if (grid.spacing() > h / kCellsPerH) {
        std::ostringstream os;
        os << "grid spacing " << grid.spacing() << " exceeds h/8 = " << h / kCellsPerH << " (n = " << grid.n()
           << ", h = " << h << ")";
        throw CouplingViolation(os.str());
    }
}

double min_resolved_h(const ComplexGrid& grid) { return kCellsPerH * grid.spacing(); }

} // namespace polycgo
