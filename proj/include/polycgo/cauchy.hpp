#pragma once

#include "polycgo/grid.hpp"
#include "polycgo/phase.hpp"

#include <memory>
#include <span>
#include <vector>

namespace polycgo {

enum class ConvolutionMethod {
    fft,    ///< zero-padded doubling + FFT, O(n^2 log n)
    direct, ///< plain O(n^4) summation, validation only (n <= 128)
};

/// Discrete solid Cauchy transform dbar^{-1} f(z) = (1/pi) int f(xi)/(z - xi)
/// on a ComplexGrid, with fields zero-extended outside the square.
///
/// The kernel is the trapezoid rule for 1/(pi z) with two local corrections:
///  * the singular cell carries the exact mean of 1/(pi z) over a centered
///    square cell, which is 0 by odd symmetry;
///  * the s^2 term of the punctured-lattice error expansion,
///    +(s^2/pi) d f(z), is removed with the 4th-order centered stencil for d.
/// Both corrections are odd, so the table stays odd under p -> -p, and the
/// resulting transform is 4th-order accurate for smooth compactly supported f.
class CauchyKernel {
public:
    explicit CauchyKernel(const ComplexGrid& grid);
    ~CauchyKernel();
    CauchyKernel(const CauchyKernel&) = delete;
    CauchyKernel& operator=(const CauchyKernel&) = delete;

    const ComplexGrid& grid() const { return grid_; }

    /// Kernel weight for lattice offset (px, py), |px|, |py| < n. Includes the
    /// s^2 area factor.
    cplx weight(long px, long py) const;

    ScalarField apply(const ScalarField& f, ConvolutionMethod method = ConvolutionMethod::fft) const;

    /// Shared kernel for a grid, built on first use. Thread-safe.
    static std::shared_ptr<const CauchyKernel> for_grid(const ComplexGrid& grid);

private:
    struct Plans;

    ComplexGrid grid_;
    std::size_t padded_;
    std::vector<cplx> table_;    // padded x padded, wrap-around offsets
    std::vector<cplx> spectrum_; // FFT of table_ / padded^2
    std::unique_ptr<Plans> plans_;
};

ScalarField dbar_inv(const ScalarField& f, ConvolutionMethod method = ConvolutionMethod::fft);
/// d^{-1} f = conj(dbar^{-1} conj f), nodewise exact.
ScalarField d_inv(const ScalarField& f, ConvolutionMethod method = ConvolutionMethod::fft);
ScalarField dbar_inv_pow(const ScalarField& f, int m);
ScalarField d_inv_pow(const ScalarField& f, int m);

struct DecayRow {
    double h = 0.0;
    double norm = 0.0;
};

struct DecayTable {
    double q = 2.0;
    std::vector<DecayRow> rows;
    /// Least-squares slope of log norm against log h; NaN when any norm is 0.
    double slope = 0.0;
};

/// ||d^{-1}(e^{(Phi - conj Phi)/h} omega)||_{L^q} for each h (z0 and carrier
/// taken from `phase`, its h ignored).
DecayTable oscillatory_decay_probe(const ScalarField& omega, const PhaseSpec& phase, double q,
                                   std::span<const double> h_list);

/// Same probe for several exponents, sharing one transform per h.
std::vector<DecayTable> oscillatory_decay_probe(const ScalarField& omega, const PhaseSpec& phase,
                                                std::span<const double> q_list, std::span<const double> h_list);

/// Least-squares slope of log y against log x; NaN if any y <= 0.
double loglog_slope(std::span<const double> x, std::span<const double> y);

} // namespace polycgo
