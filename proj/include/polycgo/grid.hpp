#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace polycgo {

using cplx = std::complex<double>;

/// Raised for malformed grids, non-finite samples and grid mismatches.
class GridError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Uniform n x n node lattice on the square [-w, w]^2 + center, read as a
/// subset of the complex plane (z = x + i y).
///
/// Nodes are stored row-major with x fastest: index(i, j) = j * n + i, where
/// i runs along x and j along y.
class ComplexGrid {
public:
    ComplexGrid(cplx center, double half_width, std::size_t n);

    cplx center() const { return center_; }
    double half_width() const { return half_width_; }
    std::size_t n() const { return n_; }
    std::size_t size() const { return n_ * n_; }
    double spacing() const { return spacing_; }

    double x(std::size_t i) const { return center_.real() - half_width_ + static_cast<double>(i) * spacing_; }
    double y(std::size_t j) const { return center_.imag() - half_width_ + static_cast<double>(j) * spacing_; }
    cplx node(std::size_t i, std::size_t j) const { return {x(i), y(j)}; }
    std::size_t index(std::size_t i, std::size_t j) const { return j * n_ + i; }

    /// True when z lies strictly inside the square.
    bool contains(cplx z) const;

    bool operator==(const ComplexGrid& other) const = default;

private:
    cplx center_;
    double half_width_;
    std::size_t n_;
    double spacing_;
};

/// Half-open index window [lo, hi) applied to both axes.
struct Region {
    std::size_t lo = 0;
    std::size_t hi = 0;

    static Region full(const ComplexGrid& grid) { return {0, grid.n()}; }
    /// Central sub-square keeping `fraction` of the nodes per axis.
    static Region central(const ComplexGrid& grid, double fraction);
    bool contains(std::size_t i, std::size_t j) const { return i >= lo && i < hi && j >= lo && j < hi; }
};

/// Complex samples on a ComplexGrid. Immutable once built; every
/// constructor rejects NaN and Inf samples.
class ScalarField {
public:
    ScalarField(const ComplexGrid& grid, std::vector<cplx> values);

    static ScalarField zeros(const ComplexGrid& grid);
    static ScalarField constant(const ComplexGrid& grid, cplx value);
    static ScalarField sample(const ComplexGrid& grid, const std::function<cplx(cplx)>& f);

    const ComplexGrid& grid() const { return grid_; }
    std::span<const cplx> values() const { return values_; }
    cplx operator()(std::size_t i, std::size_t j) const { return values_[grid_.index(i, j)]; }
    cplx at(std::size_t k) const { return values_[k]; }

    /// Moves the samples out, leaving the field empty.
    std::vector<cplx> release() && { return std::move(values_); }

    /// True when every sample is exactly zero.
    bool is_zero() const;

    ScalarField conj() const;
    ScalarField operator-() const;

    friend ScalarField operator+(const ScalarField& a, const ScalarField& b);
    friend ScalarField operator-(const ScalarField& a, const ScalarField& b);
    friend ScalarField operator*(const ScalarField& a, const ScalarField& b);
    friend ScalarField operator*(cplx c, const ScalarField& a);
    friend ScalarField operator*(const ScalarField& a, cplx c) { return c * a; }

private:
    ComplexGrid grid_;
    std::vector<cplx> values_;
};

void require_same_grid(const ScalarField& a, const ScalarField& b, const char* where);

/// a + c * b, the workhorse of the iterative solvers.
ScalarField axpy(const ScalarField& a, cplx c, const ScalarField& b);

// Wirtinger calculus, 4th-order centered differences in the interior and
// 4th-order one-sided stencils on the two outermost rows/columns.
ScalarField partial_x(const ScalarField& f);
ScalarField partial_y(const ScalarField& f);
/// d = (d/dx - i d/dy) / 2
ScalarField wirtinger_d(const ScalarField& f);
/// dbar = (d/dx + i d/dy) / 2
ScalarField wirtinger_dbar(const ScalarField& f);
ScalarField wirtinger_d_pow(const ScalarField& f, int k);
ScalarField wirtinger_dbar_pow(const ScalarField& f, int k);
/// Laplacian from 4th-order second-difference stencils (independent of the
/// Wirtinger route, used to cross-check 4 d dbar).
ScalarField laplacian(const ScalarField& f);

/// Tensor-product cubic Lagrange interpolation at an arbitrary point inside
/// the square (4th-order accurate for smooth fields).
cplx interpolate(const ScalarField& f, cplx z);

/// Trapezoid quadrature of f over the grid square.
cplx integrate(const ScalarField& f);

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Discrete L^p norm with trapezoid weights; p = kInfinity gives the max norm.
double norm_lp(const ScalarField& f, double p);
/// L^p norm restricted to a window (uniform weights inside the window).
double norm_lp(const ScalarField& f, double p, Region region);
/// (||f||_p^p + ||d f||_p^p + ||dbar f||_p^p)^(1/p)
double norm_w1p(const ScalarField& f, double p);
/// sqrt of the summed squared L^2 norms of d^a dbar^b f over a + b <= m.
double norm_hm(const ScalarField& f, int m);
/// H^m norm with every L^2 term restricted to `region` (uniform weights).
double norm_hm(const ScalarField& f, int m, Region region);

} // namespace polycgo
