#include "polycgo/grid.hpp"

#include <algorithm>
#include <cmath>

namespace polycgo {

namespace {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// 4th-order first-derivative stencils (divide by 12 s).
constexpr double kCentered[5] = {1.0, -8.0, 0.0, 8.0, -1.0};
constexpr double kEdge0[5] = {-25.0, 48.0, -36.0, 16.0, -3.0};
constexpr double kEdge1[5] = {-3.0, -10.0, 18.0, -6.0, 1.0};

// 4th-order second-derivative stencils (divide by 12 s^2).
constexpr double kCentered2[5] = {-1.0, 16.0, -30.0, 16.0, -1.0};
constexpr double kEdge2_0[6] = {45.0, -154.0, 214.0, -156.0, 61.0, -10.0};
constexpr double kEdge2_1[6] = {10.0, -15.0, -4.0, 14.0, -6.0, 1.0};

// Applies a 1D derivative along a strided line of length n.
template <typename Out>
void diff_line(const cplx* in, std::size_t stride, std::size_t n, double inv, Out&& out) {
    auto at = [&](std::size_t k) { return in[k * stride]; };
    for (std::size_t k = 0; k < n; ++k) {
        cplx acc{};
        if (k >= 2 && k + 2 < n) {
            for (int q = 0; q < 5; ++q) acc += kCentered[q] * at(k - 2 + q);
        } else if (k == 0) {
            for (int q = 0; q < 5; ++q) acc += kEdge0[q] * at(q);
        } else if (k == 1) {
            for (int q = 0; q < 5; ++q) acc += kEdge1[q] * at(q);
        } else if (k == n - 1) {
            for (int q = 0; q < 5; ++q) acc -= kEdge0[q] * at(n - 1 - q);
        } else {
            for (int q = 0; q < 5; ++q) acc -= kEdge1[q] * at(n - 1 - q);
        }
        out(k, acc * inv);
    }
}

template <typename Out>
void diff2_line(const cplx* in, std::size_t stride, std::size_t n, double inv, Out&& out) {
    auto at = [&](std::size_t k) { return in[k * stride]; };
    for (std::size_t k = 0; k < n; ++k) {
        cplx acc{};
        if (k >= 2 && k + 2 < n) {
            for (int q = 0; q < 5; ++q) acc += kCentered2[q] * at(k - 2 + q);
        } else if (k == 0) {
            for (int q = 0; q < 6; ++q) acc += kEdge2_0[q] * at(q);
        } else if (k == 1) {
            for (int q = 0; q < 6; ++q) acc += kEdge2_1[q] * at(q);
        } else if (k == n - 1) {
            for (int q = 0; q < 6; ++q) acc += kEdge2_0[q] * at(n - 1 - q);
        } else {
            for (int q = 0; q < 6; ++q) acc += kEdge2_1[q] * at(n - 1 - q);
        }
        out(k, acc * inv);
    }
}

// Combined pass: result = cx * d/dx f + cy * d/dy f.
ScalarField directional(const ScalarField& f, cplx cx, cplx cy) {
    const auto& g = f.grid();
    const std::size_t n = g.n();
    const double inv = 1.0 / (12.0 * g.spacing());
    const cplx* src = f.values().data();
    std::vector<cplx> out(g.size(), cplx{});
    if (cx != cplx{}) {
#pragma omp parallel for schedule(static)
        for (std::size_t j = 0; j < n; ++j) {
            diff_line(src + j * n, 1, n, inv, [&](std::size_t i, cplx v) { out[j * n + i] += cx * v; });
        }
    }
    if (cy != cplx{}) {
#pragma omp parallel for schedule(static)
        for (std::size_t i = 0; i < n; ++i) {
            diff_line(src + i, n, n, inv, [&](std::size_t j, cplx v) { out[j * n + i] += cy * v; });
        }
    }
    return ScalarField(g, std::move(out));
}

double trapezoid_weight(std::size_t k, std::size_t n) { return (k == 0 || k + 1 == n) ? 0.5 : 1.0; }

} // namespace

ComplexGrid::ComplexGrid(cplx center, double half_width, std::size_t n)
    : center_(center), half_width_(half_width), n_(n), spacing_(0.0) {
    if (!std::isfinite(center.real()) || !std::isfinite(center.imag())) {
        throw GridError("grid center must be finite");
    }
    if (!(half_width > 0.0) || !std::isfinite(half_width)) {
        throw GridError("grid half_width must be positive and finite");
    }
    if (n < 16 || !is_power_of_two(n)) {
        throw GridError("grid size n must be a power of two >= 16, got " + std::to_string(n));
    }
    spacing_ = 2.0 * half_width / static_cast<double>(n - 1);
}

bool ComplexGrid::contains(cplx z) const {
    const cplx d = z - center_;
    return std::abs(d.real()) < half_width_ && std::abs(d.imag()) < half_width_;
}

Region Region::central(const ComplexGrid& grid, double fraction) {
    const std::size_t n = grid.n();
    const auto margin = static_cast<std::size_t>(std::ceil(0.5 * (1.0 - fraction) * static_cast<double>(n)));
    return {margin, n - margin};
}

ScalarField::ScalarField(const ComplexGrid& grid, std::vector<cplx> values)
    : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
        throw GridError("field has " + std::to_string(values_.size()) + " samples, grid expects " +
                        std::to_string(grid_.size()));
    }
    for (const cplx& v : values_) {
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
            throw GridError("field contains non-finite samples");
        }
    }
}

ScalarField ScalarField::zeros(const ComplexGrid& grid) { return {grid, std::vector<cplx>(grid.size())}; }

ScalarField ScalarField::constant(const ComplexGrid& grid, cplx value) {
    return {grid, std::vector<cplx>(grid.size(), value)};
}

ScalarField ScalarField::sample(const ComplexGrid& grid, const std::function<cplx(cplx)>& f) {
    std::vector<cplx> v(grid.size());
    const std::size_t n = grid.n();
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) v[grid.index(i, j)] = f(grid.node(i, j));
    }
    return {grid, std::move(v)};
}

bool ScalarField::is_zero() const {
    return std::all_of(values_.begin(), values_.end(), [](cplx v) { return v == cplx{}; });
}

ScalarField ScalarField::conj() const {
    std::vector<cplx> v(values_.size());
    std::transform(values_.begin(), values_.end(), v.begin(), [](cplx c) { return std::conj(c); });
    return {grid_, std::move(v)};
}

ScalarField ScalarField::operator-() const {
    std::vector<cplx> v(values_.size());
    std::transform(values_.begin(), values_.end(), v.begin(), [](cplx c) { return -c; });
    return {grid_, std::move(v)};
}

void require_same_grid(const ScalarField& a, const ScalarField& b, const char* where) {
    if (!(a.grid() == b.grid())) throw GridError(std::string("grid mismatch in ") + where);
}

ScalarField operator+(const ScalarField& a, const ScalarField& b) {
    require_same_grid(a, b, "operator+");
    std::vector<cplx> v(a.values_.size());
    std::transform(a.values_.begin(), a.values_.end(), b.values_.begin(), v.begin(), std::plus<>{});
    return {a.grid_, std::move(v)};
}

ScalarField operator-(const ScalarField& a, const ScalarField& b) {
    require_same_grid(a, b, "operator-");
    std::vector<cplx> v(a.values_.size());
    std::transform(a.values_.begin(), a.values_.end(), b.values_.begin(), v.begin(), std::minus<>{});
    return {a.grid_, std::move(v)};
}

ScalarField operator*(const ScalarField& a, const ScalarField& b) {
    require_same_grid(a, b, "operator*");
    std::vector<cplx> v(a.values_.size());
    std::transform(a.values_.begin(), a.values_.end(), b.values_.begin(), v.begin(), std::multiplies<>{});
    return {a.grid_, std::move(v)};
}

ScalarField operator*(cplx c, const ScalarField& a) {
    std::vector<cplx> v(a.values_.size());
    std::transform(a.values_.begin(), a.values_.end(), v.begin(), [c](cplx x) { return c * x; });
    return {a.grid_, std::move(v)};
}

ScalarField axpy(const ScalarField& a, cplx c, const ScalarField& b) {
    require_same_grid(a, b, "axpy");
    const auto av = a.values();
    const auto bv = b.values();
    std::vector<cplx> v(av.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = av[k] + c * bv[k];
    return {a.grid(), std::move(v)};
}

ScalarField partial_x(const ScalarField& f) { return directional(f, 1.0, 0.0); }
ScalarField partial_y(const ScalarField& f) { return directional(f, 0.0, 1.0); }
ScalarField wirtinger_d(const ScalarField& f) { return directional(f, 0.5, cplx(0.0, -0.5)); }
ScalarField wirtinger_dbar(const ScalarField& f) { return directional(f, 0.5, cplx(0.0, 0.5)); }

ScalarField wirtinger_d_pow(const ScalarField& f, int k) {
    ScalarField out = f;
    for (int q = 0; q < k; ++q) out = wirtinger_d(out);
    return out;
}

ScalarField wirtinger_dbar_pow(const ScalarField& f, int k) {
    ScalarField out = f;
    for (int q = 0; q < k; ++q) out = wirtinger_dbar(out);
    return out;
}

ScalarField laplacian(const ScalarField& f) {
    const auto& g = f.grid();
    const std::size_t n = g.n();
    const double inv = 1.0 / (12.0 * g.spacing() * g.spacing());
    const cplx* src = f.values().data();
    std::vector<cplx> out(g.size(), cplx{});
    for (std::size_t j = 0; j < n; ++j) {
        diff2_line(src + j * n, 1, n, inv, [&](std::size_t i, cplx v) { out[j * n + i] += v; });
    }
    for (std::size_t i = 0; i < n; ++i) {
        diff2_line(src + i, n, n, inv, [&](std::size_t j, cplx v) { out[j * n + i] += v; });
    }
    return {g, std::move(out)};
}

cplx integrate(const ScalarField& f) {
    const auto& g = f.grid();
    const std::size_t n = g.n();
    const auto v = f.values();
    // Serial accumulation keeps results bit-identical across thread counts.
    cplx total{};
    for (std::size_t j = 0; j < n; ++j) {
        cplx row{};
        for (std::size_t i = 0; i < n; ++i) row += trapezoid_weight(i, n) * v[j * n + i];
        total += trapezoid_weight(j, n) * row;
    }
    return total * (g.spacing() * g.spacing());
}

double norm_lp(const ScalarField& f, double p) {
    if (!(p >= 1.0)) throw std::invalid_argument("norm_lp requires p >= 1");
    const auto& g = f.grid();
    const std::size_t n = g.n();
    const auto v = f.values();
    if (std::isinf(p)) {
        double m = 0.0;
        for (const cplx& c : v) m = std::max(m, std::abs(c));
        return m;
    }
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double row = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double a = std::abs(v[j * n + i]);
            row += trapezoid_weight(i, n) * (p == 2.0 ? a * a : std::pow(a, p));
        }
        total += trapezoid_weight(j, n) * row;
    }
    return std::pow(total * g.spacing() * g.spacing(), 1.0 / p);
}

double norm_lp(const ScalarField& f, double p, Region region) {
    if (!(p >= 1.0)) throw std::invalid_argument("norm_lp requires p >= 1");
    const auto& g = f.grid();
    const auto v = f.values();
    double total = 0.0;
    double peak = 0.0;
    for (std::size_t j = region.lo; j < region.hi; ++j) {
        for (std::size_t i = region.lo; i < region.hi; ++i) {
            const double a = std::abs(v[g.index(i, j)]);
            if (std::isinf(p)) {
                peak = std::max(peak, a);
            } else {
                total += (p == 2.0 ? a * a : std::pow(a, p));
            }
        }
    }
    if (std::isinf(p)) return peak;
    return std::pow(total * g.spacing() * g.spacing(), 1.0 / p);
}

double norm_w1p(const ScalarField& f, double p) {
    if (std::isinf(p)) {
        return std::max({norm_lp(f, p), norm_lp(wirtinger_d(f), p), norm_lp(wirtinger_dbar(f), p)});
    }
    const double a = std::pow(norm_lp(f, p), p);
    const double b = std::pow(norm_lp(wirtinger_d(f), p), p);
    const double c = std::pow(norm_lp(wirtinger_dbar(f), p), p);
    return std::pow(a + b + c, 1.0 / p);
}

namespace {

template <typename L2>
double hm_sum(const ScalarField& f, int m, L2&& l2) {
    if (m < 0) throw std::invalid_argument("norm_hm requires m >= 0");
    double total = 0.0;
    ScalarField dbar_level = f; // dbar^b f
    for (int b = 0; b <= m; ++b) {
        ScalarField cur = dbar_level;
        for (int a = 0; a + b <= m; ++a) {
            const double v = l2(cur);
            total += v * v;
            if (a + b < m) cur = wirtinger_d(cur);
        }
        if (b < m) dbar_level = wirtinger_dbar(dbar_level);
    }
    return std::sqrt(total);
}

} // namespace

double norm_hm(const ScalarField& f, int m) {
    return hm_sum(f, m, [](const ScalarField& x) { return norm_lp(x, 2.0); });
}

double norm_hm(const ScalarField& f, int m, Region region) {
    return hm_sum(f, m, [region](const ScalarField& x) { return norm_lp(x, 2.0, region); });
}

} // namespace polycgo

namespace polycgo {

cplx interpolate(const ScalarField& f, cplx z) {
    const auto& g = f.grid();
    const cplx d = z - g.center();
    if (std::abs(d.real()) > g.half_width() || std::abs(d.imag()) > g.half_width()) {
        throw GridError("interpolation point outside the grid square");
    }
    const long n = static_cast<long>(g.n());
    const double u = (z.real() - g.x(0)) / g.spacing();
    const double v = (z.imag() - g.y(0)) / g.spacing();
    auto base = [n](double t) { return std::clamp(static_cast<long>(std::floor(t)) - 1, 0L, n - 4); };
    const long i0 = base(u);
    const long j0 = base(v);
    auto weights = [](double t, long start, double w[4]) {
        for (int a = 0; a < 4; ++a) {
            double prod = 1.0;
            for (int b = 0; b < 4; ++b) {
                if (b != a) prod *= (t - static_cast<double>(start + b)) / static_cast<double>(a - b);
            }
            w[a] = prod;
        }
    };
    double wx[4], wy[4];
    weights(u, i0, wx);
    weights(v, j0, wy);
    cplx acc{};
    for (int b = 0; b < 4; ++b) {
        for (int a = 0; a < 4; ++a) {
            acc += wx[a] * wy[b] * f(static_cast<std::size_t>(i0 + a), static_cast<std::size_t>(j0 + b));
        }
    }
    return acc;
}

} // namespace polycgo
