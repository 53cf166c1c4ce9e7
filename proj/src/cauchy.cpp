#include "polycgo/cauchy.hpp"

#include <fftw3.h>
#include <omp.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <tuple>

namespace polycgo {

namespace {

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

void init_fftw_threads() {
    static const bool done = [] {
        fftw_init_threads();
        return true;
    }();
    (void)done;
}

struct FftwBuffer {
    explicit FftwBuffer(std::size_t count)
        : data(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * count))), size(count) {
        if (data == nullptr) throw std::bad_alloc();
    }
    ~FftwBuffer() { fftw_free(data); }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;

    cplx* as_complex() { return reinterpret_cast<cplx*>(data); }

    fftw_complex* data;
    std::size_t size;
};

// 4th-order centered first-difference weights for offsets -2..2 (over 12 s).
constexpr double kStencil[5] = {1.0, -8.0, 0.0, 8.0, -1.0};

} // namespace

// Pruned 2D transforms on the padded P x P buffer: the input lives in the
// first n rows and columns, and only the first n rows of the output are read.
struct CauchyKernel::Plans {
    fftw_plan rows_forward = nullptr;  // first n rows, length P
    fftw_plan cols_forward = nullptr;  // all P columns
    fftw_plan cols_backward = nullptr; // all P columns
    fftw_plan rows_backward = nullptr; // first n rows

    ~Plans() {
        std::lock_guard lock(planner_mutex());
        for (fftw_plan p : {rows_forward, cols_forward, cols_backward, rows_backward}) {
            if (p != nullptr) fftw_destroy_plan(p);
        }
    }
};

CauchyKernel::CauchyKernel(const ComplexGrid& grid)
    : grid_(grid), padded_(2 * grid.n()), table_(padded_ * padded_), spectrum_(padded_ * padded_),
      plans_(std::make_unique<Plans>()) {
    const long n = static_cast<long>(grid.n());
    const long P = static_cast<long>(padded_);
    const double s = grid.spacing();

    auto slot = [&](long px, long py) -> cplx& {
        const long ix = ((px % P) + P) % P;
        const long iy = ((py % P) + P) % P;
        return table_[static_cast<std::size_t>(iy * P + ix)];
    };

    // Point samples s^2 / (pi s p) for p != 0; the singular cell stays 0.
    for (long py = -(n - 1); py <= n - 1; ++py) {
        for (long px = -(n - 1); px <= n - 1; ++px) {
            if (px == 0 && py == 0) continue;
            slot(px, py) = s / (std::numbers::pi * cplx(static_cast<double>(px), static_cast<double>(py)));
        }
    }
    // Remove (s^2/pi) d f: f(a + q e_x) enters at offset -q e_x, etc.
    for (int q = -2; q <= 2; ++q) {
        const double c = kStencil[q + 2];
        if (c == 0.0) continue;
        slot(-q, 0) += -s * c / (24.0 * std::numbers::pi);
        slot(0, -q) += cplx(0.0, s * c / (24.0 * std::numbers::pi));
    }

    init_fftw_threads();
    FftwBuffer work(padded_ * padded_);
    {
        std::lock_guard lock(planner_mutex());
        fftw_plan_with_nthreads(omp_get_max_threads());
        const int len[1] = {static_cast<int>(P)};
        plans_->rows_forward = fftw_plan_many_dft(1, len, static_cast<int>(n), work.data, nullptr, 1,
                                                  static_cast<int>(P), work.data, nullptr, 1, static_cast<int>(P),
                                                  FFTW_FORWARD, FFTW_ESTIMATE);
        plans_->cols_forward = fftw_plan_many_dft(1, len, static_cast<int>(P), work.data, nullptr,
                                                  static_cast<int>(P), 1, work.data, nullptr, static_cast<int>(P), 1,
                                                  FFTW_FORWARD, FFTW_ESTIMATE);
        plans_->cols_backward = fftw_plan_many_dft(1, len, static_cast<int>(P), work.data, nullptr,
                                                   static_cast<int>(P), 1, work.data, nullptr, static_cast<int>(P), 1,
                                                   FFTW_BACKWARD, FFTW_ESTIMATE);
        plans_->rows_backward = fftw_plan_many_dft(1, len, static_cast<int>(n), work.data, nullptr, 1,
                                                   static_cast<int>(P), work.data, nullptr, 1, static_cast<int>(P),
                                                   FFTW_BACKWARD, FFTW_ESTIMATE);
        if (!plans_->rows_forward || !plans_->cols_forward || !plans_->cols_backward || !plans_->rows_backward) {
            throw std::runtime_error("FFTW planning failed");
        }
    }

    // The kernel fills the whole padded square, so it gets a full transform.
    std::copy(table_.begin(), table_.end(), work.as_complex());
    {
        std::lock_guard lock(planner_mutex());
        fftw_plan full = fftw_plan_dft_2d(static_cast<int>(P), static_cast<int>(P), work.data, work.data,
                                          FFTW_FORWARD, FFTW_ESTIMATE);
        fftw_execute(full);
        fftw_destroy_plan(full);
    }
    const double scale = 1.0 / static_cast<double>(padded_ * padded_);
    const cplx* w = work.as_complex();
    for (std::size_t k = 0; k < spectrum_.size(); ++k) spectrum_[k] = w[k] * scale;
}

CauchyKernel::~CauchyKernel() = default;

cplx CauchyKernel::weight(long px, long py) const {
    const long n = static_cast<long>(grid_.n());
    if (std::abs(px) >= n || std::abs(py) >= n) throw std::out_of_range("kernel offset outside the table");
    const long P = static_cast<long>(padded_);
    const long ix = ((px % P) + P) % P;
    const long iy = ((py % P) + P) % P;
    return table_[static_cast<std::size_t>(iy * P + ix)];
}

ScalarField CauchyKernel::apply(const ScalarField& f, ConvolutionMethod method) const {
    if (!(f.grid() == grid_)) throw GridError("grid mismatch in Cauchy transform");
    if (f.is_zero()) return ScalarField::zeros(grid_);

    const std::size_t n = grid_.n();
    const std::size_t P = padded_;
    const auto src = f.values();

    if (method == ConvolutionMethod::direct) {
        if (n > 128) throw std::invalid_argument("direct Cauchy summation is limited to n <= 128");
        std::vector<cplx> out(grid_.size());
        for (std::size_t ja = 0; ja < n; ++ja) {
            for (std::size_t ia = 0; ia < n; ++ia) {
                cplx acc{};
                for (std::size_t jb = 0; jb < n; ++jb) {
                    for (std::size_t ib = 0; ib < n; ++ib) {
                        acc += weight(static_cast<long>(ia) - static_cast<long>(ib),
                                      static_cast<long>(ja) - static_cast<long>(jb)) *
                               src[jb * n + ib];
                    }
                }
                out[ja * n + ia] = acc;
            }
        }
        return {grid_, std::move(out)};
    }

    FftwBuffer work(P * P);
    cplx* w = work.as_complex();
    std::fill(w, w + P * P, cplx{});
    for (std::size_t j = 0; j < n; ++j) std::copy(src.begin() + j * n, src.begin() + (j + 1) * n, w + j * P);

    fftw_execute_dft(plans_->rows_forward, work.data, work.data);
    fftw_execute_dft(plans_->cols_forward, work.data, work.data);
#pragma omp parallel for schedule(static)
    for (std::size_t k = 0; k < P * P; ++k) w[k] *= spectrum_[k];
    fftw_execute_dft(plans_->cols_backward, work.data, work.data);
    fftw_execute_dft(plans_->rows_backward, work.data, work.data);

    std::vector<cplx> out(grid_.size());
    for (std::size_t j = 0; j < n; ++j) std::copy(w + j * P, w + j * P + n, out.begin() + j * n);
    return {grid_, std::move(out)};
}

std::shared_ptr<const CauchyKernel> CauchyKernel::for_grid(const ComplexGrid& grid) {
    using Key = std::tuple<double, double, double, std::size_t>;
    static std::mutex cache_mutex;
    static std::map<Key, std::shared_ptr<const CauchyKernel>> cache;
    const Key key{grid.center().real(), grid.center().imag(), grid.half_width(), grid.n()};
    std::lock_guard lock(cache_mutex);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto kernel = std::make_shared<const CauchyKernel>(grid);
    cache.emplace(key, kernel);
    return kernel;
}

ScalarField dbar_inv(const ScalarField& f, ConvolutionMethod method) {
    return CauchyKernel::for_grid(f.grid())->apply(f, method);
}

ScalarField d_inv(const ScalarField& f, ConvolutionMethod method) { return dbar_inv(f.conj(), method).conj(); }

ScalarField dbar_inv_pow(const ScalarField& f, int m) {
    if (m < 1) throw std::invalid_argument("dbar_inv_pow requires m >= 1");
    ScalarField out = dbar_inv(f);
    for (int k = 1; k < m; ++k) out = dbar_inv(out);
    return out;
}

ScalarField d_inv_pow(const ScalarField& f, int m) {
    if (m < 1) throw std::invalid_argument("d_inv_pow requires m >= 1");
    ScalarField out = d_inv(f);
    for (int k = 1; k < m; ++k) out = d_inv(out);
    return out;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope needs >= 2 paired samples");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (!(x[k] > 0.0) || !(y[k] > 0.0)) return std::nan("");
        const double lx = std::log(x[k]);
        const double ly = std::log(y[k]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double cnt = static_cast<double>(x.size());
    return (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
}

std::vector<DecayTable> oscillatory_decay_probe(const ScalarField& omega, const PhaseSpec& phase,
                                                std::span<const double> q_list, std::span<const double> h_list) {
    for (double h : h_list) PhaseSpec{phase.z0, h, phase.carrier}.validate(omega.grid());
    std::vector<DecayTable> tables;
    for (double q : q_list) {
        if (!(q > 1.0)) throw std::invalid_argument("decay probe exponent q must exceed 1");
        tables.push_back({q, {}, 0.0});
    }
    for (double h : h_list) {
        const PhaseSpec p{phase.z0, h, phase.carrier};
        const ScalarField transformed = d_inv(p.oscillation(omega.grid()) * omega);
        for (auto& t : tables) t.rows.push_back({h, norm_lp(transformed, t.q)});
    }
    for (auto& t : tables) {
        std::vector<double> hs, ns;
        for (const auto& r : t.rows) {
            hs.push_back(r.h);
            ns.push_back(r.norm);
        }
        t.slope = hs.size() >= 2 ? loglog_slope(hs, ns) : std::nan("");
    }
    return tables;
}

DecayTable oscillatory_decay_probe(const ScalarField& omega, const PhaseSpec& phase, double q,
                                   std::span<const double> h_list) {
    const double qs[1] = {q};
    return oscillatory_decay_probe(omega, phase, qs, h_list).front();
}

} // namespace polycgo
