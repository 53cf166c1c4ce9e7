#include "polycgo/recovery.hpp"

#include "polycgo/cauchy.hpp"
#include "polycgo/phase.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

namespace polycgo {

namespace {

double factorial(int k) {
    double r = 1.0;
    for (int i = 2; i <= k; ++i) r *= i;
    return r;
}

double sign_of(int j) { return (j % 2 == 0) ? 1.0 : -1.0; }

const double kNaN = std::numeric_limits<double>::quiet_NaN();

// Support-free frame: node indices outside [lo, hi) on either axis.
Region interior_of_frame(const ComplexGrid& grid) { return Region::central(grid, 1.0 - 2.0 * kFrameFraction); }

// dbar^k of the u-side factor and d^j of the conjugated v-side factor at one
// (z0, h), built on demand and cached for the pairs sharing them.
class PairEvaluator {
public:
    PairEvaluator(const RecoveryProblem& problem, double h, cplx z0)
        : problem_(problem), phase_{z0, h, 1} {
        phase_.validate(problem.grid());
    }

    cplx evaluate(int j0, int k0) {
        if (problem_.all_differences_zero()) return {};
        const auto& grid = problem_.grid();
        const int m = problem_.order();
        const auto& us = u_side(k0);
        const auto& vs = v_side(j0);
        std::vector<cplx> sum(grid.size(), cplx{});
        for (int j = 0; j < m; ++j) {
            for (int k = 0; k < m; ++k) {
                const ScalarField& b = problem_.difference(j, k);
                const auto& u = us[static_cast<std::size_t>(k)];
                const auto& v = vs[static_cast<std::size_t>(j)];
                if (!u || !v || b.is_zero()) continue;
                const double s = sign_of(j);
                const auto bv = b.values();
                const auto uv = u->values();
                const auto vv = v->values();
                for (std::size_t q = 0; q < sum.size(); ++q) sum[q] += s * bv[q] * uv[q] * vv[q];
            }
        }
        const ScalarField osc = phase_.oscillation(grid);
        const auto ov = osc.values();
        for (std::size_t q = 0; q < sum.size(); ++q) sum[q] *= ov[q];
        return integrate(ScalarField(grid, std::move(sum)));
    }

    // sum over nodes of |u-side * v-side| * s^2 over all (j, k) slots, with
    // unit coefficient weights so that it stays meaningful when B = 0.
    double absolute_mass(int j0, int k0) {
        const auto& grid = problem_.grid();
        const int m = problem_.order();
        const auto& us = u_side(k0);
        const auto& vs = v_side(j0);
        double total = 0.0;
        for (int j = 0; j < m; ++j) {
            for (int k = 0; k < m; ++k) {
                const auto& u = us[static_cast<std::size_t>(k)];
                const auto& v = vs[static_cast<std::size_t>(j)];
                if (!u || !v) continue;
                const auto uv = u->values();
                const auto vv = v->values();
                for (std::size_t q = 0; q < uv.size(); ++q) total += std::abs(uv[q] * vv[q]);
            }
        }
        return total * grid.spacing() * grid.spacing();
    }

private:
    using Slots = std::vector<std::optional<ScalarField>>;

    const Slots& u_side(int k0) {
        auto it = u_cache_.find(k0);
        if (it != u_cache_.end()) return it->second;
        const auto& grid = problem_.grid();
        const int m = problem_.order();
        const AmplitudeSpec a = AmplitudeSpec::monomial(grid, k0);
        Slots slots(static_cast<std::size_t>(m));
        if (problem_.mode() == RecoveryMode::amplitude_only) {
            for (int k = 0; k <= std::min(k0, m - 1); ++k) slots[static_cast<std::size_t>(k)] = a.dbar_pow(k);
        } else {
            const CGOSolution sol = assemble_cgo(problem_.L_tilde(), phase_, a, problem_.solver());
            ScalarField dr = sol.r;
            for (int k = 0; k < m; ++k) {
                slots[static_cast<std::size_t>(k)] = a.dbar_pow(k) + dr;
                if (k + 1 < m) dr = wirtinger_dbar(dr);
            }
        }
        return u_cache_.emplace(k0, std::move(slots)).first->second;
    }

    // d^j conj(b + s) = conj(dbar^j (b + s)).
    const Slots& v_side(int j0) {
        auto it = v_cache_.find(j0);
        if (it != v_cache_.end()) return it->second;
        const auto& grid = problem_.grid();
        const int m = problem_.order();
        const AmplitudeSpec b = AmplitudeSpec::monomial(grid, j0);
        Slots slots(static_cast<std::size_t>(m));
        if (problem_.mode() == RecoveryMode::amplitude_only) {
            for (int j = 0; j <= std::min(j0, m - 1); ++j) slots[static_cast<std::size_t>(j)] = b.dbar_pow(j).conj();
        } else {
            const CGOSolution sol = assemble_adjoint_cgo(problem_.L(), phase_, b, problem_.solver());
            ScalarField ds = sol.r;
            for (int j = 0; j < m; ++j) {
                slots[static_cast<std::size_t>(j)] = (b.dbar_pow(j) + ds).conj();
                if (j + 1 < m) ds = wirtinger_dbar(ds);
            }
        }
        return v_cache_.emplace(j0, std::move(slots)).first->second;
    }

    const RecoveryProblem& problem_;
    PhaseSpec phase_;
    std::map<int, Slots> u_cache_;
    std::map<int, Slots> v_cache_;
};

double relative(double abs_err, cplx truth) { return std::abs(truth) > 0.0 ? abs_err / std::abs(truth) : abs_err; }

} // namespace

RecoveryProblem::RecoveryProblem(PerturbedOperator L, PerturbedOperator L_tilde, std::vector<cplx> probes,
                                 std::vector<double> h_list, RecoveryMode mode, NeumannOptions solver,
                                 double conditioning_bound)
    : L_(std::move(L)),
      L_tilde_(std::move(L_tilde)),
      probes_(std::move(probes)),
      h_list_(std::move(h_list)),
      mode_(mode),
      solver_(solver),
      conditioning_bound_(conditioning_bound) {
    if (L_.order() != L_tilde_.order()) throw std::invalid_argument("recovery operators must share the order m");
    if (!(L_.grid() == L_tilde_.grid())) throw std::invalid_argument("recovery operators must share one grid");
    if (h_list_.empty()) throw std::invalid_argument("h_list must not be empty");
    for (std::size_t i = 0; i < h_list_.size(); ++i) {
        if (!(h_list_[i] > 0.0)) throw std::invalid_argument("h values must be positive");
        if (i > 0 && !(h_list_[i] < h_list_[i - 1])) throw std::invalid_argument("h_list must be strictly decreasing");
        PhaseSpec{grid().center(), h_list_[i], 1}.validate(grid());
    }

    const PerturbedOperator p = to_form(L_, CoefficientForm::prime);
    const PerturbedOperator pt = to_form(L_tilde_, CoefficientForm::prime);
    const int m = order();
    const Region inner = interior_of_frame(grid());
    const std::size_t n = grid().n();
    for (int j = 0; j < m; ++j) {
        for (int k = 0; k < m; ++k) {
            ScalarField b = pt.coeff(j, k) - p.coeff(j, k);
            for (std::size_t jj = 0; jj < n; ++jj) {
                for (std::size_t ii = 0; ii < n; ++ii) {
                    const bool frame = ii < inner.lo || ii >= inner.hi || jj < inner.lo || jj >= inner.hi;
                    if (frame && std::abs(b(ii, jj)) >= 1e-12) {
                        std::ostringstream os;
                        os << "coefficient difference B(" << j << "," << k << ") does not vanish on the outer "
                           << 100.0 * kFrameFraction << "% frame (|B| = " << std::abs(b(ii, jj)) << " at node " << ii
                           << "," << jj << ")";
                        throw std::invalid_argument(os.str());
                    }
                }
            }
            differences_.push_back(std::move(b));
        }
    }
}

bool RecoveryProblem::all_differences_zero() const {
    return std::all_of(differences_.begin(), differences_.end(), [](const ScalarField& b) { return b.is_zero(); });
}

double RecoveryProblem::conditioning(cplx z0) const {
    double s = 0.0;
    for (int p = 0; p < order(); ++p) s += std::pow(std::abs(z0), p) / factorial(p);
    return s * s;
}

void RecoveryProblem::check_probe(cplx z0) const {
    const cplx d = z0 - grid().center();
    const double limit = (1.0 - 2.0 * kFrameFraction) * grid().half_width();
    if (!(std::abs(d.real()) < limit && std::abs(d.imag()) < limit)) {
        std::ostringstream os;
        os << "probe " << z0.real() << (z0.imag() < 0 ? "" : "+") << z0.imag()
           << "i lies on the support-free frame (need |x|, |y| < " << limit << " from the center)";
        throw DegenerateProbe(os.str());
    }
    const double kappa = conditioning(z0);
    if (kappa > conditioning_bound_) {
        std::ostringstream os;
        os << "probe " << z0.real() << (z0.imag() < 0 ? "" : "+") << z0.imag() << "i has conditioning " << kappa
           << " above the bound " << conditioning_bound_;
        throw DegenerateProbe(os.str());
    }
}

cplx identity_lhs(const RecoveryProblem& problem, int j0, int k0, double h, cplx z0) {
    problem.check_probe(z0);
    PairEvaluator ev(problem, h, z0);
    return ev.evaluate(j0, k0);
}

double quadrature_noise_floor(const RecoveryProblem& problem, int j0, int k0, double h, cplx z0) {
    const RecoveryProblem amplitude(problem.L(), problem.L_tilde(), {z0}, {h}, RecoveryMode::amplitude_only,
                                    problem.solver(), problem.conditioning_bound());
    PairEvaluator ev(amplitude, h, z0);
    return DBL_EPSILON * ev.absolute_mass(j0, k0) / (kStationaryPhaseConstant * h);
}

cplx oscillatory_mean(const ScalarField& chi, const PhaseSpec& phase) {
    phase.validate(chi.grid());
    return integrate(phase.oscillation(chi.grid()) * chi) / phase.h;
}

Extraction stationary_phase_extract(std::span<const IdentitySample> samples) {
    if (samples.size() < 2) throw std::invalid_argument("stationary-phase extraction needs at least two h values");
    std::vector<IdentitySample> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.h < b.h; });
    for (const auto& s : sorted) {
        if (!(s.h > 0.0)) throw std::invalid_argument("stationary-phase extraction needs positive h");
    }
    const double h1 = sorted[0].h;
    const double h2 = sorted[1].h;
    if (!(h2 > h1)) throw std::invalid_argument("stationary-phase extraction needs distinct h values");
    const cplx v1 = sorted[0].value / (kStationaryPhaseConstant * h1);
    const cplx v2 = sorted[1].value / (kStationaryPhaseConstant * h2);
    return {h1, v1, std::abs(v1 - v2) * h1 / (h2 - h1)};
}

std::vector<std::pair<int, int>> recovery_order(int m) {
    std::vector<std::pair<int, int>> order;
    for (int level = 0; level <= 2 * (m - 1); ++level) {
        for (int j = 0; j < m; ++j) {
            const int k = level - j;
            if (k >= 0 && k < m) order.emplace_back(j, k);
        }
    }
    return order;
}

RecoveryReport recover_all(const RecoveryProblem& problem) {
    const int m = problem.order();
    const auto order = recovery_order(m);
    const auto& hs = problem.h_list();
    RecoveryReport report;
    report.m = m;

    for (const cplx z0 : problem.probes()) {
        std::string failure;
        std::string detail;
        try {
            problem.check_probe(z0);
        } catch (const DegenerateProbe& e) {
            failure = "degenerate_probe";
            detail = e.what();
        }
        if (!failure.empty()) {
            for (const auto& [j, k] : order) {
                for (const double h : hs) {
                    report.rows.push_back({m, j, k, z0, h, {kNaN, kNaN}, {kNaN, kNaN}, kNaN, kNaN, failure});
                }
                RecoverySummary s;
                s.j = j;
                s.k = k;
                s.z0 = z0;
                s.extraction = {hs.back(), {kNaN, kNaN}, kNaN};
                s.truth = {kNaN, kNaN};
                s.abs_err = s.rel_err = s.slope = kNaN;
                s.status = failure;
                s.detail = detail;
                report.summaries.push_back(s);
            }
            continue;
        }

        // recovered[(j,k)][h index]
        std::map<std::pair<int, int>, std::vector<cplx>> recovered;
        for (const auto& jk : order) recovered[jk].resize(hs.size());
        for (std::size_t hi = 0; hi < hs.size(); ++hi) {
            const double h = hs[hi];
            PairEvaluator ev(problem, h, z0);
            for (const auto& [j0, k0] : order) {
                const cplx s = ev.evaluate(j0, k0) / (kStationaryPhaseConstant * h);
                cplx known{};
                for (int j = 0; j <= j0; ++j) {
                    for (int k = 0; k <= k0; ++k) {
                        if (j == j0 && k == k0) continue;
                        const cplx weight = std::pow(std::conj(z0), k0 - k) / factorial(k0 - k) *
                                            std::pow(z0, j0 - j) / factorial(j0 - j);
                        known += sign_of(j) * recovered[{j, k}][hi] * weight;
                    }
                }
                recovered[{j0, k0}][hi] = sign_of(j0) * (s - known);
            }
        }

        for (const auto& [j, k] : order) {
            const cplx truth = interpolate(problem.difference(j, k), z0);
            std::vector<IdentitySample> samples;
            std::vector<double> errs;
            bool positive = true;
            for (std::size_t hi = 0; hi < hs.size(); ++hi) {
                const cplx value = recovered[{j, k}][hi];
                const double abs_err = std::abs(value - truth);
                report.rows.push_back({m, j, k, z0, hs[hi], value, truth, abs_err, relative(abs_err, truth), "ok"});
                samples.push_back({hs[hi], kStationaryPhaseConstant * hs[hi] * value});
                errs.push_back(abs_err);
                positive = positive && abs_err > 0.0;
            }
            RecoverySummary s;
            s.j = j;
            s.k = k;
            s.z0 = z0;
            s.truth = truth;
            if (samples.size() >= 2) {
                s.extraction = stationary_phase_extract(samples);
            } else {
                s.extraction = {hs.back(), recovered[{j, k}].back(), kNaN};
            }
            s.abs_err = std::abs(s.extraction.value - truth);
            s.rel_err = relative(s.abs_err, truth);
            s.slope = (positive && hs.size() >= 2) ? loglog_slope(hs, errs) : kNaN;
            report.summaries.push_back(s);
        }
    }
    return report;
}

} // namespace polycgo
