#include "polycgo/cgo.hpp"

#include "polycgo/cauchy.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace polycgo {

namespace {

double factorial(int k) {
    double r = 1.0;
    for (int i = 2; i <= k; ++i) r *= i;
    return r;
}

double euclid_norm(const ScalarField& f) {
    double total = 0.0;
    for (const cplx& v : f.values()) total += std::norm(v);
    return std::sqrt(total) * f.grid().spacing();
}

void require_prime(const PerturbedOperator& op, const char* where) {
    if (op.form() != CoefficientForm::prime) {
        throw std::invalid_argument(std::string(where) + " expects a prime-form operator");
    }
}

// Horner evaluation of sum_{j=0}^{m-1} (sign * inv)^{m-j} X_j for inv = d^{-1}.
ScalarField horner_d_inv(const std::vector<ScalarField>& xs, double sign) {
    const std::size_t m = xs.size();
    ScalarField acc = xs[0];
    for (std::size_t j = 1; j < m; ++j) acc = axpy(xs[j], sign, d_inv(acc));
    return sign * d_inv(acc);
}

} // namespace

AmplitudeSpec::AmplitudeSpec(Kind kind, int degree, ScalarField field)
    : kind_(kind), degree_(degree), field_(std::move(field)) {}

AmplitudeSpec AmplitudeSpec::monomial(const ComplexGrid& grid, int k) {
    if (k < 0) throw std::invalid_argument("monomial amplitude degree must be >= 0");
    const double norm = factorial(k);
    return {Kind::monomial, k, ScalarField::sample(grid, [k, norm](cplx z) { return std::pow(std::conj(z), k) / norm; })};
}

AmplitudeSpec AmplitudeSpec::custom(ScalarField field) { return {Kind::custom, -1, std::move(field)}; }

ScalarField AmplitudeSpec::dbar_pow(int q) const {
    if (q < 0) throw std::invalid_argument("derivative order must be >= 0");
    if (q == 0) return field_;
    if (kind_ == Kind::monomial) {
        if (q > degree_) return ScalarField::zeros(field_.grid());
        const int k = degree_ - q;
        const double norm = factorial(k);
        return ScalarField::sample(field_.grid(), [k, norm](cplx z) { return std::pow(std::conj(z), k) / norm; });
    }
    return wirtinger_dbar_pow(field_, q);
}

double AmplitudeSpec::admissibility_defect(int m) const {
    return norm_lp(wirtinger_dbar_pow(field_, m), kInfinity, Region::central(field_.grid(), 0.9));
}

ScalarField apply_S_h(const PerturbedOperator& prime_op, const PhaseSpec& phase, const ScalarField& v) {
    require_prime(prime_op, "apply_S_h");
    require_same_grid(prime_op.coeff(0, 0), v, "apply_S_h");
    const auto& grid = v.grid();
    phase.validate(grid);
    const int m = prime_op.order();
    if (prime_op.is_unperturbed() || v.is_zero()) return ScalarField::zeros(grid);

    const ScalarField forward = phase.oscillation(grid);
    // levels[i] = dbar^{-i}(e^{(conj Phi - Phi)/h} v), i = 1..m
    std::vector<ScalarField> levels;
    levels.push_back(phase.counter_oscillation(grid) * v);
    for (int i = 1; i <= m; ++i) levels.push_back(dbar_inv(levels.back()));

    std::vector<ScalarField> xs;
    for (int j = 0; j < m; ++j) {
        ScalarField x = ScalarField::zeros(grid);
        for (int k = 0; k < m; ++k) {
            const ScalarField& a = prime_op.coeff(j, k);
            if (!a.is_zero()) x = x + a * levels[static_cast<std::size_t>(m - k)];
        }
        xs.push_back(forward * x);
    }
    return -horner_d_inv(xs, 1.0);
}

ScalarField apply_S_h_adjoint(const PerturbedOperator& prime_op, const PhaseSpec& phase, const ScalarField& v) {
    require_prime(prime_op, "apply_S_h_adjoint");
    require_same_grid(prime_op.coeff(0, 0), v, "apply_S_h_adjoint");
    const auto& grid = v.grid();
    phase.validate(grid);
    const int m = prime_op.order();
    if (prime_op.is_unperturbed() || v.is_zero()) return ScalarField::zeros(grid);

    // (d^{-1})^* = -dbar^{-1} and (dbar^{-1})^* = -d^{-1} on the grid.
    std::vector<ScalarField> levels; // (-dbar^{-1})^i v
    levels.push_back(v);
    for (int i = 1; i <= m; ++i) levels.push_back(-dbar_inv(levels.back()));

    const ScalarField backward = phase.counter_oscillation(grid);
    std::vector<ScalarField> zs;
    for (int k = 0; k < m; ++k) {
        ScalarField z = ScalarField::zeros(grid);
        for (int j = 0; j < m; ++j) {
            const ScalarField& a = prime_op.coeff(j, k);
            if (!a.is_zero()) z = z + a.conj() * levels[static_cast<std::size_t>(m - j)];
        }
        zs.push_back(backward * z);
    }
    // sum_k (-d^{-1})^{m-k} Z_k, then the outer multiplier and sign.
    return -(phase.oscillation(grid) * horner_d_inv(zs, -1.0));
}

ScalarField build_w(const PerturbedOperator& prime_op, const PhaseSpec& phase, const AmplitudeSpec& a) {
    require_prime(prime_op, "build_w");
    require_same_grid(prime_op.coeff(0, 0), a.field(), "build_w");
    const auto& grid = a.field().grid();
    phase.validate(grid);
    const int m = prime_op.order();
    if (prime_op.is_unperturbed()) return ScalarField::zeros(grid);

    std::vector<ScalarField> dbar_a;
    for (int k = 0; k < m; ++k) dbar_a.push_back(a.dbar_pow(k));

    const ScalarField forward = phase.oscillation(grid);
    std::vector<ScalarField> xs;
    for (int j = 0; j < m; ++j) {
        ScalarField x = ScalarField::zeros(grid);
        for (int k = 0; k < m; ++k) {
            const ScalarField& c = prime_op.coeff(j, k);
            if (!c.is_zero() && !dbar_a[static_cast<std::size_t>(k)].is_zero()) {
                x = x + c * dbar_a[static_cast<std::size_t>(k)];
            }
        }
        xs.push_back(forward * x);
    }
    return -horner_d_inv(xs, 1.0);
}

NeumannResult solve_g(const PerturbedOperator& prime_op, const PhaseSpec& phase, const AmplitudeSpec& a,
                      const NeumannOptions& options) {
    require_prime(prime_op, "solve_g");
    ScalarField w = build_w(prime_op, phase, a);
    NeumannResult result{w, w, 1, {}, 0.0};
    const double w_norm = norm_lp(result.w, 2.0);
    result.term_norms.push_back(w_norm);
    if (w_norm == 0.0) return result;

    ScalarField term = result.w;
    int non_decreasing = 0;
    while (result.term_norms.back() > options.tol * w_norm) {
        if (result.terms_used >= options.max_terms) {
            std::ostringstream os;
            os << "Neumann series did not reach tol " << options.tol << " within " << options.max_terms
               << " terms (h = " << phase.h << ", last relative term " << result.term_norms.back() / w_norm << ")";
            throw MaxTermsExceeded(os.str());
        }
        term = apply_S_h(prime_op, phase, term);
        const double tn = norm_lp(term, 2.0);
        non_decreasing = (tn >= result.term_norms.back()) ? non_decreasing + 1 : 0;
        result.term_norms.push_back(tn);
        result.g = result.g + term;
        ++result.terms_used;
        if (non_decreasing >= 3) {
            std::ostringstream os;
            os << "Neumann iterates stopped contracting at h = " << phase.h << " (term norms non-decreasing for 3 terms)";
            throw NonContraction(os.str());
        }
    }

    result.residual = norm_lp(result.g - apply_S_h(prime_op, phase, result.g) - result.w, 2.0);
    if (result.residual > 2.0 * options.tol * w_norm) {
        std::ostringstream os;
        os << "Neumann residual " << result.residual << " exceeds 2 tol ||w|| = " << 2.0 * options.tol * w_norm
           << " at h = " << phase.h;
        throw NonContraction(os.str());
    }
    return result;
}

ScalarField conjugated_apply(const PerturbedOperator& op, const PhaseSpec& phase, const AmplitudeSpec& a,
                             const ScalarField& r) {
    const PerturbedOperator standard = to_form(op, CoefficientForm::standard);
    const auto& grid = r.grid();
    const int m = standard.order();
    const ScalarField slope = ScalarField::sample(grid, [&](cplx z) { return phase.phi_prime(z) / phase.h; });
    auto twisted_d = [&](const ScalarField& x) { return wirtinger_d(x) + slope * x; };

    // dbar^k F with the amplitude part exact.
    std::vector<ScalarField> dbar_f;
    ScalarField dbar_r = r;
    for (int k = 0; k <= m; ++k) {
        dbar_f.push_back(a.dbar_pow(k) + dbar_r);
        if (k < m) dbar_r = wirtinger_dbar(dbar_r);
    }

    ScalarField out = dbar_f[static_cast<std::size_t>(m)];
    for (int q = 0; q < m; ++q) out = twisted_d(out);
    for (int k = 0; k < m; ++k) {
        ScalarField x = dbar_f[static_cast<std::size_t>(k)];
        for (int j = 0; j < m; ++j) {
            if (!standard.coeff(j, k).is_zero()) out = out + standard.coeff(j, k) * x;
            if (j + 1 < m) x = twisted_d(x);
        }
    }
    return out;
}

CGOSolution assemble_cgo(const PerturbedOperator& op, const PhaseSpec& phase, const AmplitudeSpec& a,
                         const NeumannOptions& options) {
    require_same_grid(op.coeff(0, 0), a.field(), "assemble_cgo");
    const auto& grid = a.field().grid();
    phase.validate(grid);
    const int m = op.order();
    const PerturbedOperator prime = to_form(op, CoefficientForm::prime);

    NeumannResult solved = solve_g(prime, phase, a, options);
    ScalarField r = solved.g.is_zero() ? ScalarField::zeros(grid)
                                       : dbar_inv_pow(phase.counter_oscillation(grid) * solved.g, m);
    const ScalarField f = a.field() + r;
    const ScalarField carrier = ScalarField::sample(grid, [&](cplx z) { return std::exp(phase.phi(z) / phase.h); });
    ScalarField u = carrier * f;

    // Residual on the central sub-square: |L u| = |e^{Phi/h}| |conjugated residual|.
    const ScalarField twisted = conjugated_apply(op, phase, a, r);
    const Region region = Region::central(grid, 0.9);
    const auto modulus = phase.carrier_modulus(grid);
    double res2 = 0.0;
    double u2 = 0.0;
    for (std::size_t j = region.lo; j < region.hi; ++j) {
        for (std::size_t i = region.lo; i < region.hi; ++i) {
            const std::size_t k = grid.index(i, j);
            res2 += std::norm(modulus[k] * twisted.at(k));
            u2 += std::norm(u.at(k));
        }
    }
    const double cell = grid.spacing() * grid.spacing();

    CGODiagnostics diag;
    diag.w_l2 = norm_lp(solved.w, 2.0);
    diag.g_l2 = norm_lp(solved.g, 2.0);
    diag.r_hm = norm_hm(r, m, region);
    diag.residual_l2 = std::sqrt(res2 * cell);
    diag.residual_rel = u2 > 0.0 ? std::sqrt(res2 / u2) : 0.0;
    diag.solve_residual = solved.residual;
    diag.neumann_terms = solved.terms_used;

    return {m, phase, a, std::move(solved.g), std::move(r), std::move(u), diag};
}

CGOSolution assemble_adjoint_cgo(const PerturbedOperator& op, const PhaseSpec& phase, const AmplitudeSpec& b,
                                 const NeumannOptions& options) {
    return assemble_cgo(adjoint(op), phase.conjugate_carrier(), b, options);
}

NormProbeTable operator_norm_probe(const PerturbedOperator& op, std::span<const PhaseSpec> phases, std::uint64_t seed,
                                   int iterations) {
    const PerturbedOperator prime = to_form(op, CoefficientForm::prime);
    const auto& grid = prime.grid();
    for (const auto& p : phases) p.validate(grid);

    // Random smooth start: a handful of low Fourier modes.
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<int> wave(-3, 3);
    struct Mode {
        cplx coeff;
        double kx, ky;
    };
    std::vector<Mode> modes;
    const double base = std::numbers::pi / grid.half_width();
    for (int q = 0; q < 8; ++q) {
        const cplx c(normal(rng), normal(rng));
        const double kx = base * wave(rng);
        const double ky = base * wave(rng);
        modes.push_back({c, kx, ky});
    }
    const ScalarField start = ScalarField::sample(grid, [&](cplx z) {
        const cplx d = z - grid.center();
        cplx acc{};
        for (const auto& md : modes) acc += md.coeff * std::polar(1.0, md.kx * d.real() + md.ky * d.imag());
        return acc;
    });

    NormProbeTable table;
    std::vector<double> hs, norms;
    for (const auto& phase : phases) {
        double estimate = 0.0;
        if (!prime.is_unperturbed()) {
            ScalarField v = (1.0 / euclid_norm(start)) * start;
            for (int it = 0; it < iterations; ++it) {
                ScalarField next = apply_S_h_adjoint(prime, phase, apply_S_h(prime, phase, v));
                const double nn = euclid_norm(next);
                if (nn == 0.0) break;
                v = (1.0 / nn) * next;
            }
            estimate = euclid_norm(apply_S_h(prime, phase, v)) / euclid_norm(v);
        }
        table.rows.push_back({phase.h, estimate});
        hs.push_back(phase.h);
        norms.push_back(estimate);
    }
    table.slope = hs.size() >= 2 ? loglog_slope(hs, norms) : std::nan("");
    return table;
}

} // namespace polycgo
