#pragma once

#include "polycgo/grid.hpp"
#include "polycgo/operator.hpp"
#include "polycgo/phase.hpp"

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace polycgo {

/// Base for numerical failures of the Neumann solver.
class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Neumann term norms stopped decreasing (h too large for a contraction).
class NonContraction : public NumericalFailure {
public:
    using NumericalFailure::NumericalFailure;
};

class MaxTermsExceeded : public NumericalFailure {
public:
    using NumericalFailure::NumericalFailure;
};

/// Amplitude a with dbar^m a = 0. Monomials z̄^k/k! (global coordinate)
/// carry exact derivatives; custom amplitudes fall back to stencils.
class AmplitudeSpec {
public:
    enum class Kind { monomial, custom };

    static AmplitudeSpec monomial(const ComplexGrid& grid, int k);
    static AmplitudeSpec custom(ScalarField field);

    Kind kind() const { return kind_; }
    int degree() const { return degree_; }
    const ScalarField& field() const { return field_; }

    /// dbar^q a; identically zero for monomials with q > k.
    ScalarField dbar_pow(int q) const;
    /// max |dbar^m a| over the interior, by stencils.
    double admissibility_defect(int m) const;

private:
    AmplitudeSpec(Kind kind, int degree, ScalarField field);

    Kind kind_;
    int degree_;
    ScalarField field_;
};

struct NeumannOptions {
    double tol = 1e-10;
    int max_terms = 50;
};

struct CGODiagnostics {
    double w_l2 = 0.0;
    double g_l2 = 0.0;
    /// ||r||_{H^m} on the central 90% sub-square.
    double r_hm = 0.0;
    /// ||L u||_{L^2} on the central 90% sub-square (one-sided stencils excluded).
    double residual_l2 = 0.0;
    /// residual_l2 / ||u||_{L^2} on the same sub-square.
    double residual_rel = 0.0;
    /// ||(I - S_h) g - w||_{L^2}, checked after the series stops.
    double solve_residual = 0.0;
    int neumann_terms = 0;
};

struct CGOSolution {
    int m = 2;
    PhaseSpec phase;
    AmplitudeSpec amplitude;
    ScalarField g;
    ScalarField r;
    ScalarField u;
    CGODiagnostics diagnostics;
};

/// S_h v = -sum_{j,k} d^{j-m}(e^{(Phi - conj Phi)/h} A'_{j,k} dbar^{k-m}(e^{(conj Phi - Phi)/h} v)).
ScalarField apply_S_h(const PerturbedOperator& prime_op, const PhaseSpec& phase, const ScalarField& v);
/// Adjoint of S_h for the uniform-weight grid inner product.
ScalarField apply_S_h_adjoint(const PerturbedOperator& prime_op, const PhaseSpec& phase, const ScalarField& v);
/// w = -sum_{j,k} d^{j-m}(e^{(Phi - conj Phi)/h} A'_{j,k} dbar^k a).
ScalarField build_w(const PerturbedOperator& prime_op, const PhaseSpec& phase, const AmplitudeSpec& a);

struct NeumannResult {
    ScalarField g;
    ScalarField w;
    int terms_used = 0;
    std::vector<double> term_norms;
    double residual = 0.0;
};

/// g = sum_i S_h^i w, truncated once a term falls below tol * ||w||.
NeumannResult solve_g(const PerturbedOperator& prime_op, const PhaseSpec& phase, const AmplitudeSpec& a,
                      const NeumannOptions& options = {});

/// u = e^{Phi/h}(a + r_h) with r_h = dbar^{-m}(e^{(conj Phi - Phi)/h} g).
/// Accepts either coefficient form.
CGOSolution assemble_cgo(const PerturbedOperator& op, const PhaseSpec& phase, const AmplitudeSpec& a,
                         const NeumannOptions& options = {});

/// v = e^{-Phi/h}(b + s_h) solving L* v = 0: assemble_cgo on adjoint(op)
/// with the carrier flipped.
CGOSolution assemble_adjoint_cgo(const PerturbedOperator& op, const PhaseSpec& phase, const AmplitudeSpec& b,
                                 const NeumannOptions& options = {});

/// e^{-Phi/h} L(e^{Phi/h} F) for F = a + r, with the carrier's derivative
/// applied exactly: d(e^{Phi/h} X) = e^{Phi/h}(d + Phi'/h) X.
ScalarField conjugated_apply(const PerturbedOperator& op, const PhaseSpec& phase, const AmplitudeSpec& a,
                             const ScalarField& r);

struct NormProbeRow {
    double h = 0.0;
    double norm = 0.0;
};

struct NormProbeTable {
    std::vector<NormProbeRow> rows;
    double slope = 0.0;
};

/// Power iteration on S_h^* S_h from a seeded random smooth start; reports
/// ||S_h v|| / ||v|| for the final iterate at each phase.
NormProbeTable operator_norm_probe(const PerturbedOperator& op, std::span<const PhaseSpec> phases,
                                   std::uint64_t seed = 0, int iterations = 20);

} // namespace polycgo
