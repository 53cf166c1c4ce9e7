#pragma once

#include "polycgo/cgo.hpp"
#include "polycgo/grid.hpp"
#include "polycgo/operator.hpp"

#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace polycgo {

/// Probe outside the support-free margin, or too ill-conditioned for the
/// triangular solve.
class DegenerateProbe : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class RecoveryMode {
    amplitude_only, ///< u = e^{Phi/h} a, v = e^{-Phi/h} b
    full_cgo,       ///< u, v from assemble_cgo / assemble_adjoint_cgo
};

/// Stationary-phase constant for the phase 2 Re((z - z0)^2) / h:
/// int e^{(Phi - conj Phi)/h} F ~ (pi/2) h F(z0).
inline constexpr double kStationaryPhaseConstant = std::numbers::pi / 2.0;

/// Fraction of the square (per side) left as the support-free frame.
inline constexpr double kFrameFraction = 0.05;

class RecoveryProblem {
public:
    /// Throws std::invalid_argument when the operators disagree in order or
    /// grid, when a coefficient difference does not vanish on the outer frame,
    /// or when h_list is not strictly decreasing and positive; throws
    /// CouplingViolation when some h is unresolved.
    RecoveryProblem(PerturbedOperator L, PerturbedOperator L_tilde, std::vector<cplx> probes,
                    std::vector<double> h_list, RecoveryMode mode, NeumannOptions solver = {},
                    double conditioning_bound = 1e3);

    int order() const { return L_.order(); }
    const ComplexGrid& grid() const { return L_.grid(); }
    const PerturbedOperator& L() const { return L_; }
    const PerturbedOperator& L_tilde() const { return L_tilde_; }
    const std::vector<cplx>& probes() const { return probes_; }
    const std::vector<double>& h_list() const { return h_list_; }
    RecoveryMode mode() const { return mode_; }
    const NeumannOptions& solver() const { return solver_; }
    double conditioning_bound() const { return conditioning_bound_; }

    /// B_{j,k} = A~'_{j,k} - A'_{j,k}.
    const ScalarField& difference(int j, int k) const { return differences_.at(static_cast<std::size_t>(j * order() + k)); }
    bool all_differences_zero() const;

    /// Throws DegenerateProbe when z0 lies on the outer frame or when the
    /// monomial weights at z0 exceed the conditioning bound.
    void check_probe(cplx z0) const;
    /// (sum_{p<m} |z0|^p / p!)^2, the growth bound of the triangular weights.
    double conditioning(cplx z0) const;

private:
    PerturbedOperator L_;
    PerturbedOperator L_tilde_;
    std::vector<ScalarField> differences_;
    std::vector<cplx> probes_;
    std::vector<double> h_list_;
    RecoveryMode mode_;
    NeumannOptions solver_;
    double conditioning_bound_;
};

/// sum_{j,k} (-1)^j int B_{j,k} dbar^k(a part) d^j(conj b part) e^{(Phi - conj Phi)/h}
/// with a = zbar^{k0}/k0!, b = zbar^{j0}/j0!.
cplx identity_lhs(const RecoveryProblem& problem, int j0, int k0, double h, cplx z0);

/// Rounding-scale magnitude of identity_lhs / (C h): machine epsilon times the
/// quadrature sum of |dbar^k a * d^j conj(b)| over all (j, k) with unit
/// coefficient weights, divided by C h. Positive even when every B vanishes.
double quadrature_noise_floor(const RecoveryProblem& problem, int j0, int k0, double h, cplx z0);

/// (1/h) int e^{(Phi - conj Phi)/h} chi, which tends to C chi(z0) as h -> 0.
cplx oscillatory_mean(const ScalarField& chi, const PhaseSpec& phase);

struct IdentitySample {
    double h = 0.0;
    cplx value{};
};

struct Extraction {
    double h = 0.0;
    cplx value{};
    /// |v(h1) - v(h2)| h1 / (h2 - h1) for the two smallest h, assuming O(h) error.
    double error_estimate = 0.0;
};

/// value(h) / (C h) at the smallest h. Throws std::invalid_argument with fewer
/// than two samples.
Extraction stationary_phase_extract(std::span<const IdentitySample> samples);

struct RecoveryRow {
    int m = 0;
    int j = 0;
    int k = 0;
    cplx z0{};
    double h = 0.0;
    cplx extracted{};
    cplx truth{};
    double abs_err = 0.0;
    /// abs_err / |truth|, or abs_err when the truth vanishes.
    double rel_err = 0.0;
    std::string status = "ok";
};

struct RecoverySummary {
    int j = 0;
    int k = 0;
    cplx z0{};
    Extraction extraction;
    cplx truth{};
    double abs_err = 0.0;
    double rel_err = 0.0;
    /// Log-log slope of abs_err against h; NaN when some error is 0.
    double slope = 0.0;
    std::string status = "ok";
    /// Human-readable reason when status is not "ok".
    std::string detail;
};

struct RecoveryReport {
    int m = 0;
    std::vector<RecoveryRow> rows;
    std::vector<RecoverySummary> summaries;
};

/// (j0, k0) pairs in increasing j0 + k0, ties broken by j0.
std::vector<std::pair<int, int>> recovery_order(int m);

/// Sequential triangular recovery at every probe and h.
RecoveryReport recover_all(const RecoveryProblem& problem);

} // namespace polycgo
