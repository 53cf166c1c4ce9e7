#pragma once

#include "polycgo/grid.hpp"

#include <vector>

namespace polycgo {

/// Which coefficient table an operator carries.
///  standard: L u = d^m dbar^m u + sum A_{j,k} d^j dbar^k u
///  prime:    L u = d^m dbar^m u + sum d^j (A'_{j,k} dbar^k u)
enum class CoefficientForm { standard, prime };

/// Perturbed polyharmonic operator of order 2m with a total (j, k) table,
/// 0 <= j, k <= m - 1, of coefficient fields on one grid.
class PerturbedOperator {
public:
    /// `coeffs` is row-major in (j, k): coeffs[j * m + k].
    PerturbedOperator(int m, std::vector<ScalarField> coeffs, CoefficientForm form);

    static PerturbedOperator unperturbed(int m, const ComplexGrid& grid, CoefficientForm form = CoefficientForm::standard);

    int order() const { return m_; }
    CoefficientForm form() const { return form_; }
    const ComplexGrid& grid() const { return coeffs_.front().grid(); }
    const ScalarField& coeff(int j, int k) const { return coeffs_.at(static_cast<std::size_t>(j * m_ + k)); }
    const std::vector<ScalarField>& coeffs() const { return coeffs_; }

    /// True when every coefficient is identically zero.
    bool is_unperturbed() const;

private:
    int m_;
    std::vector<ScalarField> coeffs_;
    CoefficientForm form_;
};

/// L u by repeated Wirtinger stencils, honouring the operator's form.
ScalarField apply(const PerturbedOperator& op, const ScalarField& u);

/// Solves A_{j,k} = sum_{l=j}^{m-1} C(l, j) d^{l-j} A'_{l,k} top-down for A'.
PerturbedOperator a_to_aprime(const PerturbedOperator& op);
/// Evaluates the same binomial-derivative sum forward.
PerturbedOperator aprime_to_a(const PerturbedOperator& op);
/// Either conversion as needed, or a copy when already in `form`.
PerturbedOperator to_form(const PerturbedOperator& op, CoefficientForm form);

/// Formal adjoint with respect to int u conj(v), in standard normal form.
/// Each term A d^j dbar^k contributes (-1)^{j+k} d^k dbar^j (conj(A) v),
/// Leibniz-expanded into sum B_{a,b} d^a dbar^b v.
PerturbedOperator adjoint(const PerturbedOperator& op);

/// One Leibniz term of the adjoint expansion: B_{a,b} receives
/// sign * C(k, a) C(j, b) * d^{k-a} dbar^{j-b} conj(A_{j,k}).
struct AdjointTerm {
    int source_j, source_k;
    int target_a, target_b;
    int d_order, dbar_order;
    double weight;
};

/// Symbolic expansion used by adjoint(); exposed for inspection and tests.
std::vector<AdjointTerm> adjoint_expansion(int m);

double binomial(int n, int k);

} // namespace polycgo
