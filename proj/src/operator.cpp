#include "polycgo/operator.hpp"

#include <stdexcept>
#include <string>

namespace polycgo {

double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
    return r;
}

PerturbedOperator::PerturbedOperator(int m, std::vector<ScalarField> coeffs, CoefficientForm form)
    : m_(m), coeffs_(std::move(coeffs)), form_(form) {
    if (m < 2) throw std::invalid_argument("operator order m must be >= 2, got " + std::to_string(m));
    if (coeffs_.size() != static_cast<std::size_t>(m * m)) {
        throw std::invalid_argument("coefficient table must hold m*m = " + std::to_string(m * m) + " fields");
    }
    for (const auto& c : coeffs_) require_same_grid(coeffs_.front(), c, "PerturbedOperator");
}

PerturbedOperator PerturbedOperator::unperturbed(int m, const ComplexGrid& grid, CoefficientForm form) {
    if (m < 2) throw std::invalid_argument("operator order m must be >= 2, got " + std::to_string(m));
    return {m, std::vector<ScalarField>(static_cast<std::size_t>(m * m), ScalarField::zeros(grid)), form};
}

bool PerturbedOperator::is_unperturbed() const {
    for (const auto& c : coeffs_) {
        if (!c.is_zero()) return false;
    }
    return true;
}

ScalarField apply(const PerturbedOperator& op, const ScalarField& u) {
    require_same_grid(op.coeff(0, 0), u, "apply");
    const int m = op.order();

    std::vector<ScalarField> dbar_levels; // dbar^k u, k = 0..m
    dbar_levels.push_back(u);
    for (int k = 1; k <= m; ++k) dbar_levels.push_back(wirtinger_dbar(dbar_levels.back()));

    ScalarField out = wirtinger_d_pow(dbar_levels[static_cast<std::size_t>(m)], m);
    if (op.form() == CoefficientForm::standard) {
        for (int k = 0; k < m; ++k) {
            ScalarField dj = dbar_levels[static_cast<std::size_t>(k)];
            for (int j = 0; j < m; ++j) {
                if (!op.coeff(j, k).is_zero()) out = out + op.coeff(j, k) * dj;
                if (j + 1 < m) dj = wirtinger_d(dj);
            }
        }
    } else {
        // sum_j d^j X_j with X_j = sum_k A'_{j,k} dbar^k u, by Horner in d.
        ScalarField acc = ScalarField::zeros(u.grid());
        for (int j = m - 1; j >= 0; --j) {
            ScalarField xj = ScalarField::zeros(u.grid());
            for (int k = 0; k < m; ++k) {
                if (!op.coeff(j, k).is_zero()) xj = xj + op.coeff(j, k) * dbar_levels[static_cast<std::size_t>(k)];
            }
            acc = (j == m - 1) ? xj : xj + wirtinger_d(acc);
        }
        out = out + acc;
    }
    return out;
}

PerturbedOperator a_to_aprime(const PerturbedOperator& op) {
    if (op.form() != CoefficientForm::standard) throw std::invalid_argument("a_to_aprime expects a standard-form operator");
    const int m = op.order();
    std::vector<ScalarField> prime(op.coeffs());
    for (int k = 0; k < m; ++k) {
        for (int j = m - 2; j >= 0; --j) {
            ScalarField value = op.coeff(j, k);
            for (int l = j + 1; l < m; ++l) {
                const ScalarField& upper = prime[static_cast<std::size_t>(l * m + k)];
                if (upper.is_zero()) continue;
                value = axpy(value, -binomial(l, j), wirtinger_d_pow(upper, l - j));
            }
            prime[static_cast<std::size_t>(j * m + k)] = std::move(value);
        }
    }
    return {m, std::move(prime), CoefficientForm::prime};
}

PerturbedOperator aprime_to_a(const PerturbedOperator& op) {
    if (op.form() != CoefficientForm::prime) throw std::invalid_argument("aprime_to_a expects a prime-form operator");
    const int m = op.order();
    std::vector<ScalarField> standard(op.coeffs());
    for (int k = 0; k < m; ++k) {
        for (int j = 0; j < m - 1; ++j) {
            ScalarField value = op.coeff(j, k);
            for (int l = j + 1; l < m; ++l) {
                if (op.coeff(l, k).is_zero()) continue;
                value = axpy(value, binomial(l, j), wirtinger_d_pow(op.coeff(l, k), l - j));
            }
            standard[static_cast<std::size_t>(j * m + k)] = std::move(value);
        }
    }
    return {m, std::move(standard), CoefficientForm::standard};
}

PerturbedOperator to_form(const PerturbedOperator& op, CoefficientForm form) {
    if (op.form() == form) return op;
    return form == CoefficientForm::prime ? a_to_aprime(op) : aprime_to_a(op);
}

std::vector<AdjointTerm> adjoint_expansion(int m) {
    std::vector<AdjointTerm> terms;
    for (int j = 0; j < m; ++j) {
        for (int k = 0; k < m; ++k) {
            const double sign = ((j + k) % 2 == 0) ? 1.0 : -1.0;
            // d^k dbar^j (conj(A) v) = sum_{a<=k, b<=j} C(k,a) C(j,b) d^{k-a} dbar^{j-b} conj(A) * d^a dbar^b v
            for (int a = 0; a <= k; ++a) {
                for (int b = 0; b <= j; ++b) {
                    terms.push_back({j, k, a, b, k - a, j - b, sign * binomial(k, a) * binomial(j, b)});
                }
            }
        }
    }
    return terms;
}

PerturbedOperator adjoint(const PerturbedOperator& op) {
    const PerturbedOperator standard = to_form(op, CoefficientForm::standard);
    const int m = standard.order();
    std::vector<ScalarField> out(static_cast<std::size_t>(m * m), ScalarField::zeros(standard.grid()));
    for (const AdjointTerm& t : adjoint_expansion(m)) {
        const ScalarField& a = standard.coeff(t.source_j, t.source_k);
        if (a.is_zero()) continue;
        const ScalarField derived = wirtinger_dbar_pow(wirtinger_d_pow(a.conj(), t.d_order), t.dbar_order);
        auto& slot = out[static_cast<std::size_t>(t.target_a * m + t.target_b)];
        slot = axpy(slot, t.weight, derived);
    }
    return {m, std::move(out), CoefficientForm::standard};
}

} // namespace polycgo
