#pragma once

#include "polycgo/grid.hpp"

#include <memory>
#include <stdexcept>
#include <string>

namespace polycgo {

/// Syntax error in a coefficient expression; position() is the 0-based
/// character offset.
class ExprError : public std::runtime_error {
public:
    ExprError(const std::string& message, std::size_t position);
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

/// Parsed coefficient expression in the variables z and zbar.
///
/// Grammar:
///   expr    := term (('+' | '-') term)*
///   term    := unary (('*' | '/') unary)*
///   unary   := ('-' | '+') unary | power
///   power   := primary ('^' unary)?          exponent: constant integer
///   primary := number ['i'] | 'i' | 'z' | 'zbar' | 'pi'
///            | name '(' expr (',' expr)* ')' | '(' expr ')'
///
/// Functions: exp, re, im, conj, abs, bump(cx, cy, radius, amp) and
/// gauss(cx, cy, sigma, amp). bump is amp * exp(1 - 1/(1 - r^2/radius^2)) for
/// r = |z - (cx + i cy)| < radius and exactly 0 elsewhere; gauss is
/// amp * exp(-r^2/sigma^2). Parameters of bump and gauss must be real constants.
class Expression {
public:
    struct Node;

    static Expression parse(const std::string& text);

    cplx evaluate(cplx z) const;
    ScalarField sample(const ComplexGrid& grid) const;
    /// True when the expression is the literal constant 0 after folding.
    bool is_zero_constant() const;
    const std::string& text() const { return text_; }

private:
    Expression(std::string text, std::shared_ptr<const Node> root);

    std::string text_;
    std::shared_ptr<const Node> root_;
};

} // namespace polycgo
