#include "polycgo/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <vector>

namespace polycgo {

ExprError::ExprError(const std::string& message, std::size_t position)
    : std::runtime_error(message + " at position " + std::to_string(position)), position_(position) {}

struct Expression::Node {
    enum class Kind { constant, z, zbar, add, sub, mul, div, neg, pow, exp, re, im, conj, abs, bump, gauss };

    Kind kind = Kind::constant;
    cplx value{};
    int exponent = 0;
    std::vector<std::shared_ptr<const Node>> args;
    // bump / gauss: center, radius (or sigma), amplitude.
    cplx center{};
    double scale = 1.0;
    cplx amp{};

    cplx eval(cplx z) const {
        switch (kind) {
        case Kind::constant: return value;
        case Kind::z: return z;
        case Kind::zbar: return std::conj(z);
        case Kind::add: return args[0]->eval(z) + args[1]->eval(z);
        case Kind::sub: return args[0]->eval(z) - args[1]->eval(z);
        case Kind::mul: return args[0]->eval(z) * args[1]->eval(z);
        case Kind::div: return args[0]->eval(z) / args[1]->eval(z);
        case Kind::neg: return -args[0]->eval(z);
        case Kind::pow: return ipow(args[0]->eval(z), exponent);
        case Kind::exp: return std::exp(args[0]->eval(z));
        case Kind::re: return args[0]->eval(z).real();
        case Kind::im: return args[0]->eval(z).imag();
        case Kind::conj: return std::conj(args[0]->eval(z));
        case Kind::abs: return std::abs(args[0]->eval(z));
        case Kind::bump: {
            const double t = std::norm(z - center) / (scale * scale);
            if (t >= 1.0) return {};
            return amp * std::exp(1.0 - 1.0 / (1.0 - t));
        }
        case Kind::gauss: return amp * std::exp(-std::norm(z - center) / (scale * scale));
        }
        return {};
    }

    static cplx ipow(cplx base, int e) {
        if (e < 0) return cplx(1.0) / ipow(base, -e);
        cplx result(1.0);
        while (e > 0) {
            if (e & 1) result *= base;
            base *= base;
            e >>= 1;
        }
        return result;
    }

    bool is_constant() const { return kind == Kind::constant; }
};

namespace {

using Node = Expression::Node;
using NodePtr = std::shared_ptr<const Node>;

NodePtr make_constant(cplx v) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::constant;
    n->value = v;
    return n;
}

// Builds a node and folds it to a constant when all operands are constant.
NodePtr make(Node::Kind kind, std::vector<NodePtr> args, int exponent = 0) {
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->args = std::move(args);
    n->exponent = exponent;
    bool constant = true;
    for (const auto& a : n->args) constant = constant && a->is_constant();
    if (constant) return make_constant(n->eval(cplx{}));
    return n;
}

class Parser {
public:
    explicit Parser(const std::string& text) : s_(text) {}

    NodePtr parse() {
        NodePtr e = expr();
        skip();
        if (pos_ != s_.size()) fail(std::string("unexpected '") + s_[pos_] + "'");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const { throw ExprError(msg, pos_); }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) {
            if (pos_ >= s_.size()) fail(std::string("expected '") + c + "' but the expression ended");
            fail(std::string("expected '") + c + "'");
        }
    }

    NodePtr expr() {
        NodePtr lhs = term();
        for (;;) {
            if (accept('+')) {
                lhs = make(Node::Kind::add, {lhs, term()});
            } else if (accept('-')) {
                lhs = make(Node::Kind::sub, {lhs, term()});
            } else {
                return lhs;
            }
        }
    }

    NodePtr term() {
        NodePtr lhs = unary();
        for (;;) {
            if (accept('*')) {
                lhs = make(Node::Kind::mul, {lhs, unary()});
            } else if (accept('/')) {
                lhs = make(Node::Kind::div, {lhs, unary()});
            } else {
                return lhs;
            }
        }
    }

    NodePtr unary() {
        if (accept('-')) return make(Node::Kind::neg, {unary()});
        if (accept('+')) return unary();
        return power();
    }

    NodePtr power() {
        NodePtr base = primary();
        if (!accept('^')) return base;
        const std::size_t at = pos_;
        NodePtr e = unary();
        if (!e->is_constant()) throw ExprError("exponent must be a constant integer", at);
        const cplx v = e->value;
        if (v.imag() != 0.0 || v.real() != std::round(v.real()) || std::abs(v.real()) > 1024.0) {
            throw ExprError("exponent must be a constant integer", at);
        }
        return make(Node::Kind::pow, {base}, static_cast<int>(v.real()));
    }

    NodePtr primary() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end of expression");
        const char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (accept('(')) {
            NodePtr e = expr();
            expect(')');
            return e;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return name();
        fail(std::string("unexpected '") + c + "'");
    }

    NodePtr number() {
        const char* begin = s_.c_str() + pos_;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) fail("malformed number");
        pos_ += static_cast<std::size_t>(end - begin);
        if (pos_ < s_.size() && s_[pos_] == 'i' &&
            !(pos_ + 1 < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_ + 1])))) {
            ++pos_;
            return make_constant({0.0, v});
        }
        return make_constant(v);
    }

    NodePtr name() {
        const std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
        const std::string id = s_.substr(start, pos_ - start);
        if (id == "z" || id == "zbar") {
            auto n = std::make_shared<Node>();
            n->kind = (id == "z") ? Node::Kind::z : Node::Kind::zbar;
            return n;
        }
        if (id == "i") return make_constant({0.0, 1.0});
        if (id == "pi") return make_constant(std::numbers::pi);

        struct Fn {
            const char* name;
            Node::Kind kind;
            std::size_t arity;
        };
        static constexpr Fn fns[] = {
            {"exp", Node::Kind::exp, 1},   {"re", Node::Kind::re, 1},       {"im", Node::Kind::im, 1},
            {"conj", Node::Kind::conj, 1}, {"abs", Node::Kind::abs, 1},     {"bump", Node::Kind::bump, 4},
            {"gauss", Node::Kind::gauss, 4},
        };
        const Fn* fn = nullptr;
        for (const auto& f : fns) {
            if (id == f.name) fn = &f;
        }
        if (!fn) {
            pos_ = start;
            fail("unknown identifier '" + id + "'");
        }
        expect('(');
        std::vector<NodePtr> args;
        std::vector<std::size_t> positions;
        skip();
        positions.push_back(pos_);
        args.push_back(expr());
        while (accept(',')) {
            skip();
            positions.push_back(pos_);
            args.push_back(expr());
        }
        expect(')');
        if (args.size() != fn->arity) {
            throw ExprError(id + " expects " + std::to_string(fn->arity) + " argument(s), got " +
                                std::to_string(args.size()),
                            start);
        }
        if (fn->kind != Node::Kind::bump && fn->kind != Node::Kind::gauss) return make(fn->kind, std::move(args));

        for (std::size_t a = 0; a < 4; ++a) {
            if (!args[a]->is_constant()) throw ExprError(id + " parameters must be constants", positions[a]);
            if (a < 3 && args[a]->value.imag() != 0.0) throw ExprError(id + " center and width must be real", positions[a]);
        }
        if (!(args[2]->value.real() > 0.0)) throw ExprError(id + " width must be positive", positions[2]);
        auto n = std::make_shared<Node>();
        n->kind = fn->kind;
        n->center = {args[0]->value.real(), args[1]->value.real()};
        n->scale = args[2]->value.real();
        n->amp = args[3]->value;
        if (n->amp == cplx{}) return make_constant({});
        return n;
    }

    const std::string& s_;
    std::size_t pos_ = 0;
};

} // namespace

Expression::Expression(std::string text, std::shared_ptr<const Node> root) : text_(std::move(text)), root_(std::move(root)) {}

Expression Expression::parse(const std::string& text) {
    Parser p(text);
    NodePtr root = p.parse();
    return {text, std::move(root)};
}

cplx Expression::evaluate(cplx z) const { return root_->eval(z); }

ScalarField Expression::sample(const ComplexGrid& grid) const {
    if (root_->is_constant()) return ScalarField::constant(grid, root_->value);
    return ScalarField::sample(grid, [this](cplx z) { return root_->eval(z); });
}

bool Expression::is_zero_constant() const { return root_->is_constant() && root_->value == cplx{}; }

} // namespace polycgo
