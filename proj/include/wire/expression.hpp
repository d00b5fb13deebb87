#pragma once

// Closed-form scalar expressions in the chart coordinates x, y, evaluated
// together with their exact first and second derivatives.

#include <cctype>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "wire/errors.hpp"

namespace wire {

/// Value, gradient and Hessian of a function of two variables at one point.
struct Jet2 {
    double f = 0.0;
    double g[2] = {0.0, 0.0};
    double h[2][2] = {{0.0, 0.0}, {0.0, 0.0}};

    static Jet2 constant(double c) {
        Jet2 r;
        r.f = c;
        return r;
    }
    static Jet2 variable(int i, double v) {
        Jet2 r;
        r.f = v;
        r.g[i] = 1.0;
        return r;
    }
    double laplacian() const { return h[0][0] + h[1][1]; }
};

/// Applies a scalar function given its value and first two derivatives at u.f.
inline Jet2 chain(const Jet2& u, double f0, double f1, double f2) {
    Jet2 r;
    r.f = f0;
    for (int i = 0; i < 2; ++i) {
        r.g[i] = f1 * u.g[i];
        for (int j = 0; j < 2; ++j) r.h[i][j] = f2 * u.g[i] * u.g[j] + f1 * u.h[i][j];
    }
    return r;
}

inline Jet2 operator+(const Jet2& a, const Jet2& b) {
    Jet2 r;
    r.f = a.f + b.f;
    for (int i = 0; i < 2; ++i) {
        r.g[i] = a.g[i] + b.g[i];
        for (int j = 0; j < 2; ++j) r.h[i][j] = a.h[i][j] + b.h[i][j];
    }
    return r;
}

inline Jet2 operator-(const Jet2& a) { return chain(a, -a.f, -1.0, 0.0); }
inline Jet2 operator-(const Jet2& a, const Jet2& b) { return a + (-b); }

inline Jet2 operator*(const Jet2& a, const Jet2& b) {
    Jet2 r;
    r.f = a.f * b.f;
    for (int i = 0; i < 2; ++i) {
        r.g[i] = a.f * b.g[i] + b.f * a.g[i];
        for (int j = 0; j < 2; ++j)
            r.h[i][j] = a.f * b.h[i][j] + b.f * a.h[i][j] + a.g[i] * b.g[j] + b.g[i] * a.g[j];
    }
    return r;
}

inline Jet2 reciprocal(const Jet2& a) {
    const double v = a.f;
    return chain(a, 1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v));
}
inline Jet2 operator/(const Jet2& a, const Jet2& b) { return a * reciprocal(b); }

inline Jet2 exp(const Jet2& a) {
    const double e = std::exp(a.f);
    return chain(a, e, e, e);
}
inline Jet2 log(const Jet2& a) { return chain(a, std::log(a.f), 1.0 / a.f, -1.0 / (a.f * a.f)); }
inline Jet2 sin(const Jet2& a) { return chain(a, std::sin(a.f), std::cos(a.f), -std::sin(a.f)); }
inline Jet2 cos(const Jet2& a) { return chain(a, std::cos(a.f), -std::sin(a.f), -std::cos(a.f)); }
inline Jet2 sqrt(const Jet2& a) {
    const double s = std::sqrt(a.f);
    return chain(a, s, 0.5 / s, -0.25 / (s * a.f));
}
inline Jet2 sinh(const Jet2& a) { return chain(a, std::sinh(a.f), std::cosh(a.f), std::sinh(a.f)); }
inline Jet2 cosh(const Jet2& a) { return chain(a, std::cosh(a.f), std::sinh(a.f), std::cosh(a.f)); }
inline Jet2 tanh(const Jet2& a) {
    const double t = std::tanh(a.f);
    const double d = 1.0 - t * t;
    return chain(a, t, d, -2.0 * t * d);
}
inline Jet2 pow_const(const Jet2& a, double p) {
    return chain(a, std::pow(a.f, p), p * std::pow(a.f, p - 1.0), p * (p - 1.0) * std::pow(a.f, p - 2.0));
}

/// Parsed expression over the variables x and y.
///
/// Grammar: numbers, x, y, pi, e, + - * / ^, parentheses and the functions
/// exp log sqrt sin cos sinh cosh tanh.
class Expression {
public:
    explicit Expression(const std::string& text) : text_(text) {
        pos_ = 0;
        root_ = parse_sum();
        skip_space();
        if (pos_ != text_.size()) fail("unexpected character '" + std::string(1, text_[pos_]) + "'");
    }

    const std::string& text() const { return text_; }

    Jet2 eval(double x, double y) const { return eval_node(*root_, x, y); }

private:
    enum class Op { Num, VarX, VarY, Add, Sub, Mul, Div, Pow, Neg, Func };
    struct Node {
        Op op;
        double value = 0.0;
        std::string func;
        std::unique_ptr<Node> lhs, rhs;
    };
    using NodePtr = std::unique_ptr<Node>;

    static NodePtr make(Op op, NodePtr l = nullptr, NodePtr r = nullptr) {
        auto n = std::make_unique<Node>();
        n->op = op;
        n->lhs = std::move(l);
        n->rhs = std::move(r);
        return n;
    }

    [[noreturn]] void fail(const std::string& why) const {
        throw UsageError("expression '" + text_ + "' at offset " + std::to_string(pos_) + ": " + why);
    }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr parse_sum() {
        NodePtr lhs = parse_product();
        for (;;) {
            if (accept('+')) lhs = make(Op::Add, std::move(lhs), parse_product());
            else if (accept('-')) lhs = make(Op::Sub, std::move(lhs), parse_product());
            else return lhs;
        }
    }

    NodePtr parse_product() {
        NodePtr lhs = parse_unary();
        for (;;) {
            if (accept('*')) lhs = make(Op::Mul, std::move(lhs), parse_unary());
            else if (accept('/')) lhs = make(Op::Div, std::move(lhs), parse_unary());
            else return lhs;
        }
    }

    NodePtr parse_unary() {
        if (accept('-')) return make(Op::Neg, parse_unary());
        if (accept('+')) return parse_unary();
        return parse_power();
    }

    NodePtr parse_power() {
        NodePtr base = parse_primary();
        if (accept('^')) return make(Op::Pow, std::move(base), parse_unary());
        return base;
    }

    NodePtr parse_primary() {
        skip_space();
        if (pos_ >= text_.size()) fail("unexpected end of input");
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr inner = parse_sum();
            if (!accept(')')) fail("expected ')'");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(text_.substr(pos_), &used);
            } catch (const std::exception&) {
                fail("bad number");
            }
            pos_ += used;
            auto n = make(Op::Num);
            n->value = v;
            return n;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t start = pos_;
            while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            const std::string word = text_.substr(start, pos_ - start);
            if (word == "x") return make(Op::VarX);
            if (word == "y") return make(Op::VarY);
            if (word == "pi" || word == "e") {
                auto n = make(Op::Num);
                n->value = word == "pi" ? std::numbers::pi : std::numbers::e;
                return n;
            }
            static const char* const known[] = {"exp", "log", "sqrt", "sin", "cos", "sinh", "cosh", "tanh"};
            for (const char* k : known) {
                if (word == k) {
                    if (!accept('(')) fail("expected '(' after " + word);
                    auto n = make(Op::Func, parse_sum());
                    n->func = word;
                    if (!accept(')')) fail("expected ')'");
                    return n;
                }
            }
            pos_ = start;
            fail("unknown identifier '" + word + "'");
        }
        fail("unexpected character '" + std::string(1, c) + "'");
    }

    static bool is_constant(const Node& n) { return n.op == Op::Num; }

    static Jet2 eval_node(const Node& n, double x, double y) {
        switch (n.op) {
            case Op::Num: return Jet2::constant(n.value);
            case Op::VarX: return Jet2::variable(0, x);
            case Op::VarY: return Jet2::variable(1, y);
            case Op::Add: return eval_node(*n.lhs, x, y) + eval_node(*n.rhs, x, y);
            case Op::Sub: return eval_node(*n.lhs, x, y) - eval_node(*n.rhs, x, y);
            case Op::Mul: return eval_node(*n.lhs, x, y) * eval_node(*n.rhs, x, y);
            case Op::Div: return eval_node(*n.lhs, x, y) / eval_node(*n.rhs, x, y);
            case Op::Neg: return -eval_node(*n.lhs, x, y);
            case Op::Pow: {
                const Jet2 base = eval_node(*n.lhs, x, y);
                if (is_constant(*n.rhs)) return pow_const(base, n.rhs->value);
                return exp(eval_node(*n.rhs, x, y) * log(base));
            }
            case Op::Func: {
                const Jet2 a = eval_node(*n.lhs, x, y);
                if (n.func == "exp") return exp(a);
                if (n.func == "log") return log(a);
                if (n.func == "sqrt") return sqrt(a);
                if (n.func == "sin") return sin(a);
                if (n.func == "cos") return cos(a);
                if (n.func == "sinh") return sinh(a);
                if (n.func == "cosh") return cosh(a);
                return tanh(a);
            }
        }
        return Jet2{};
    }

    std::string text_;
    std::size_t pos_ = 0;
    NodePtr root_;
};

}  // namespace wire
