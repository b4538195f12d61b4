#pragma once

// Small arithmetic expression language for descriptor files.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('+' | '-') unary | power
//   power   := postfix ('^' unary)?          right associative
//   postfix := primary '!'?                  factorial of a non-negative integer constant only
//   primary := number | name | name '(' expr ')' | '(' expr ')'
//
// Functions: abs, sqrt, exp, log, sin, cos. The characters × ÷ − are accepted
// as * / -.

#include <cctype>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace harmonic {

class ExpressionError : public std::invalid_argument {
public:
    ExpressionError(const std::string& msg, std::size_t pos)
        : std::invalid_argument(msg + " at offset " + std::to_string(pos)), pos_(pos) {}
    std::size_t position() const noexcept { return pos_; }

private:
    std::size_t pos_;
};

class Expression {
public:
    /// Parses `text`; every name must be one of `variables` (or a function).
    static Expression parse(std::string_view text, std::span<const std::string> variables) {
        Parser p{text, variables, {}, 0};
        Expression e;
        e.text_ = std::string(text);
        e.root_ = p.expr();
        p.skip_space();
        if (p.pos != text.size()) throw ExpressionError("unexpected '" + std::string(1, text[p.pos]) + "'", p.pos);
        e.nodes_ = std::move(p.nodes);
        e.var_count_ = variables.size();
        return e;
    }

    double eval(std::span<const double> vars) const {
        if (vars.size() < var_count_) throw std::invalid_argument("expression: too few variable values");
        return eval_node(root_, vars);
    }

    const std::string& text() const noexcept { return text_; }

    bool uses(std::size_t var) const {
        for (const auto& n : nodes_)
            if (n.op == Op::Var && n.var == var) return true;
        return false;
    }

    /// Index of the variable if the whole expression is one bare variable.
    std::optional<std::size_t> bare_variable() const {
        if (nodes_[root_].op == Op::Var) return nodes_[root_].var;
        return std::nullopt;
    }

private:
    enum class Op { Num, Var, Neg, Add, Sub, Mul, Div, Pow, Call };
    enum class Fn { Abs, Sqrt, Exp, Log, Sin, Cos };

    struct Node {
        Op op;
        double value = 0.0;
        std::size_t var = 0;
        Fn fn = Fn::Abs;
        int lhs = -1, rhs = -1;
    };

    struct Parser {
        std::string_view s;
        std::span<const std::string> vars;
        std::vector<Node> nodes;
        std::size_t pos;

        int push(Node n) {
            nodes.push_back(n);
            return static_cast<int>(nodes.size()) - 1;
        }

        void skip_space() {
            while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t' || s[pos] == '\n')) ++pos;
        }

        // Reads one operator, mapping the accepted UTF-8 spellings to ASCII.
        char peek_op() {
            skip_space();
            if (pos >= s.size()) return '\0';
            if (s.substr(pos, 2) == "\xC3\x97") return '*';      // ×
            if (s.substr(pos, 2) == "\xC3\xB7") return '/';      // ÷
            if (s.substr(pos, 3) == "\xE2\x88\x92") return '-';  // −
            return s[pos];
        }
        void take_op() {
            const auto c = static_cast<unsigned char>(s[pos]);
            pos += c == 0xC3 ? 2 : c == 0xE2 ? 3 : 1;
        }

        int expr() {
            int l = term();
            for (;;) {
                const char c = peek_op();
                if (c != '+' && c != '-') return l;
                take_op();
                l = push({c == '+' ? Op::Add : Op::Sub, 0, 0, Fn::Abs, l, term()});
            }
        }
        int term() {
            int l = unary();
            for (;;) {
                const char c = peek_op();
                if (c != '*' && c != '/') return l;
                take_op();
                l = push({c == '*' ? Op::Mul : Op::Div, 0, 0, Fn::Abs, l, unary()});
            }
        }
        int unary() {
            const char c = peek_op();
            if (c == '-') {
                take_op();
                return push({Op::Neg, 0, 0, Fn::Abs, unary(), -1});
            }
            if (c == '+') {
                take_op();
                return unary();
            }
            return power();
        }
        int power() {
            const int base = postfix();
            if (peek_op() == '^') {
                take_op();
                return push({Op::Pow, 0, 0, Fn::Abs, base, unary()});
            }
            return base;
        }
        int postfix() {
            const std::size_t at = pos;
            const int p = primary();
            if (peek_op() == '!') {
                const Node& n = nodes[p];
                if (n.op != Op::Num || n.value < 0 || n.value != std::floor(n.value) || n.value > 170)
                    throw ExpressionError("factorial needs a non-negative integer constant", at);
                take_op();
                double f = 1.0;
                for (int k = 2; k <= static_cast<int>(n.value); ++k) f *= k;
                nodes[p].value = f;
            }
            return p;
        }
        int primary() {
            skip_space();
            if (pos >= s.size()) throw ExpressionError("unexpected end of expression", pos);
            const char c = s[pos];
            if (c == '(') {
                ++pos;
                const int e = expr();
                skip_space();
                if (pos >= s.size() || s[pos] != ')') throw ExpressionError("missing ')'", pos);
                ++pos;
                return e;
            }
            if ((c >= '0' && c <= '9') || c == '.') {
                const std::size_t start = pos;
                while (pos < s.size() && ((s[pos] >= '0' && s[pos] <= '9') || s[pos] == '.')) ++pos;
                if (pos < s.size() && (s[pos] == 'e' || s[pos] == 'E')) {
                    std::size_t q = pos + 1;
                    if (q < s.size() && (s[q] == '+' || s[q] == '-')) ++q;
                    if (q < s.size() && s[q] >= '0' && s[q] <= '9') {
                        pos = q;
                        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
                    }
                }
                const std::string tok(s.substr(start, pos - start));
                std::size_t used = 0;
                double v = 0.0;
                try {
                    v = std::stod(tok, &used);
                } catch (const std::exception&) {
                    used = 0;
                }
                if (used != tok.size()) throw ExpressionError("bad number '" + tok + "'", start);
                return push({Op::Num, v});
            }
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                const std::size_t start = pos;
                while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) ++pos;
                const std::string name(s.substr(start, pos - start));
                skip_space();
                if (pos < s.size() && s[pos] == '(') {
                    Fn fn;
                    if (name == "abs") fn = Fn::Abs;
                    else if (name == "sqrt") fn = Fn::Sqrt;
                    else if (name == "exp") fn = Fn::Exp;
                    else if (name == "log") fn = Fn::Log;
                    else if (name == "sin") fn = Fn::Sin;
                    else if (name == "cos") fn = Fn::Cos;
                    else throw ExpressionError("unknown function '" + name + "'", start);
                    ++pos;
                    const int arg = expr();
                    skip_space();
                    if (pos >= s.size() || s[pos] != ')') throw ExpressionError("missing ')'", pos);
                    ++pos;
                    return push({Op::Call, 0, 0, fn, arg, -1});
                }
                if (name == "pi") return push({Op::Num, 3.14159265358979323846});
                for (std::size_t i = 0; i < vars.size(); ++i)
                    if (vars[i] == name) return push({Op::Var, 0, i});
                throw ExpressionError("unknown variable '" + name + "'", start);
            }
            throw ExpressionError("unexpected '" + std::string(1, c) + "'", pos);
        }
    };

    double eval_node(int i, std::span<const double> v) const {
        const Node& n = nodes_[i];
        switch (n.op) {
            case Op::Num: return n.value;
            case Op::Var: return v[n.var];
            case Op::Neg: return -eval_node(n.lhs, v);
            case Op::Add: return eval_node(n.lhs, v) + eval_node(n.rhs, v);
            case Op::Sub: return eval_node(n.lhs, v) - eval_node(n.rhs, v);
            case Op::Mul: return eval_node(n.lhs, v) * eval_node(n.rhs, v);
            case Op::Div: return eval_node(n.lhs, v) / eval_node(n.rhs, v);
            case Op::Pow: {
                const double b = eval_node(n.lhs, v), e = eval_node(n.rhs, v);
                // small integer powers by multiplication so negative bases work
                if (e == std::floor(e) && std::abs(e) <= 16) {
                    double r = 1.0;
                    for (int k = 0; k < static_cast<int>(std::abs(e)); ++k) r *= b;
                    return e < 0 ? 1.0 / r : r;
                }
                return std::pow(b, e);
            }
            case Op::Call: {
                const double a = eval_node(n.lhs, v);
                switch (n.fn) {
                    case Fn::Abs: return std::abs(a);
                    case Fn::Sqrt: return std::sqrt(a);
                    case Fn::Exp: return std::exp(a);
                    case Fn::Log: return std::log(a);
                    case Fn::Sin: return std::sin(a);
                    case Fn::Cos: return std::cos(a);
                }
            }
        }
        return 0.0;
    }

    std::string text_;
    std::vector<Node> nodes_;
    int root_ = -1;
    std::size_t var_count_ = 0;
};

}  // namespace harmonic
