#include "jetcl/parser.hpp"

#include <cctype>

#include "jetcl/jet.hpp"

namespace jetcl {

namespace {

struct Parser {
    const std::string& s;
    size_t pos = 0;
    Declarations& decls;

    Parser(const std::string& text, Declarations& d) : s(text), decls(d) {}

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos); }

    void skip_ws() {
        while (pos < s.size() && std::isspace((unsigned char)s[pos])) ++pos;
    }
    char peek() {
        skip_ws();
        return pos < s.size() ? s[pos] : '\0';
    }
    bool eat(char c) {
        if (peek() != c) return false;
        ++pos;
        return true;
    }
    void expect(char c) {
        if (!eat(c)) fail(std::string("expected '") + c + "'");
    }

    JetExpr parse() {
        JetExpr e = parse_expr();
        if (peek() != '\0') fail("trailing input");
        return e;
    }

    JetExpr parse_expr() {
        JetExpr e = parse_term();
        while (true) {
            if (eat('+')) e = e + parse_term();
            else if (eat('-')) e = e - parse_term();
            else return e;
        }
    }

    JetExpr parse_term() {
        JetExpr e = parse_factor();
        while (true) {
            if (eat('*')) e = e * parse_factor();
            else if (eat('/')) {
                size_t at = pos;
                JetExpr d = parse_factor();
                if (d.is_canonical_zero()) throw ParseError("division by zero", at);
                e = e / d;
            } else {
                return e;
            }
        }
    }

    JetExpr parse_factor() {
        if (eat('-')) return -parse_factor();
        JetExpr e = parse_base();
        if (eat('^')) return e.pow((int)parse_int());
        return e;
    }

    long parse_int() {
        skip_ws();
        bool paren = eat('(');
        skip_ws();
        bool neg = eat('-');
        skip_ws();
        if (pos >= s.size() || !std::isdigit((unsigned char)s[pos]))
            fail("expected integer");
        long v = 0;
        while (pos < s.size() && std::isdigit((unsigned char)s[pos])) {
            v = v * 10 + (s[pos] - '0');
            if (v > 1000000) fail("exponent too large");
            ++pos;
        }
        if (paren) expect(')');
        return neg ? -v : v;
    }

    JetExpr parse_base() {
        char c = peek();
        if (c == '(') {
            ++pos;
            JetExpr e = parse_expr();
            expect(')');
            return e;
        }
        if (std::isdigit((unsigned char)c)) return parse_number();
        if (std::isalpha((unsigned char)c) || c == '_') return parse_name();
        fail("expected expression");
    }

    JetExpr parse_number() {
        size_t start = pos;
        while (pos < s.size() && std::isdigit((unsigned char)s[pos])) ++pos;
        if (pos < s.size() && s[pos] == '.') {
            ++pos;
            size_t fs = pos;
            while (pos < s.size() && std::isdigit((unsigned char)s[pos])) ++pos;
            if (pos == fs) fail("expected digits after decimal point");
            std::string digits = s.substr(start, fs - 1 - start) + s.substr(fs, pos - fs);
            Rational r(digits);
            return JetExpr(r / Rational(10).pow((long)(pos - fs)));
        }
        return JetExpr(Rational(s.substr(start, pos - start)));
    }

    std::string parse_ident() {
        size_t start = pos;
        while (pos < s.size() &&
               (std::isalnum((unsigned char)s[pos]) || s[pos] == '_'))
            ++pos;
        return s.substr(start, pos - start);
    }

    JetExpr parse_name() {
        size_t start = pos;
        std::string name = parse_ident();

        // plain variables
        if (name == "t") return JetExpr::t();
        if (name == "x") return JetExpr::x();
        if (name == "u_x") return JetExpr::u(1);
        if (name == "u_xx") return JetExpr::u(2);
        if (name == "u_t") return JetExpr::variable(Var::ut(0));
        if (name == "u_tx") return JetExpr::variable(Var::ut(1));
        if (name == "u_txx") return JetExpr::variable(Var::ut(2));
        if (name == "u" || name == "ut") {
            if (peek() == '[') {
                ++pos;
                long k = parse_int();
                expect(']');
                if (k < 0 || k > 100) fail("jet index out of range");
                return JetExpr::variable(name == "u" ? Var::u((int)k)
                                                     : Var::ut((int)k));
            }
            if (name == "u") return JetExpr::u(0);
            fail("expected '[' after ut");
        }

        if (name == "diff") return parse_diff();
        if (name == "exp") return JetExpr::exp(parse_call_arg());
        if (name == "ln") return JetExpr::ln(parse_call_arg());
        if (name == "sin") return JetExpr::sin(parse_call_arg());
        if (name == "cos") return JetExpr::cos(parse_call_arg());

        // primes on unary symbols
        int primes = 0;
        while (pos < s.size() && s[pos] == '\'') {
            ++primes;
            ++pos;
        }

        std::vector<int> deriv;
        FunctionSymbolPtr sym = resolve(name, deriv);
        if (!sym) throw ParseError("unknown symbol '" + name + "'", start);
        if (primes > 0) {
            if (sym->arity != 1)
                throw ParseError("primes need a unary symbol", start);
            if (!deriv.empty())
                throw ParseError("mixed derivative notations", start);
            deriv = {primes};
        }

        if (peek() != '(') {
            if (sym->arity == 0 && deriv.empty())
                return JetExpr::function(sym, {});
            fail("expected '(' after '" + name + "'");
        }
        ++pos;
        std::vector<JetExpr> args;
        if (peek() != ')') {
            args.push_back(parse_expr());
            while (eat(',')) args.push_back(parse_expr());
        }
        expect(')');
        if ((int)args.size() != sym->arity)
            throw ParseError("'" + sym->name + "' takes " +
                                 std::to_string(sym->arity) + " argument(s)",
                             start);
        return JetExpr::function(sym, std::move(args), std::move(deriv));
    }

    /// Resolve a symbol name, peeling `_int` suffixes (antiderivatives) and a
    /// trailing `_d<i>[_<j>...]` derivative index (returned through deriv).
    FunctionSymbolPtr resolve(const std::string& name, std::vector<int>& deriv) {
        if (auto p = decls.lookup(name)) return p;
        if (name.size() > 4 && name.compare(name.size() - 4, 4, "_int") == 0) {
            std::vector<int> inner;
            auto base = resolve(name.substr(0, name.size() - 4), inner);
            if (base && base->arity == 1 && inner.empty())
                return decls.antiderivative(base);
            return nullptr;
        }
        size_t d = name.rfind("_d");
        if (d != std::string::npos && d > 0) {
            std::string tail = name.substr(d + 2);
            std::vector<int> idx;
            size_t i = 0;
            bool ok = !tail.empty();
            while (ok && i < tail.size()) {
                if (!std::isdigit((unsigned char)tail[i])) {
                    ok = false;
                    break;
                }
                int v = 0;
                while (i < tail.size() && std::isdigit((unsigned char)tail[i]))
                    v = v * 10 + (tail[i++] - '0');
                idx.push_back(v);
                if (i < tail.size()) {
                    if (tail[i] != '_') ok = false;
                    ++i;
                    if (i == tail.size()) ok = false;  // trailing underscore
                }
            }
            if (ok) {
                std::vector<int> inner;
                auto base = resolve(name.substr(0, d), inner);
                if (base && inner.empty() && (int)idx.size() == base->arity) {
                    deriv = idx;
                    return base;
                }
            }
        }
        return nullptr;
    }

    JetExpr parse_call_arg() {
        expect('(');
        JetExpr e = parse_expr();
        expect(')');
        return e;
    }

    JetExpr parse_diff() {
        expect('(');
        JetExpr e = parse_expr();
        expect(',');
        size_t at = pos;
        JetExpr vexpr = parse_expr();
        long k = 1;
        if (eat(',')) k = parse_int();
        expect(')');
        if (k < 0 || k > 20) throw ParseError("derivative order out of range", at);
        auto v = as_plain_var(vexpr);
        if (!v) throw ParseError("diff needs a plain variable", at);
        if (*v == Var::x()) return total_x(e, (int)k);
        return e.diff(*v, (int)k);
    }

    static std::optional<Var> as_plain_var(const JetExpr& e) {
        if (!e.den().is_constant() || e.num().terms.size() != 1) return std::nullopt;
        const Term& t = e.num().terms[0];
        if (!t.coeff.is_one() || t.mono.factors.size() != 1) return std::nullopt;
        if (!t.mono.factors[0].first.is_var() || t.mono.factors[0].second != 1)
            return std::nullopt;
        return t.mono.factors[0].first.var();
    }
};

}  // namespace

JetExpr parse_expression(const std::string& text, Declarations& decls) {
    Parser p(text, decls);
    return p.parse();
}

}  // namespace jetcl
