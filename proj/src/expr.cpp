#include "jetcl/expr.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <random>
#include <set>

namespace jetcl {

// ---------------------------------------------------------------------------
// Var
// ---------------------------------------------------------------------------
std::string Var::str() const {
    if (code == 0) return "t";
    if (code == 1) return "x";
    if (is_u()) {
        int k = u_order();
        if (k == 0) return "u";
        if (k == 1) return "u_x";
        if (k == 2) return "u_xx";
        return "u[" + std::to_string(k) + "]";
    }
    int k = ut_order();
    if (k == 0) return "u_t";
    if (k == 1) return "u_tx";
    if (k == 2) return "u_txx";
    return "ut[" + std::to_string(k) + "]";
}

// ---------------------------------------------------------------------------
// Declarations
// ---------------------------------------------------------------------------
FunctionSymbolPtr Declarations::declare(const std::string& name, int arity) {
    FunctionSymbol s;
    s.name = name;
    s.arity = arity;
    return declare(s);
}

FunctionSymbolPtr Declarations::declare(const FunctionSymbol& sym) {
    auto it = table_.find(sym.name);
    if (it != table_.end()) {
        const auto& old = *it->second;
        bool same = old.arity == sym.arity &&
                    old.constraint.has_value() == sym.constraint.has_value() &&
                    ((old.base == nullptr) == (sym.base == nullptr));
        if (old.constraint && sym.constraint)
            same = same && old.constraint->arg_a == sym.constraint->arg_a &&
                   old.constraint->arg_b == sym.constraint->arg_b &&
                   old.constraint->factor == sym.constraint->factor;
        if (old.base && sym.base) same = same && old.base->name == sym.base->name;
        if (!same)
            throw std::invalid_argument("Declarations: conflicting redeclaration of '" +
                                        sym.name + "'");
        return it->second;
    }
    auto p = std::make_shared<const FunctionSymbol>(sym);
    table_.emplace(sym.name, p);
    return p;
}

FunctionSymbolPtr Declarations::lookup(const std::string& name) const {
    auto it = table_.find(name);
    return it == table_.end() ? nullptr : it->second;
}

FunctionSymbolPtr Declarations::antiderivative(const FunctionSymbolPtr& sym) {
    if (!sym || sym->arity != 1)
        throw std::invalid_argument("antiderivative: need a unary symbol");
    std::string name = sym->name + "_int";
    if (auto p = lookup(name)) return p;
    FunctionSymbol s;
    s.name = name;
    s.arity = 1;
    s.base = sym;
    return declare(s);
}

std::vector<FunctionSymbolPtr> Declarations::all() const {
    std::vector<FunctionSymbolPtr> out;
    for (auto& [k, v] : table_) out.push_back(v);
    return out;
}

// ---------------------------------------------------------------------------
// Atom interning and canonicalizing factories
// ---------------------------------------------------------------------------
int atom_compare(const AtomPtr& a, const AtomPtr& b) {
    if (a.get() == b.get()) return 0;
    return a->key() < b->key() ? -1 : (a->key() == b->key() ? 0 : 1);
}

namespace {

std::mutex g_intern_mutex;
std::map<std::string, AtomPtr>& intern_table() {
    static std::map<std::string, AtomPtr> table;
    return table;
}

AtomPtr intern_atom(Atom&& a) {
    std::lock_guard<std::mutex> lock(g_intern_mutex);
    auto& tbl = intern_table();
    auto it = tbl.find(a.key_);
    if (it != tbl.end()) return it->second;
    auto p = std::make_shared<const Atom>(std::move(a));
    tbl.emplace(p->key_, p);
    return p;
}

std::string join_args(const std::vector<JetExpr>& args) {
    std::string s;
    for (size_t i = 0; i < args.size(); ++i) {
        if (i) s += ";";
        s += args[i].str();
    }
    return s;
}

JetExpr atom_expr(AtomPtr a) {
    return JetExpr::fraction(Polynomial::from_atom(a),
                             Polynomial::constant(Rational(1)));
}

}  // namespace

JetExpr JetExpr::function(const FunctionSymbolPtr& sym, std::vector<JetExpr> args,
                          std::vector<int> deriv) {
    if (!sym) throw std::invalid_argument("function: null symbol");
    if ((int)args.size() != sym->arity)
        throw std::invalid_argument("function '" + sym->name + "': expected " +
                                    std::to_string(sym->arity) + " arguments");
    if (deriv.empty()) deriv.assign(sym->arity, 0);
    if ((int)deriv.size() != sym->arity)
        throw std::invalid_argument("function '" + sym->name + "': bad derivative index");

    Rational coeff(1);
    FunctionSymbolPtr cur = sym;
    bool changed = true;
    while (changed) {
        changed = false;
        // antiderivative collapse: d(F_int)/darg = F
        if (cur->base && deriv[0] >= 1) {
            deriv[0] -= 1;
            cur = cur->base;
            changed = true;
            continue;
        }
        // second-order constraint rewrite
        if (cur->constraint) {
            const auto& c = *cur->constraint;
            if (deriv[c.arg_b] >= 2) {
                deriv[c.arg_b] -= 2;
                deriv[c.arg_a] += 1;
                coeff *= c.factor;
                changed = true;
            }
        }
    }

    Atom a;
    a.kind = AtomKind::Func;
    a.sym = cur;
    a.deriv = deriv;
    a.args = std::move(args);
    std::string d;
    for (size_t i = 0; i < a.deriv.size(); ++i) {
        if (i) d += ",";
        d += std::to_string(a.deriv[i]);
    }
    a.key_ = "f:" + cur->name + "[" + d + "](" + join_args(a.args) + ")";
    return JetExpr(coeff) * atom_expr(intern_atom(std::move(a)));
}

JetExpr JetExpr::exp(const JetExpr& e) {
    if (e.is_canonical_zero()) return JetExpr(1);
    Atom a;
    a.kind = AtomKind::Exp;
    a.args = {e};
    a.key_ = "e:(" + e.str() + ")";
    return atom_expr(intern_atom(std::move(a)));
}

JetExpr JetExpr::ln(const JetExpr& e) {
    // ln(exp(a)) = a
    if (e.den_.is_constant() && e.num_.terms.size() == 1) {
        const Term& t = e.num_.terms[0];
        if (t.coeff.is_one() && e.den_.terms.size() == 1 &&
            e.den_.terms[0].coeff.is_one() && t.mono.factors.size() == 1 &&
            !t.mono.factors[0].first.is_var() &&
            t.mono.factors[0].first.atom->kind == AtomKind::Exp &&
            t.mono.factors[0].second == 1) {
            return t.mono.factors[0].first.atom->args[0];
        }
    }
    if (e.is_canonical_one()) return JetExpr(0);
    Atom a;
    a.kind = AtomKind::Ln;
    a.args = {e};
    a.key_ = "l:(" + e.str() + ")";
    return atom_expr(intern_atom(std::move(a)));
}

JetExpr JetExpr::sin(const JetExpr& e) {
    if (e.is_canonical_zero()) return JetExpr(0);
    Atom a;
    a.kind = AtomKind::Sin;
    a.args = {e};
    a.key_ = "s:(" + e.str() + ")";
    return atom_expr(intern_atom(std::move(a)));
}

JetExpr JetExpr::cos(const JetExpr& e) {
    if (e.is_canonical_zero()) return JetExpr(1);
    Atom a;
    a.kind = AtomKind::Cos;
    a.args = {e};
    a.key_ = "c:(" + e.str() + ")";
    return atom_expr(intern_atom(std::move(a)));
}

// ---------------------------------------------------------------------------
// Monomials
// ---------------------------------------------------------------------------
int base_compare(const BaseRef& a, const BaseRef& b) {
    if (a.is_var() != b.is_var()) return a.is_var() ? -1 : 1;
    if (a.is_var()) return a.var_code < b.var_code ? -1 : (a.var_code == b.var_code ? 0 : 1);
    return atom_compare(a.atom, b.atom);
}

int Monomial::total_degree() const {
    int d = 0;
    for (auto& [b, e] : factors) d += e;
    return d;
}

int Monomial::degree_of(Var v) const {
    for (auto& [b, e] : factors)
        if (b.is_var() && b.var_code == v.code) return e;
    return 0;
}

// Graded lexicographic order (multiplicative, so exact division by leading
// terms is valid): compare total degree, then walk the sorted factor lists;
// whichever monomial carries the smaller base, or the higher power of a
// shared base, is the larger one.
int monomial_compare(const Monomial& a, const Monomial& b) {
    int da = a.total_degree(), db = b.total_degree();
    if (da != db) return da < db ? -1 : 1;
    size_t i = 0, j = 0;
    while (i < a.factors.size() && j < b.factors.size()) {
        int c = base_compare(a.factors[i].first, b.factors[j].first);
        if (c < 0) return 1;
        if (c > 0) return -1;
        if (a.factors[i].second != b.factors[j].second)
            return a.factors[i].second > b.factors[j].second ? 1 : -1;
        ++i;
        ++j;
    }
    if (i < a.factors.size()) return 1;
    if (j < b.factors.size()) return -1;
    return 0;
}

/// Merge two sorted factor lists; exp atoms are combined into a single
/// exp(sum of scaled arguments). coeff_out is multiplied by any rational
/// factor the merge produces (currently always 1; hook kept for symmetry).
Monomial monomial_mul(const Monomial& a, const Monomial& b, Rational& coeff_out) {
    (void)coeff_out;
    Monomial out;
    out.factors.reserve(a.factors.size() + b.factors.size());
    size_t i = 0, j = 0;
    // exp accumulation: sum of (exponent * arg)
    JetExpr exp_arg;
    bool has_exp = false;
    auto feed = [&](const std::pair<BaseRef, int>& f) {
        if (!f.first.is_var() && f.first.atom->kind == AtomKind::Exp) {
            JetExpr contrib = f.first.atom->args[0];
            if (f.second != 1) contrib = contrib * JetExpr(f.second);
            exp_arg = has_exp ? exp_arg + contrib : contrib;
            has_exp = true;
            return;
        }
        if (!out.factors.empty() && base_compare(out.factors.back().first, f.first) == 0)
            out.factors.back().second += f.second;
        else
            out.factors.push_back(f);
    };
    while (i < a.factors.size() && j < b.factors.size()) {
        int c = base_compare(a.factors[i].first, b.factors[j].first);
        if (c <= 0) feed(a.factors[i++]);
        else feed(b.factors[j++]);
    }
    while (i < a.factors.size()) feed(a.factors[i++]);
    while (j < b.factors.size()) feed(b.factors[j++]);
    if (has_exp && !exp_arg.is_canonical_zero()) {
        JetExpr e = JetExpr::exp(exp_arg);
        // exp() returns either 1 or a pure atom
        if (!e.is_canonical_one()) {
            const Term& t = e.num().terms[0];
            BaseRef br = t.mono.factors[0].first;
            // insert keeping sort order
            auto pos = std::lower_bound(
                out.factors.begin(), out.factors.end(), br,
                [](const std::pair<BaseRef, int>& f, const BaseRef& r) {
                    return base_compare(f.first, r) < 0;
                });
            out.factors.insert(pos, {br, 1});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Polynomial arithmetic
// ---------------------------------------------------------------------------
Polynomial Polynomial::constant(const Rational& c) {
    Polynomial p;
    if (!c.is_zero()) p.terms.push_back({c, Monomial{}});
    return p;
}

Polynomial Polynomial::from_var(Var v) {
    Polynomial p;
    Monomial m;
    m.factors.push_back({BaseRef{v.code, nullptr}, 1});
    p.terms.push_back({Rational(1), m});
    return p;
}

Polynomial Polynomial::from_atom(const AtomPtr& a) {
    Polynomial p;
    Monomial m;
    m.factors.push_back({BaseRef{-1, a}, 1});
    p.terms.push_back({Rational(1), m});
    return p;
}

Polynomial poly_add(const Polynomial& a, const Polynomial& b) {
    Polynomial out;
    out.terms.reserve(a.terms.size() + b.terms.size());
    size_t i = 0, j = 0;
    while (i < a.terms.size() && j < b.terms.size()) {
        int c = monomial_compare(a.terms[i].mono, b.terms[j].mono);
        if (c < 0) {
            out.terms.push_back(a.terms[i++]);
        } else if (c > 0) {
            out.terms.push_back(b.terms[j++]);
        } else {
            Rational s = a.terms[i].coeff + b.terms[j].coeff;
            if (!s.is_zero()) out.terms.push_back({s, a.terms[i].mono});
            ++i;
            ++j;
        }
    }
    while (i < a.terms.size()) out.terms.push_back(a.terms[i++]);
    while (j < b.terms.size()) out.terms.push_back(b.terms[j++]);
    return out;
}

Polynomial poly_neg(const Polynomial& a) {
    Polynomial out = a;
    for (auto& t : out.terms) t.coeff = -t.coeff;
    return out;
}

Polynomial poly_sub(const Polynomial& a, const Polynomial& b) {
    return poly_add(a, poly_neg(b));
}

Polynomial poly_mul_term(const Polynomial& a, const Term& t) {
    if (t.coeff.is_zero()) return {};
    Polynomial out;
    out.terms.reserve(a.terms.size());
    for (auto& at : a.terms) {
        Rational c = at.coeff * t.coeff;
        Monomial m = monomial_mul(at.mono, t.mono, c);
        out.terms.push_back({c, m});
    }
    // exp merging can disturb sort order and create collisions; re-normalize
    std::sort(out.terms.begin(), out.terms.end(), [](const Term& x, const Term& y) {
        return monomial_compare(x.mono, y.mono) < 0;
    });
    Polynomial merged;
    for (auto& tt : out.terms) {
        if (!merged.terms.empty() &&
            monomial_compare(merged.terms.back().mono, tt.mono) == 0) {
            merged.terms.back().coeff += tt.coeff;
            if (merged.terms.back().coeff.is_zero()) merged.terms.pop_back();
        } else {
            merged.terms.push_back(tt);
        }
    }
    return merged;
}

Polynomial poly_mul(const Polynomial& a, const Polynomial& b) {
    Polynomial out;
    const Polynomial& longer = a.terms.size() >= b.terms.size() ? a : b;
    const Polynomial& shorter = a.terms.size() >= b.terms.size() ? b : a;
    for (auto& t : shorter.terms) out = poly_add(out, poly_mul_term(longer, t));
    return out;
}

Polynomial poly_pow(const Polynomial& a, int e) {
    if (e < 0) throw std::invalid_argument("poly_pow: negative exponent");
    Polynomial r = Polynomial::constant(Rational(1));
    Polynomial base = a;
    while (e > 0) {
        if (e & 1) r = poly_mul(r, base);
        e >>= 1;
        if (e) base = poly_mul(base, base);
    }
    return r;
}

bool poly_equal(const Polynomial& a, const Polynomial& b) {
    if (a.terms.size() != b.terms.size()) return false;
    for (size_t i = 0; i < a.terms.size(); ++i) {
        if (a.terms[i].coeff != b.terms[i].coeff) return false;
        if (monomial_compare(a.terms[i].mono, b.terms[i].mono) != 0) return false;
    }
    return true;
}

namespace {

/// a / b monomial-wise; returns false if not divisible.
bool monomial_divide(const Monomial& a, const Monomial& b, Monomial& out) {
    out.factors.clear();
    size_t i = 0;
    for (auto& [bb, be] : b.factors) {
        while (i < a.factors.size() && base_compare(a.factors[i].first, bb) < 0)
            out.factors.push_back(a.factors[i++]);
        if (i >= a.factors.size() || base_compare(a.factors[i].first, bb) != 0)
            return false;
        if (a.factors[i].second < be) return false;
        if (a.factors[i].second > be)
            out.factors.push_back({a.factors[i].first, a.factors[i].second - be});
        ++i;
    }
    while (i < a.factors.size()) out.factors.push_back(a.factors[i++]);
    return true;
}

Monomial monomial_gcd(const Monomial& a, const Monomial& b) {
    Monomial out;
    size_t i = 0, j = 0;
    while (i < a.factors.size() && j < b.factors.size()) {
        int c = base_compare(a.factors[i].first, b.factors[j].first);
        if (c < 0) ++i;
        else if (c > 0) ++j;
        else {
            out.factors.push_back(
                {a.factors[i].first, std::min(a.factors[i].second, b.factors[j].second)});
            ++i;
            ++j;
        }
    }
    return out;
}

Monomial poly_monomial_content(const Polynomial& p) {
    Monomial m;
    bool first = true;
    for (auto& t : p.terms) {
        if (first) {
            m = t.mono;
            first = false;
        } else {
            m = monomial_gcd(m, t.mono);
        }
        if (m.factors.empty()) break;
    }
    return m;
}

Polynomial poly_div_monomial(const Polynomial& p, const Monomial& m) {
    if (m.factors.empty()) return p;
    Polynomial out;
    out.terms.reserve(p.terms.size());
    for (auto& t : p.terms) {
        Monomial q;
        if (!monomial_divide(t.mono, m, q))
            throw std::logic_error("poly_div_monomial: not divisible");
        out.terms.push_back({t.coeff, q});
    }
    return out;
}

/// Distinct bases appearing in p.
std::vector<BaseRef> poly_bases(const Polynomial& p) {
    std::vector<BaseRef> out;
    for (auto& t : p.terms)
        for (auto& [b, e] : t.mono.factors) {
            bool found = false;
            for (auto& o : out)
                if (base_compare(o, b) == 0) {
                    found = true;
                    break;
                }
            if (!found) out.push_back(b);
        }
    return out;
}

int poly_degree_in(const Polynomial& p, const BaseRef& b) {
    int d = 0;
    for (auto& t : p.terms)
        for (auto& [fb, fe] : t.mono.factors)
            if (base_compare(fb, b) == 0) d = std::max(d, fe);
    return d;
}

/// Coefficient of b^k in p, a polynomial in the remaining bases.
Polynomial poly_coeff_in(const Polynomial& p, const BaseRef& b, int k) {
    Polynomial out;
    for (auto& t : p.terms) {
        int e = 0;
        Monomial rest;
        for (auto& f : t.mono.factors) {
            if (base_compare(f.first, b) == 0) e = f.second;
            else rest.factors.push_back(f);
        }
        if (e == k) out = poly_add(out, Polynomial{{Term{t.coeff, rest}}});
    }
    return out;
}

Polynomial poly_mul_var_pow(const Polynomial& p, const BaseRef& b, int k) {
    if (k == 0) return p;
    Monomial m;
    m.factors.push_back({b, k});
    return poly_mul_term(p, Term{Rational(1), m});
}

}  // namespace

namespace {

/// Exact division in the free polynomial ring (no exp atoms may be present:
/// their merge rule exp(a)exp(b)=exp(a+b) breaks leading-term cancellation).
Polynomial divexact_plain(const Polynomial& a, const Polynomial& b) {
    if (b.is_zero()) throw std::logic_error("poly_divexact: division by zero");
    Polynomial rem = a, quot;
    while (!rem.is_zero()) {
        const Term& lr = rem.leading();
        const Term& lb = b.leading();
        Monomial qm;
        if (!monomial_divide(lr.mono, lb.mono, qm))
            throw std::logic_error("poly_divexact: not exact");
        Term qt{lr.coeff / lb.coeff, qm};
        quot = poly_add(quot, Polynomial{{qt}});
        rem = poly_sub(rem, poly_mul_term(b, qt));
    }
    return quot;
}

/// Subresultant-style gcd, recursive over the base set.
Polynomial gcd_rec(const Polynomial& A, const Polynomial& B);

/// Content of p viewed as univariate in b: gcd of its coefficients.
Polynomial content_in(const Polynomial& p, const BaseRef& b) {
    int d = poly_degree_in(p, b);
    Polynomial c;
    for (int k = 0; k <= d; ++k) {
        Polynomial ck = poly_coeff_in(p, b, k);
        if (ck.is_zero()) continue;
        c = c.is_zero() ? ck : gcd_rec(c, ck);
        if (c.is_constant()) break;
    }
    return c;
}

/// Pseudo-remainder of P by Q, both viewed as univariate in b.
Polynomial pseudo_rem(Polynomial P, const Polynomial& Q, const BaseRef& b) {
    int dq = poly_degree_in(Q, b);
    Polynomial lq = poly_coeff_in(Q, b, dq);
    int dp = poly_degree_in(P, b);
    while (!P.is_zero() && (dp = poly_degree_in(P, b)) >= dq) {
        Polynomial lp = poly_coeff_in(P, b, dp);
        // P := lq*P - lp*b^(dp-dq)*Q
        P = poly_sub(poly_mul(P, lq),
                     poly_mul_var_pow(poly_mul(Q, lp), b, dp - dq));
        if (poly_degree_in(P, b) == dp)
            throw std::logic_error("pseudo_rem: degree did not drop");
    }
    return P;
}

Polynomial gcd_rec(const Polynomial& A, const Polynomial& B) {
    if (A.is_zero()) return B;
    if (B.is_zero()) return A;
    if (A.is_constant() || B.is_constant()) return Polynomial::constant(Rational(1));

    // strip monomial contents
    Monomial ma = poly_monomial_content(A);
    Monomial mb = poly_monomial_content(B);
    Monomial mg = monomial_gcd(ma, mb);
    Polynomial A1 = poly_div_monomial(A, ma);
    Polynomial B1 = poly_div_monomial(B, mb);

    Polynomial g;
    if (A1.is_constant() || B1.is_constant()) {
        g = Polynomial::constant(Rational(1));
    } else {
        // main base: the largest base occurring in either
        std::vector<BaseRef> bases = poly_bases(A1);
        for (auto& b : poly_bases(B1)) {
            bool found = false;
            for (auto& o : bases)
                if (base_compare(o, b) == 0) {
                    found = true;
                    break;
                }
            if (!found) bases.push_back(b);
        }
        BaseRef main = bases[0];
        for (auto& b : bases)
            if (base_compare(b, main) > 0) main = b;

        int da = poly_degree_in(A1, main);
        int db = poly_degree_in(B1, main);
        if (da == 0 || db == 0) {
            // one side free of main: gcd divides the other's content
            const Polynomial& free_side = da == 0 ? A1 : B1;
            const Polynomial& other = da == 0 ? B1 : A1;
            g = gcd_rec(free_side, content_in(other, main));
        } else {
            Polynomial ca = content_in(A1, main);
            Polynomial cb = content_in(B1, main);
            Polynomial cg = gcd_rec(ca, cb);
            Polynomial P = divexact_plain(A1, ca);
            Polynomial Q = divexact_plain(B1, cb);
            if (poly_degree_in(P, main) < poly_degree_in(Q, main)) std::swap(P, Q);
            while (true) {
                Polynomial R = pseudo_rem(P, Q, main);
                if (R.is_zero()) break;
                if (poly_degree_in(R, main) == 0) {
                    Q = Polynomial::constant(Rational(1));
                    break;
                }
                // keep coefficients small: divide by content each round
                Polynomial cr = content_in(R, main);
                R = divexact_plain(R, cr);
                P = Q;
                Q = R;
            }
            if (poly_degree_in(Q, main) > 0) {
                Polynomial cq = content_in(Q, main);
                Q = divexact_plain(Q, cq);
                g = poly_mul(cg, Q);
            } else {
                g = cg;
            }
        }
    }
    // reattach common monomial content
    if (!mg.factors.empty())
        g = poly_mul_term(g, Term{Rational(1), mg});
    return g;
}

// ---------------------------------------------------------------------------
// Laurent rewrite for exp atoms. exp atoms are units whose merge rule breaks
// the free-ring algorithms above, so gcd and exact division first express
// every exp argument as an integer combination over a Q-basis of the
// arguments, substitute exp atoms by powers of fresh formal variables (one
// per basis direction, shifted to keep exponents nonnegative), run the free
// algorithm, and map back.
// ---------------------------------------------------------------------------

constexpr int kExpVarBase = 1 << 20;  // formal variable band, never leaks out

struct MonoLess {
    bool operator()(const Monomial& a, const Monomial& b) const {
        return monomial_compare(a, b) < 0;
    }
};
using SparseVec = std::map<Monomial, Rational, MonoLess>;

struct LaurentContext {
    bool ok = true;                   // false: some exp argument not polynomial
    std::vector<JetExpr> dirs;        // scaled basis directions
    std::map<std::string, std::vector<long>> coords;  // exp-arg str -> coords
    bool empty() const { return dirs.empty(); }
};

LaurentContext build_laurent_ctx(std::initializer_list<const Polynomial*> polys) {
    LaurentContext ctx;
    std::map<std::string, JetExpr> args;  // deterministic order by arg string
    std::function<void(const Polynomial&)> scan = [&](const Polynomial& p) {
        for (auto& t : p.terms)
            for (auto& [b, e] : t.mono.factors)
                if (!b.is_var() && b.atom->kind == AtomKind::Exp) {
                    const JetExpr& a = b.atom->args[0];
                    args.emplace(a.str(), a);
                }
    };
    for (const Polynomial* p : polys) scan(*p);
    if (args.empty()) return ctx;

    // row-echelon basis over Q with monomial pivots
    std::vector<SparseVec> rows;
    std::vector<Monomial> pivots;
    std::vector<std::vector<Rational>> qcoords;  // per arg, per row
    for (auto& [key, arg] : args) {
        if (!arg.den().is_constant()) {
            ctx.ok = false;
            return ctx;
        }
        SparseVec v;
        for (auto& t : arg.num().terms) v[t.mono] = t.coeff;
        std::vector<Rational> cs(rows.size(), Rational(0));
        for (size_t j = 0; j < rows.size(); ++j) {
            auto it = v.find(pivots[j]);
            if (it == v.end()) continue;
            Rational c = it->second;
            cs[j] = c;
            for (auto& [m, r] : rows[j]) {
                auto vit = v.find(m);
                Rational nv = (vit == v.end() ? Rational(0) : vit->second) - c * r;
                if (nv.is_zero()) {
                    if (vit != v.end()) v.erase(vit);
                } else {
                    v[m] = nv;
                }
            }
        }
        if (!v.empty()) {
            Monomial pivot = v.rbegin()->first;  // largest monomial
            Rational pc = v.rbegin()->second;
            SparseVec row;
            for (auto& [m, r] : v) row[m] = r / pc;
            rows.push_back(std::move(row));
            pivots.push_back(pivot);
            cs.push_back(pc);
        }
        qcoords.push_back(std::move(cs));
    }
    // scale each direction so all coordinates become integers
    size_t r = rows.size();
    std::vector<Rational> den_lcm(r, Rational(1));
    for (auto& cs : qcoords)
        for (size_t j = 0; j < cs.size(); ++j)
            den_lcm[j] = rational_int_lcm(den_lcm[j], cs[j].denominator());
    ctx.dirs.reserve(r);
    for (size_t j = 0; j < r; ++j) {
        Polynomial p;
        for (auto& [m, c] : rows[j]) {
            Term t{c / den_lcm[j], m};
            p.terms.push_back(t);
        }
        // SparseVec iterates ascending, matching Polynomial term order
        ctx.dirs.push_back(JetExpr::fraction(p, Polynomial::constant(Rational(1))));
    }
    size_t i = 0;
    for (auto& [key, arg] : args) {
        std::vector<long> ic(r, 0);
        for (size_t j = 0; j < qcoords[i].size(); ++j) {
            Rational scaled = qcoords[i][j] * den_lcm[j];
            if (!scaled.is_integer()) {
                ctx.ok = false;
                return ctx;
            }
            ic[j] = scaled.to_long();
        }
        ctx.coords.emplace(key, std::move(ic));
        ++i;
    }
    return ctx;
}

/// Substitute exp atoms by powers of formal direction variables; exponents
/// shifted per direction by `offsets` (set here) so all are nonnegative.
Polynomial laurent_to_free(const Polynomial& p, const LaurentContext& ctx,
                           std::vector<long>& offsets) {
    size_t r = ctx.dirs.size();
    struct RawTerm {
        Rational coeff;
        std::vector<std::pair<BaseRef, int>> rest;
        std::vector<long> exps;
    };
    std::vector<RawTerm> raw;
    raw.reserve(p.terms.size());
    std::vector<long> mins(r, 0);
    bool first = true;
    for (auto& t : p.terms) {
        RawTerm rt;
        rt.coeff = t.coeff;
        rt.exps.assign(r, 0);
        for (auto& f : t.mono.factors) {
            if (!f.first.is_var() && f.first.atom->kind == AtomKind::Exp) {
                const auto& ic = ctx.coords.at(f.first.atom->args[0].str());
                for (size_t j = 0; j < r; ++j) rt.exps[j] += ic[j] * f.second;
            } else {
                rt.rest.push_back(f);
            }
        }
        if (first) {
            mins = rt.exps;
            first = false;
        } else {
            for (size_t j = 0; j < r; ++j) mins[j] = std::min(mins[j], rt.exps[j]);
        }
        raw.push_back(std::move(rt));
    }
    offsets = mins;
    Polynomial out;
    out.terms.reserve(raw.size());
    for (auto& rt : raw) {
        Monomial m;
        m.factors = rt.rest;
        for (size_t j = 0; j < r; ++j) {
            long e = rt.exps[j] - mins[j];
            if (e != 0)
                m.factors.push_back({BaseRef{kExpVarBase + (int)j, nullptr}, (int)e});
        }
        std::sort(m.factors.begin(), m.factors.end(),
                  [](const std::pair<BaseRef, int>& x, const std::pair<BaseRef, int>& y) {
                      return base_compare(x.first, y.first) < 0;
                  });
        out.terms.push_back({rt.coeff, m});
    }
    std::sort(out.terms.begin(), out.terms.end(), [](const Term& x, const Term& y) {
        return monomial_compare(x.mono, y.mono) < 0;
    });
    return out;
}

/// Inverse of laurent_to_free; `gamma` adds per-direction exponents (units
/// carried over from offsets of the operands).
Polynomial laurent_from_free(const Polynomial& p, const LaurentContext& ctx,
                             const std::vector<long>& gamma) {
    size_t r = ctx.dirs.size();
    Polynomial out;
    out.terms.reserve(p.terms.size());
    for (auto& t : p.terms) {
        JetExpr arg;
        Monomial m;
        for (auto& f : t.mono.factors) {
            if (f.first.is_var() && f.first.var_code >= kExpVarBase) {
                size_t j = f.first.var_code - kExpVarBase;
                arg = arg + JetExpr((long)f.second + gamma[j]) * ctx.dirs[j];
            } else {
                m.factors.push_back(f);
            }
        }
        // directions absent from this term still contribute their gamma shift
        std::vector<bool> seen(r, false);
        for (auto& f : t.mono.factors)
            if (f.first.is_var() && f.first.var_code >= kExpVarBase)
                seen[f.first.var_code - kExpVarBase] = true;
        for (size_t j = 0; j < r; ++j)
            if (!seen[j] && gamma[j] != 0) arg = arg + JetExpr(gamma[j]) * ctx.dirs[j];
        if (!arg.is_canonical_zero()) {
            JetExpr ea = JetExpr::exp(arg);
            if (!ea.is_canonical_one()) {
                BaseRef br = ea.num().terms[0].mono.factors[0].first;
                auto pos = std::lower_bound(
                    m.factors.begin(), m.factors.end(), br,
                    [](const std::pair<BaseRef, int>& f, const BaseRef& rr) {
                        return base_compare(f.first, rr) < 0;
                    });
                m.factors.insert(pos, {br, 1});
            }
        }
        out.terms.push_back({t.coeff, m});
    }
    std::sort(out.terms.begin(), out.terms.end(), [](const Term& x, const Term& y) {
        return monomial_compare(x.mono, y.mono) < 0;
    });
    return out;
}

Polynomial gcd_monic(Polynomial g) {
    if (g.is_zero()) return g;
    Rational lc = g.leading().coeff;
    if (!lc.is_one())
        for (auto& t : g.terms) t.coeff /= lc;
    return g;
}

}  // namespace

Polynomial poly_gcd(const Polynomial& a, const Polynomial& b) {
    LaurentContext ctx = build_laurent_ctx({&a, &b});
    if (ctx.empty()) return gcd_monic(gcd_rec(a, b));
    if (!ctx.ok) {
        // exotic exp arguments: a unit gcd is always sound
        return Polynomial::constant(Rational(1));
    }
    std::vector<long> offa, offb;
    Polynomial fa = laurent_to_free(a, ctx, offa);
    Polynomial fb = laurent_to_free(b, ctx, offb);
    Polynomial g = gcd_monic(gcd_rec(fa, fb));
    return laurent_from_free(g, ctx, std::vector<long>(ctx.dirs.size(), 0));
}

Polynomial poly_divexact(const Polynomial& a, const Polynomial& b) {
    if (a.is_zero()) return a;
    LaurentContext ctx = build_laurent_ctx({&a, &b});
    if (ctx.empty()) return divexact_plain(a, b);
    if (!ctx.ok) return divexact_plain(a, b);  // may throw; documented contract
    std::vector<long> offa, offb;
    Polynomial fa = laurent_to_free(a, ctx, offa);
    Polynomial fb = laurent_to_free(b, ctx, offb);
    Polynomial q = divexact_plain(fa, fb);
    std::vector<long> gamma(ctx.dirs.size());
    for (size_t j = 0; j < gamma.size(); ++j) gamma[j] = offa[j] - offb[j];
    return laurent_from_free(q, ctx, gamma);
}

// ---------------------------------------------------------------------------
// JetExpr
// ---------------------------------------------------------------------------
JetExpr JetExpr::variable(Var v) {
    return fraction(Polynomial::from_var(v), Polynomial::constant(Rational(1)));
}

JetExpr JetExpr::fraction(Polynomial num, Polynomial den) {
    JetExpr e;
    e.num_ = std::move(num);
    e.den_ = std::move(den);
    e.normalize();
    return e;
}

bool JetExpr::is_canonical_one() const {
    return den_.is_constant() && !den_.is_zero() && num_.is_constant() &&
           num_.terms.size() == 1 && num_.terms[0].coeff.is_one() &&
           den_.terms[0].coeff.is_one();
}

std::optional<Rational> JetExpr::as_constant() const {
    if (!num_.is_constant() || !den_.is_constant()) return std::nullopt;
    if (num_.is_zero()) return Rational(0);
    return num_.terms[0].coeff / den_.terms[0].coeff;
}

void JetExpr::normalize() {
    if (den_.is_zero()) throw std::domain_error("JetExpr: zero denominator");
    if (num_.is_zero()) {
        den_ = Polynomial::constant(Rational(1));
        return;
    }
    if (den_.is_constant()) {
        // nothing to reduce; also the recursion base for the Laurent path
        // below, whose back-substitution rebuilds exp atoms
        Rational c = den_.leading().coeff;
        if (!c.is_one()) {
            for (auto& t : num_.terms) t.coeff /= c;
            den_ = Polynomial::constant(Rational(1));
        }
        return;
    }
    LaurentContext ctx = build_laurent_ctx({&num_, &den_});
    if (ctx.empty()) {
        Polynomial g = gcd_rec(num_, den_);
        if (!g.is_constant()) {
            num_ = divexact_plain(num_, g);
            den_ = divexact_plain(den_, g);
        }
    } else if (ctx.ok) {
        std::vector<long> offn, offd;
        Polynomial pn = laurent_to_free(num_, ctx, offn);
        Polynomial pd = laurent_to_free(den_, ctx, offd);
        Polynomial g = gcd_rec(pn, pd);
        if (!g.is_constant()) {
            pn = divexact_plain(pn, g);
            pd = divexact_plain(pd, g);
        }
        // strip direction content still common to the denominator
        size_t r = ctx.dirs.size();
        std::vector<long> c(r, 0);
        for (size_t j = 0; j < r; ++j) {
            BaseRef ev{kExpVarBase + (int)j, nullptr};
            int m = -1;
            for (auto& t : pd.terms) {
                int e = 0;
                for (auto& f : t.mono.factors)
                    if (base_compare(f.first, ev) == 0) e = f.second;
                m = m < 0 ? e : std::min(m, e);
                if (m == 0) break;
            }
            c[j] = m;
        }
        Monomial strip;
        for (size_t j = 0; j < r; ++j)
            if (c[j] > 0)
                strip.factors.push_back({BaseRef{kExpVarBase + (int)j, nullptr},
                                         (int)c[j]});
        std::sort(strip.factors.begin(), strip.factors.end(),
                  [](const std::pair<BaseRef, int>& x,
                     const std::pair<BaseRef, int>& y) {
                      return base_compare(x.first, y.first) < 0;
                  });
        if (!strip.factors.empty()) pd = poly_div_monomial(pd, strip);
        std::vector<long> gamma(r);
        for (size_t j = 0; j < r; ++j) gamma[j] = offn[j] - offd[j] - c[j];
        num_ = laurent_from_free(pn, ctx, gamma);
        den_ = laurent_from_free(pd, ctx, std::vector<long>(r, 0));
    } else {
        // exotic exp arguments: reduction is best effort, canonical scaling
        // below still applies
        try {
            Polynomial g = gcd_monic(gcd_rec(num_, den_));
            if (!g.is_constant()) {
                num_ = divexact_plain(num_, g);
                den_ = divexact_plain(den_, g);
            }
        } catch (const std::logic_error&) {
        }
    }
    Rational lc = den_.leading().coeff;
    if (!lc.is_one()) {
        for (auto& t : num_.terms) t.coeff /= lc;
        for (auto& t : den_.terms) t.coeff /= lc;
    }
}

JetExpr operator+(const JetExpr& a, const JetExpr& b) {
    if (poly_equal(a.den_, b.den_))
        return JetExpr::fraction(poly_add(a.num_, b.num_), a.den_);
    return JetExpr::fraction(
        poly_add(poly_mul(a.num_, b.den_), poly_mul(b.num_, a.den_)),
        poly_mul(a.den_, b.den_));
}

JetExpr operator-(const JetExpr& a, const JetExpr& b) {
    if (poly_equal(a.den_, b.den_))
        return JetExpr::fraction(poly_sub(a.num_, b.num_), a.den_);
    return JetExpr::fraction(
        poly_sub(poly_mul(a.num_, b.den_), poly_mul(b.num_, a.den_)),
        poly_mul(a.den_, b.den_));
}

JetExpr operator*(const JetExpr& a, const JetExpr& b) {
    return JetExpr::fraction(poly_mul(a.num_, b.num_), poly_mul(a.den_, b.den_));
}

JetExpr operator/(const JetExpr& a, const JetExpr& b) {
    if (b.num_.is_zero()) throw std::domain_error("JetExpr: division by zero");
    return JetExpr::fraction(poly_mul(a.num_, b.den_), poly_mul(a.den_, b.num_));
}

JetExpr JetExpr::operator-() const {
    JetExpr e = *this;
    e.num_ = poly_neg(e.num_);
    return e;
}

JetExpr JetExpr::pow(int e) const {
    if (e == 0) return JetExpr(1);
    if (e > 0) return fraction(poly_pow(num_, e), poly_pow(den_, e));
    if (num_.is_zero()) throw std::domain_error("JetExpr: 0 to negative power");
    return fraction(poly_pow(den_, -e), poly_pow(num_, -e));
}

JetExpr operator+(const JetExpr& a, long b) { return a + JetExpr(b); }
JetExpr operator+(long a, const JetExpr& b) { return JetExpr(a) + b; }
JetExpr operator-(const JetExpr& a, long b) { return a - JetExpr(b); }
JetExpr operator-(long a, const JetExpr& b) { return JetExpr(a) - b; }
JetExpr operator*(const JetExpr& a, long b) { return a * JetExpr(b); }
JetExpr operator*(long a, const JetExpr& b) { return JetExpr(a) * b; }
JetExpr operator/(const JetExpr& a, long b) { return a / JetExpr(b); }
JetExpr operator/(long a, const JetExpr& b) { return JetExpr(a) / b; }

// ---------------------------------------------------------------------------
// Differentiation
// ---------------------------------------------------------------------------
namespace {

JetExpr atom_partial(const AtomPtr& a, Var v);

JetExpr poly_partial(const Polynomial& p, Var v) {
    JetExpr sum;
    for (auto& t : p.terms) {
        for (size_t i = 0; i < t.mono.factors.size(); ++i) {
            auto& [b, e] = t.mono.factors[i];
            JetExpr dbase;
            if (b.is_var()) {
                if (b.var_code != v.code) continue;
                dbase = JetExpr(1);
            } else {
                dbase = atom_partial(b.atom, v);
                if (dbase.is_canonical_zero()) continue;
            }
            // coeff * e * base^(e-1) * dbase * (other factors)
            Monomial rest;
            for (size_t j = 0; j < t.mono.factors.size(); ++j) {
                if (j == i) {
                    if (e > 1) rest.factors.push_back({b, e - 1});
                } else {
                    rest.factors.push_back(t.mono.factors[j]);
                }
            }
            JetExpr piece = JetExpr::fraction(Polynomial{{Term{t.coeff * Rational(e), rest}}},
                                              Polynomial::constant(Rational(1)));
            sum = sum + piece * dbase;
        }
    }
    return sum;
}

JetExpr atom_partial(const AtomPtr& a, Var v) {
    switch (a->kind) {
        case AtomKind::Func: {
            JetExpr sum;
            for (size_t i = 0; i < a->args.size(); ++i) {
                JetExpr da = a->args[i].diff(v);
                if (da.is_canonical_zero()) continue;
                std::vector<int> d = a->deriv;
                d[i] += 1;
                sum = sum + da * JetExpr::function(a->sym, a->args, d);
            }
            return sum;
        }
        case AtomKind::Exp: {
            JetExpr da = a->args[0].diff(v);
            if (da.is_canonical_zero()) return JetExpr(0);
            return da * JetExpr::exp(a->args[0]);
        }
        case AtomKind::Ln: {
            JetExpr da = a->args[0].diff(v);
            if (da.is_canonical_zero()) return JetExpr(0);
            return da / a->args[0];
        }
        case AtomKind::Sin: {
            JetExpr da = a->args[0].diff(v);
            if (da.is_canonical_zero()) return JetExpr(0);
            return da * JetExpr::cos(a->args[0]);
        }
        case AtomKind::Cos: {
            JetExpr da = a->args[0].diff(v);
            if (da.is_canonical_zero()) return JetExpr(0);
            return JetExpr(0) - da * JetExpr::sin(a->args[0]);
        }
    }
    return JetExpr(0);
}

}  // namespace

JetExpr JetExpr::diff(Var v) const {
    JetExpr dn = poly_partial(num_, v);
    JetExpr dd = poly_partial(den_, v);
    JetExpr numE = fraction(num_, Polynomial::constant(Rational(1)));
    JetExpr denE = fraction(den_, Polynomial::constant(Rational(1)));
    if (dd.is_canonical_zero()) return dn / denE;
    return (dn * denE - numE * dd) / (denE * denE);
}

JetExpr JetExpr::diff(Var v, int order) const {
    JetExpr e = *this;
    for (int i = 0; i < order; ++i) e = e.diff(v);
    return e;
}

// ---------------------------------------------------------------------------
// Substitution
// ---------------------------------------------------------------------------
namespace {

JetExpr subst_poly(const Polynomial& p, const std::map<int, JetExpr>& var_map);

JetExpr subst_atom(const AtomPtr& a, const std::map<int, JetExpr>& var_map) {
    bool touched = false;
    std::vector<JetExpr> new_args;
    new_args.reserve(a->args.size());
    for (auto& arg : a->args) {
        JetExpr s = arg.substitute(var_map);
        if (!(s == arg)) touched = true;
        new_args.push_back(std::move(s));
    }
    if (!touched)
        return JetExpr::fraction(Polynomial::from_atom(a),
                                 Polynomial::constant(Rational(1)));
    switch (a->kind) {
        case AtomKind::Func:
            return JetExpr::function(a->sym, std::move(new_args), a->deriv);
        case AtomKind::Exp:
            return JetExpr::exp(new_args[0]);
        case AtomKind::Ln:
            return JetExpr::ln(new_args[0]);
        case AtomKind::Sin:
            return JetExpr::sin(new_args[0]);
        case AtomKind::Cos:
            return JetExpr::cos(new_args[0]);
    }
    throw std::logic_error("subst_atom: unreachable");
}

JetExpr subst_poly(const Polynomial& p, const std::map<int, JetExpr>& var_map) {
    JetExpr sum;
    for (auto& t : p.terms) {
        JetExpr prod(t.coeff);
        for (auto& [b, e] : t.mono.factors) {
            JetExpr factor;
            if (b.is_var()) {
                auto it = var_map.find(b.var_code);
                factor = it != var_map.end() ? it->second : JetExpr::variable(b.var());
            } else {
                factor = subst_atom(b.atom, var_map);
            }
            prod = prod * factor.pow(e);
        }
        sum = sum + prod;
    }
    return sum;
}

}  // namespace

JetExpr JetExpr::substitute(const std::map<int, JetExpr>& var_map) const {
    if (var_map.empty()) return *this;
    JetExpr n = subst_poly(num_, var_map);
    JetExpr d = subst_poly(den_, var_map);
    return n / d;
}

// ---------------------------------------------------------------------------
// Introspection
// ---------------------------------------------------------------------------
namespace {

void collect_vars(const Polynomial& p, std::set<int>& out);

void collect_vars_expr(const JetExpr& e, std::set<int>& out) {
    collect_vars(e.num(), out);
    collect_vars(e.den(), out);
}

void collect_vars(const Polynomial& p, std::set<int>& out) {
    for (auto& t : p.terms)
        for (auto& [b, e] : t.mono.factors) {
            if (b.is_var()) {
                out.insert(b.var_code);
            } else {
                for (auto& arg : b.atom->args) collect_vars_expr(arg, out);
            }
        }
}

void collect_atoms(const Polynomial& p, std::map<std::string, AtomPtr>& out) {
    for (auto& t : p.terms)
        for (auto& [b, e] : t.mono.factors)
            if (!b.is_var()) out.emplace(b.atom->key(), b.atom);
}

bool any_atom_poly(const Polynomial& p, const std::function<bool(const Atom&)>& pred);

bool any_atom_expr(const JetExpr& e, const std::function<bool(const Atom&)>& pred) {
    return any_atom_poly(e.num(), pred) || any_atom_poly(e.den(), pred);
}

bool any_atom_poly(const Polynomial& p, const std::function<bool(const Atom&)>& pred) {
    for (auto& t : p.terms)
        for (auto& [b, e] : t.mono.factors)
            if (!b.is_var()) {
                if (pred(*b.atom)) return true;
                for (auto& arg : b.atom->args)
                    if (any_atom_expr(arg, pred)) return true;
            }
    return false;
}

}  // namespace

std::vector<Var> JetExpr::variables() const {
    std::set<int> codes;
    collect_vars_expr(*this, codes);
    std::vector<Var> out;
    for (int c : codes) out.push_back({c});
    return out;
}

int JetExpr::order() const {
    int k = -1;
    for (Var v : variables())
        if (v.is_u()) k = std::max(k, v.u_order());
    return k;
}

bool JetExpr::depends_on(Var v) const {
    std::set<int> codes;
    collect_vars_expr(*this, codes);
    return codes.count(v.code) > 0;
}

std::vector<AtomPtr> JetExpr::atoms() const {
    std::map<std::string, AtomPtr> m;
    collect_atoms(num_, m);
    collect_atoms(den_, m);
    std::vector<AtomPtr> out;
    for (auto& [k, v] : m) out.push_back(v);
    return out;
}

bool JetExpr::any_atom(const std::function<bool(const Atom&)>& p) const {
    return any_atom_expr(*this, p);
}

int JetExpr::degree_in(Var v) const {
    BaseRef b{v.code, nullptr};
    return poly_degree_in(num_, b);
}

std::vector<JetExpr> JetExpr::coefficients_in(Var v) const {
    BaseRef b{v.code, nullptr};
    std::set<int> den_codes;
    collect_vars(den_, den_codes);
    if (den_codes.count(v.code))
        throw std::logic_error("coefficients_in: denominator depends on " + v.str());
    // reject hidden dependence through atom arguments in the numerator too
    for (auto& t : num_.terms)
        for (auto& [fb, fe] : t.mono.factors)
            if (!fb.is_var())
                for (auto& arg : fb.atom->args)
                    if (arg.depends_on(v))
                        throw std::logic_error(
                            "coefficients_in: atom argument depends on " + v.str());
    int d = poly_degree_in(num_, b);
    std::vector<JetExpr> out;
    for (int k = 0; k <= d; ++k)
        out.push_back(fraction(poly_coeff_in(num_, b, k), den_));
    return out;
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------
namespace {

std::string atom_str(const AtomPtr& a);

std::string monomial_str(const Monomial& m) {
    std::string s;
    for (auto& [b, e] : m.factors) {
        if (!s.empty()) s += "*";
        s += b.is_var() ? b.var().str() : atom_str(b.atom);
        if (e != 1) s += "^" + std::to_string(e);
    }
    return s;
}

std::string poly_str(const Polynomial& p) {
    if (p.is_zero()) return "0";
    std::string s;
    // print leading (largest) terms first
    for (auto it = p.terms.rbegin(); it != p.terms.rend(); ++it) {
        const Term& t = *it;
        Rational c = t.coeff;
        bool neg = c.sign() < 0;
        if (s.empty()) {
            if (neg) s += "-";
        } else {
            s += neg ? " - " : " + ";
        }
        Rational ac = c.abs();
        std::string ms = monomial_str(t.mono);
        if (ms.empty()) {
            s += ac.str();
        } else if (ac.is_one()) {
            s += ms;
        } else {
            s += ac.str() + "*" + ms;
        }
    }
    return s;
}

std::string atom_str(const AtomPtr& a) {
    switch (a->kind) {
        case AtomKind::Exp:
            return "exp(" + a->args[0].str() + ")";
        case AtomKind::Ln:
            return "ln(" + a->args[0].str() + ")";
        case AtomKind::Sin:
            return "sin(" + a->args[0].str() + ")";
        case AtomKind::Cos:
            return "cos(" + a->args[0].str() + ")";
        case AtomKind::Func:
            break;
    }
    const auto& sym = a->sym;
    if (sym->arity == 0) return sym->name;
    std::string args;
    for (size_t i = 0; i < a->args.size(); ++i) {
        if (i) args += ",";
        args += a->args[i].str();
    }
    // The diff(...) form re-parses as a derivative operator, so it is only
    // faithful when differentiating the printed variable touches exactly the
    // intended slot: the slot holds a plain variable no other slot depends
    // on, and an x-slot additionally requires a jet-free atom (diff(.,x)
    // reads back as the total x-derivative).
    bool plain = true;
    bool diff_x = false;
    for (size_t i = 0; i < a->deriv.size() && plain; ++i) {
        if (a->deriv[i] == 0) continue;
        const JetExpr& arg = a->args[i];
        bool is_plain_var =
            arg.den().is_constant() && arg.num().terms.size() == 1 &&
            arg.num().terms[0].coeff.is_one() &&
            arg.num().terms[0].mono.factors.size() == 1 &&
            arg.num().terms[0].mono.factors[0].first.is_var() &&
            arg.num().terms[0].mono.factors[0].second == 1;
        if (!is_plain_var) {
            plain = false;
            break;
        }
        Var v = arg.num().terms[0].mono.factors[0].first.var();
        if (v == Var::x()) diff_x = true;
        for (size_t j = 0; j < a->args.size(); ++j)
            if (j != i && a->args[j].depends_on(v)) plain = false;
    }
    if (plain && diff_x)
        for (const auto& arg : a->args)
            for (Var v : arg.variables())
                if (v.is_u() || v.is_ut()) plain = false;
    bool has_deriv = false;
    for (int d : a->deriv) has_deriv = has_deriv || d > 0;
    if (!has_deriv) return sym->name + "(" + args + ")";
    if (plain) {
        std::string s = sym->name + "(" + args + ")";
        for (size_t i = 0; i < a->deriv.size(); ++i) {
            if (a->deriv[i] == 0) continue;
            std::string v = a->args[i].str();
            s = "diff(" + s + "," + v +
                (a->deriv[i] > 1 ? "," + std::to_string(a->deriv[i]) : "") + ")";
        }
        return s;
    }
    std::string s = sym->name + "_d";
    for (size_t i = 0; i < a->deriv.size(); ++i) {
        if (i) s += "_";
        s += std::to_string(a->deriv[i]);
    }
    return s + "(" + args + ")";
}

}  // namespace

std::string JetExpr::str() const {
    if (num_.is_zero()) return "0";
    if (den_.is_constant()) return poly_str(num_);  // den is monic, hence 1
    return "(" + poly_str(num_) + ")/(" + poly_str(den_) + ")";
}

// ---------------------------------------------------------------------------
// Numeric evaluation
// ---------------------------------------------------------------------------
namespace {

double eval_atom(const AtomPtr& a, const EvalPoint& pt) {
    switch (a->kind) {
        case AtomKind::Func: {
            auto it = pt.atoms.find(a->key());
            if (it == pt.atoms.end())
                throw UnboundSymbol("evaluate: no value for atom " + a->key());
            return it->second;
        }
        case AtomKind::Exp:
            return std::exp(evaluate(a->args[0], pt));
        case AtomKind::Ln: {
            double v = evaluate(a->args[0], pt);
            if (v <= 0) throw EvalDomainError("evaluate: ln of non-positive value");
            return std::log(v);
        }
        case AtomKind::Sin:
            return std::sin(evaluate(a->args[0], pt));
        case AtomKind::Cos:
            return std::cos(evaluate(a->args[0], pt));
    }
    throw std::logic_error("eval_atom: unreachable");
}

double eval_poly(const Polynomial& p, const EvalPoint& pt) {
    double sum = 0.0;
    for (auto& t : p.terms) {
        double prod = t.coeff.to_double();
        for (auto& [b, e] : t.mono.factors) {
            double base;
            if (b.is_var()) {
                auto it = pt.vars.find(b.var_code);
                if (it == pt.vars.end())
                    throw UnboundSymbol("evaluate: no value for variable " +
                                        b.var().str());
                base = it->second;
            } else {
                base = eval_atom(b.atom, pt);
            }
            prod *= std::pow(base, e);
        }
        sum += prod;
    }
    return sum;
}

}  // namespace

double evaluate(const JetExpr& e, const EvalPoint& point) {
    double n = eval_poly(e.num(), point);
    double d = eval_poly(e.den(), point);
    if (std::abs(d) < 1e-12)
        throw EvalDomainError("evaluate: denominator vanished at sample point");
    return n / d;
}

// ---------------------------------------------------------------------------
// Zero decision
// ---------------------------------------------------------------------------
namespace {

void collect_func_atoms(const JetExpr& e, std::map<std::string, AtomPtr>& out);

void collect_func_atoms_poly(const Polynomial& p, std::map<std::string, AtomPtr>& out) {
    for (auto& t : p.terms)
        for (auto& [b, ex] : t.mono.factors)
            if (!b.is_var()) {
                if (b.atom->kind == AtomKind::Func) out.emplace(b.atom->key(), b.atom);
                for (auto& arg : b.atom->args) collect_func_atoms(arg, out);
            }
}

void collect_func_atoms(const JetExpr& e, std::map<std::string, AtomPtr>& out) {
    collect_func_atoms_poly(e.num(), out);
    collect_func_atoms_poly(e.den(), out);
}

}  // namespace

ZeroResult is_zero(const JetExpr& e, unsigned seed, int samples, double tol) {
    ZeroResult res;
    if (e.is_canonical_zero()) {
        res.kind = ZeroKind::Yes;
        return res;
    }
    std::mt19937 rng(seed);
    std::uniform_int_distribution<int> den_dist(1, 3333);
    std::uniform_int_distribution<int> sign_dist(0, 1);

    auto rand_rational = [&]() {
        int q = den_dist(rng);
        int lo = (q + 2) / 3, hi = 3 * q;
        std::uniform_int_distribution<int> num_dist(lo, std::min(hi, 9999));
        double v = (double)num_dist(rng) / q;
        return sign_dist(rng) ? v : -v;
    };

    std::set<int> var_codes;
    collect_vars_expr(e, var_codes);
    std::map<std::string, AtomPtr> func_atoms;
    collect_func_atoms(e, func_atoms);

    std::vector<AtomPtr> fa;
    for (auto& [k, a] : func_atoms) fa.push_back(a);

    // Distinct atoms of the same symbol and derivative index are sampled as
    // independent coordinates. That is only realizable by an actual function
    // when their argument tuples differ at the point, so points where two
    // such atoms collide on argument values are rejected.
    auto args_collide = [&](const EvalPoint& pt) {
        for (size_t i = 0; i < fa.size(); ++i)
            for (size_t j = i + 1; j < fa.size(); ++j) {
                if (fa[i]->sym->name != fa[j]->sym->name) continue;
                if (fa[i]->deriv != fa[j]->deriv) continue;
                bool close = true;
                for (size_t k = 0; k < fa[i]->args.size() && close; ++k) {
                    double vi = evaluate(fa[i]->args[k], pt);
                    double vj = evaluate(fa[j]->args[k], pt);
                    close = std::abs(vi - vj) < 1e-6;
                }
                if (close) return true;
            }
        return false;
    };

    int done = 0, attempts = 0;
    while (done < samples && attempts < samples * 16) {
        ++attempts;
        EvalPoint pt;
        for (int c : var_codes) pt.vars[c] = rand_rational();
        for (auto& [k, a] : func_atoms) pt.atoms[k] = rand_rational();
        double v;
        try {
            if (args_collide(pt)) continue;
            v = evaluate(e, pt);
        } catch (const EvalDomainError&) {
            continue;  // unlucky point; resample
        }
        if (!std::isfinite(v)) continue;
        ++done;
        if (std::abs(v) > tol) {
            res.kind = ZeroKind::No;
            ZeroWitness w;
            for (auto& [c, val] : pt.vars) w.point[Var{c}.str()] = val;
            for (auto& [k, val] : pt.atoms) w.point[k] = val;
            w.value = v;
            res.witness = w;
            return res;
        }
    }
    res.kind = ZeroKind::ProbablyZero;
    return res;
}

}  // namespace jetcl
