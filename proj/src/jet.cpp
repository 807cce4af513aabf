#include "jetcl/jet.hpp"

#include <algorithm>
#include <climits>

namespace jetcl {

EvolutionEquation::EvolutionEquation(JetExpr h) : rhs(std::move(h)) {
    if (rhs.order() > 2)
        throw std::invalid_argument("EvolutionEquation: right-hand side of order > 2");
    for (Var v : rhs.variables())
        if (v.is_ut())
            throw std::invalid_argument("EvolutionEquation: u_t-band variable in rhs");
    if (is_zero(rhs.diff(Var::u(2))).kind != ZeroKind::No)
        throw std::invalid_argument("EvolutionEquation: rhs must depend on u_xx");
}

JetExpr total_x(const JetExpr& e) {
    JetExpr r = e.diff(Var::x());
    for (Var v : e.variables()) {
        if (v.is_u())
            r = r + JetExpr::variable(Var::u(v.u_order() + 1)) * e.diff(v);
        else if (v.is_ut())
            r = r + JetExpr::variable(Var::ut(v.ut_order() + 1)) * e.diff(v);
    }
    return r;
}

JetExpr total_x(const JetExpr& e, int order) {
    JetExpr r = e;
    for (int i = 0; i < order; ++i) r = total_x(r);
    return r;
}

JetExpr total_t(const JetExpr& e, const JetExpr& H) {
    int top = -1;
    for (Var v : e.variables()) {
        if (v.is_ut())
            throw std::invalid_argument("total_t: expression carries u_t-band variables");
        if (v.is_u()) top = std::max(top, v.u_order());
    }
    JetExpr r = e.diff(Var::t());
    JetExpr dxkH = H;
    for (int k = 0; k <= top; ++k) {
        JetExpr d = e.diff(Var::u(k));
        if (!d.is_canonical_zero()) r = r + dxkH * d;
        if (k < top) dxkH = total_x(dxkH);
    }
    return r;
}

JetExpr total_t_offshell(const JetExpr& e) {
    JetExpr r = e.diff(Var::t());
    for (Var v : e.variables()) {
        if (v.is_ut())
            throw std::invalid_argument(
                "total_t_offshell: expression carries u_t-band variables");
        if (v.is_u())
            r = r + JetExpr::variable(Var::ut(v.u_order())) * e.diff(v);
    }
    return r;
}

JetExpr euler_u(const JetExpr& e) {
    JetExpr sum;
    int n = e.order();
    for (int k = 0; k <= n; ++k) {
        JetExpr d = e.diff(Var::u(k));
        if (d.is_canonical_zero()) continue;
        d = total_x(d, k);
        sum = (k % 2) ? sum - d : sum + d;
    }
    return sum;
}

namespace {

/// Antiderivative in v of a lone atom whose v-dependence sits in a plain-v
/// slot (or an exp with argument linear in v); nullopt when out of pattern.
std::optional<JetExpr> atom_antideriv(const AtomPtr& a, Var v, Declarations& decls) {
    switch (a->kind) {
        case AtomKind::Func: {
            int slot = -1;
            for (size_t i = 0; i < a->args.size(); ++i) {
                if (!a->args[i].depends_on(v)) continue;
                if (slot >= 0) return std::nullopt;
                slot = (int)i;
            }
            if (slot < 0 || !(a->args[slot] == JetExpr::variable(v)))
                return std::nullopt;
            if (a->deriv[slot] >= 1) {
                std::vector<int> d = a->deriv;
                d[slot] -= 1;
                return JetExpr::function(a->sym, a->args, d);
            }
            if (a->sym->arity == 1)
                return JetExpr::function(decls.antiderivative(a->sym), a->args);
            return std::nullopt;
        }
        case AtomKind::Exp: {
            JetExpr alpha = a->args[0].diff(v);
            if (alpha.is_canonical_zero() || alpha.depends_on(v)) return std::nullopt;
            return JetExpr::exp(a->args[0]) / alpha;
        }
        default:
            return std::nullopt;
    }
}

}  // namespace

JetExpr integrate_wrt(const JetExpr& e, Var v, Declarations& decls) {
    if (e.is_canonical_zero()) return e;

    // split off the v-monomial content of the denominator
    int m = INT_MAX;
    for (auto& t : e.den().terms) m = std::min(m, t.mono.degree_of(v));
    JetExpr shifted = e * JetExpr::variable(v).pow(m);  // v-content cancels
    JetExpr den_rest = JetExpr::fraction(shifted.den(), Polynomial::constant(Rational(1)));
    if (den_rest.depends_on(v)) {
        // one extra pattern: v-free numerator over a denominator linear in v
        JetExpr alpha = den_rest.diff(v);
        JetExpr numE =
            JetExpr::fraction(shifted.num(), Polynomial::constant(Rational(1)));
        if (m == 0 && !numE.depends_on(v) && !alpha.depends_on(v) &&
            !alpha.is_canonical_zero())
            return numE / alpha * JetExpr::ln(den_rest);
        throw UnsupportedIntegrand("integrate_wrt: denominator depends on " + v.str());
    }

    JetExpr sum;
    for (auto& t : shifted.num().terms) {
        int p = 0;
        std::vector<std::pair<AtomPtr, int>> vatoms;
        Monomial rest;
        for (auto& [b, ex] : t.mono.factors) {
            if (b.is_var() && b.var_code == v.code) {
                p = ex;
                continue;
            }
            bool dep = false;
            if (!b.is_var())
                for (auto& arg : b.atom->args) dep = dep || arg.depends_on(v);
            if (dep)
                vatoms.push_back({b.atom, ex});
            else
                rest.factors.push_back({b, ex});
        }
        int q = p - m;
        JetExpr coeff = JetExpr::fraction(Polynomial{{Term{t.coeff, rest}}},
                                          Polynomial::constant(Rational(1)));
        JetExpr part;
        if (vatoms.empty()) {
            if (q == -1)
                part = JetExpr::ln(JetExpr::variable(v));
            else
                part = JetExpr::variable(v).pow(q + 1) / JetExpr(q + 1);
        } else if (vatoms.size() == 1 && vatoms[0].second == 1 && q >= 0) {
            auto anti = atom_antideriv(vatoms[0].first, v, decls);
            if (!anti)
                throw UnsupportedIntegrand("integrate_wrt: atom " +
                                           vatoms[0].first->key() +
                                           " has no antiderivative pattern in " +
                                           v.str());
            if (q == 0) {
                part = *anti;
            } else {
                // integration by parts, recursing with the new atom
                part = JetExpr::variable(v).pow(q) * *anti -
                       JetExpr(q) * integrate_wrt(
                                        JetExpr::variable(v).pow(q - 1) * *anti, v,
                                        decls);
            }
        } else {
            throw UnsupportedIntegrand("integrate_wrt: unsupported term shape in " +
                                       v.str());
        }
        sum = sum + coeff * part;
    }
    return sum / den_rest;
}

JetExpr antiderivative_x(const JetExpr& e0, Declarations& decls) {
    JetExpr e = e0, phi;
    while (true) {
        int k = e.order();
        if (k == 0)
            throw UnsupportedIntegrand(
                "antiderivative_x: residual still depends on u");
        if (k < 0) return phi + integrate_wrt(e, Var::x(), decls);
        JetExpr top = e.diff(Var::u(k));
        if (top.depends_on(Var::u(k)))
            throw UnsupportedIntegrand(
                "antiderivative_x: nonlinear in the top-order jet");
        JetExpr piece = integrate_wrt(top, Var::u(k - 1), decls);
        phi = phi + piece;
        e = e - total_x(piece);
        if (e.order() >= k)
            throw UnsupportedIntegrand("antiderivative_x: not a total x-derivative");
    }
}

bool depends_only_on_tx(const JetExpr& e) {
    for (Var v : e.variables())
        if (v.code != Var::t().code && v.code != Var::x().code) return false;
    return true;
}

bool is_quasilinear_u2(const JetExpr& H) {
    return is_zero(H.diff(Var::u(2), 2)).kind != ZeroKind::No;
}

namespace {

bool frac_linear_in(const JetExpr& H, Var v) {
    JetExpr second = H.diff(v, 2);
    if (is_zero(second).kind != ZeroKind::No) return true;  // quasi-linear in v
    bool hidden = H.any_atom([&](const Atom& a) {
        for (auto& arg : a.args)
            if (arg.depends_on(v)) return true;
        return false;
    });
    if (!hidden) {
        JetExpr den = JetExpr::fraction(H.den(), Polynomial::constant(Rational(1)));
        return H.degree_in(v) <= 1 && den.degree_in(v) <= 1;
    }
    // Moebius shapes (a v + b)/(c v + d) are exactly the solutions of
    // S_v = S^2/2 for S = H_vv/H_v
    JetExpr S = second / H.diff(v);
    return is_zero(S.diff(v) - S * S / 2).kind != ZeroKind::No;
}

}  // namespace

bool is_fractionally_linear_u2(const JetExpr& H) {
    return frac_linear_in(H, Var::u(2));
}

bool is_fractionally_linear_u1(const JetExpr& e) {
    return frac_linear_in(e, Var::u(1));
}

LinearForm linear_decompose(const JetExpr& H) {
    LinearForm lf;
    JetExpr a = H.diff(Var::u(2));
    JetExpr b = H.diff(Var::u(1));
    JetExpr c = H.diff(Var::u(0));
    if (!depends_only_on_tx(a) || !depends_only_on_tx(b) || !depends_only_on_tx(c))
        return lf;
    JetExpr d = H - a * JetExpr::u(2) - b * JetExpr::u(1) - c * JetExpr::u(0);
    if (!depends_only_on_tx(d)) return lf;
    lf.linear = true;
    lf.a = a;
    lf.b = b;
    lf.c = c;
    lf.d = d;
    return lf;
}

StructuralFlags structural_flags(const JetExpr& H) {
    return {is_quasilinear_u2(H), linear_decompose(H).linear};
}

}  // namespace jetcl
