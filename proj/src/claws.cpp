#include "jetcl/claws.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "claws_internal.hpp"

namespace jetcl {

namespace detail {

FunctionSymbolPtr fresh_symbol(Declarations& decls, const std::string& base, int arity,
                               std::optional<SecondOrderConstraint> con) {
    std::string name = base;
    for (int i = 2; decls.lookup(name); ++i) name = base + std::to_string(i);
    FunctionSymbol s;
    s.name = name;
    s.arity = arity;
    s.constraint = con;
    return decls.declare(s);
}

namespace {

std::string monomial_str(const Monomial& m) {
    Polynomial p;
    p.terms.push_back(Term{Rational(1), m});
    return JetExpr::fraction(p, Polynomial::constant(Rational(1))).str();
}

std::vector<Var> atom_variables(const AtomPtr& a) {
    std::vector<Var> out;
    for (const JetExpr& arg : a->args)
        for (Var v : arg.variables()) out.push_back(v);
    return out;
}

}  // namespace

std::vector<SplitGroup> split_by_free(const JetExpr& condition,
                                      const std::set<int>& sig_codes,
                                      const std::set<std::string>& unknown_names,
                                      bool allow_atom_split,
                                      std::vector<std::string>* sides) {
    std::vector<std::pair<Monomial, Term>> pieces;
    std::set<std::string> noted;
    for (const Term& tm : condition.num().terms) {
        Monomial freem, coefm;
        for (const auto& fac : tm.mono.factors) {
            bool free_part;
            if (fac.first.is_var()) {
                free_part = sig_codes.count(fac.first.var().code) == 0;
            } else {
                const AtomPtr& a = fac.first.atom;
                if (a->kind == AtomKind::Func && a->sym &&
                    unknown_names.count(a->sym->name)) {
                    free_part = false;
                } else {
                    free_part = false;
                    for (Var v : atom_variables(a))
                        if (!sig_codes.count(v.code)) free_part = true;
                    if (free_part) {
                        std::string s = monomial_str(
                            Monomial{{{fac.first, 1}}});
                        if (!allow_atom_split)
                            throw SplitFailure(
                                "cannot split: free variable hides inside " + s);
                        if (sides && noted.insert(s).second)
                            sides->push_back("split treats " + s +
                                             " as independent of the other free monomials");
                    }
                }
            }
            (free_part ? freem : coefm).factors.push_back(fac);
        }
        pieces.emplace_back(std::move(freem), Term{tm.coeff, std::move(coefm)});
    }
    std::stable_sort(pieces.begin(), pieces.end(),
                     [](const auto& a, const auto& b) {
                         return monomial_compare(a.first, b.first) > 0;
                     });
    std::vector<SplitGroup> groups;
    for (auto& [freem, term] : pieces) {
        Polynomial single;
        single.terms.push_back(std::move(term));
        if (!groups.empty() && monomial_compare(groups.back().free_mono, freem) == 0) {
            JetExpr add = JetExpr::fraction(single, Polynomial::constant(Rational(1)));
            groups.back().eq = groups.back().eq + add;
        } else {
            SplitGroup g;
            g.free_mono = freem;
            g.label = monomial_str(freem);
            g.eq = JetExpr::fraction(single, Polynomial::constant(Rational(1)));
            groups.push_back(std::move(g));
        }
    }
    std::vector<SplitGroup> out;
    for (auto& g : groups) {
        if (g.eq.is_canonical_zero()) continue;
        if (g.eq.num().leading().coeff.sign() < 0) g.eq = -g.eq;
        out.push_back(std::move(g));
    }
    return out;
}

int antiderivative_depth(const Atom& a, const std::string& name) {
    if (a.kind != AtomKind::Func || !a.sym) return -1;
    int depth = 0;
    const FunctionSymbol* s = a.sym.get();
    while (s) {
        if (s->name == name) return depth;
        s = s->base.get();
        ++depth;
    }
    return -1;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// substitute_symbol
// ---------------------------------------------------------------------------
namespace {

struct SymbolSubst {
    const FunctionSymbolPtr& sym;
    const std::vector<Var>& params;
    const JetExpr& body;
    Declarations& decls;

    JetExpr atom_expr(const AtomPtr& a) const {
        std::vector<JetExpr> args;
        args.reserve(a->args.size());
        for (const JetExpr& arg : a->args) args.push_back(apply(arg));
        int depth = detail::antiderivative_depth(*a, sym->name);
        if (depth < 0) {
            if (a->kind == AtomKind::Exp) return JetExpr::exp(args[0]);
            if (a->kind == AtomKind::Ln) return JetExpr::ln(args[0]);
            if (a->kind == AtomKind::Sin) return JetExpr::sin(args[0]);
            if (a->kind == AtomKind::Cos) return JetExpr::cos(args[0]);
            return JetExpr::function(a->sym, std::move(args), a->deriv);
        }
        JetExpr r = body;
        if (depth > 0) {
            // antiderivative chain: arity one, canonical atoms carry no
            // derivative on the integrated slot
            for (int i = 0; i < depth; ++i)
                r = integrate_wrt(r, params[0], decls);
        }
        for (size_t i = 0; i < a->deriv.size(); ++i)
            for (int k = 0; k < a->deriv[i]; ++k) r = r.diff(params[i]);
        std::map<int, JetExpr> var_map;
        for (size_t i = 0; i < params.size(); ++i)
            var_map[params[i].code] = args[i];
        return r.substitute(var_map);
    }

    JetExpr poly_expr(const Polynomial& p) const {
        JetExpr acc;
        for (const Term& tm : p.terms) {
            JetExpr prod{tm.coeff};
            for (const auto& fac : tm.mono.factors) {
                JetExpr f = fac.first.is_var() ? JetExpr::variable(fac.first.var())
                                               : atom_expr(fac.first.atom);
                prod = prod * f.pow(fac.second);
            }
            acc = acc + prod;
        }
        return acc;
    }

    JetExpr apply(const JetExpr& e) const { return poly_expr(e.num()) / poly_expr(e.den()); }
};

}  // namespace

JetExpr substitute_symbol(const JetExpr& e, const FunctionSymbolPtr& sym,
                          const std::vector<Var>& params, const JetExpr& body,
                          Declarations& decls) {
    if (static_cast<int>(params.size()) != sym->arity)
        throw std::invalid_argument("substitute_symbol: parameter count does not match arity");
    return SymbolSubst{sym, params, body, decls}.apply(e);
}

// ---------------------------------------------------------------------------
// Characteristics, order reduction, equivalence
// ---------------------------------------------------------------------------
Characteristic characteristic_of(const ConservedVector& cv) {
    return {cv.F.diff(Var::u(0)) - total_x(cv.F.diff(Var::u(1)))};
}

namespace {

JetExpr eliminate_ut(const JetExpr& e, const JetExpr& H) {
    int top = -1;
    for (Var v : e.variables())
        if (v.is_ut()) top = std::max(top, v.ut_order());
    if (top < 0) return e;
    std::map<int, JetExpr> sub;
    for (int k = 0; k <= top; ++k) sub[Var::ut(k).code] = total_x(H, k);
    return e.substitute(sub);
}

}  // namespace

ConservedVector reduce_order(const ConservedVector& cv, const EvolutionEquation& eq,
                             Declarations& decls) {
    const JetExpr& H = eq.rhs;
    JetExpr F = eliminate_ut(cv.F, H);
    JetExpr G = eliminate_ut(cv.G, H);

    ZeroResult z = is_zero(total_t(F, H) + total_x(G));
    if (z.kind == ZeroKind::No) {
        std::ostringstream msg;
        msg << "D_t F + D_x G does not vanish on solutions";
        if (z.witness) msg << " (sampled value " << z.witness->value << ")";
        throw NotConserved(msg.str());
    }

    for (int n = F.order(); n >= 2; n = F.order()) {
        JetExpr f1 = F.diff(Var::u(n));
        if (f1.depends_on(Var::u(n)))
            throw UnsupportedIntegrand("density is not affine in its top jet " +
                                       Var::u(n).str());
        JetExpr phi = integrate_wrt(f1, Var::u(n - 1), decls);
        F = F - total_x(phi);
        G = G + total_t(phi, H);
        if (F.order() >= n)
            throw UnsupportedIntegrand("order peeling failed to lower the density order");
    }

    // strip an u_x-linear density part when the density is affine in u_x
    JetExpr fu1 = F.diff(Var::u(1));
    if (!fu1.is_canonical_zero() && !fu1.depends_on(Var::u(1))) {
        try {
            JetExpr phi = integrate_wrt(fu1, Var::u(0), decls);
            F = F - total_x(phi);
            G = G + total_t(phi, H);
        } catch (const UnsupportedIntegrand&) {
            // keep the affine part; still first-order
        }
    }

    if ((G + F.diff(Var::u(1)) * H).order() > 1)
        throw NotConserved("flux does not reduce to first order against the density");
    return {F, G, true};
}

bool are_equivalent(const ConservedVector& cv1, const ConservedVector& cv2,
                    const EvolutionEquation& eq, Declarations& decls) {
    ConservedVector diff{cv1.F - cv2.F, cv1.G - cv2.G, false};
    return reduce_order(diff, eq, decls).trivial();
}

// ---------------------------------------------------------------------------
// Determining systems
// ---------------------------------------------------------------------------
namespace {

void check_signature(const std::vector<Var>& sig, const char* which) {
    std::set<int> seen;
    for (Var v : sig) {
        bool ok = v == Var::t() || v == Var::x() || v == Var::u(0) || v == Var::u(1);
        if (!ok)
            throw std::invalid_argument(std::string(which) +
                                        " signature admits only t, x, u, u_x");
        if (!seen.insert(v.code).second)
            throw std::invalid_argument(std::string(which) + " signature repeats " + v.str());
    }
    if (sig.empty())
        throw std::invalid_argument(std::string(which) + " signature must not be empty");
}

}  // namespace

DeterminingSystem determining_system(const EvolutionEquation& eq,
                                     const AnsatzSignature& ansatz,
                                     Declarations& decls) {
    check_signature(ansatz.F_args, "density");
    check_signature(ansatz.G_args, "flux");
    DeterminingSystem sys;
    sys.H = eq.rhs;
    sys.F_args = ansatz.F_args;
    sys.G_args = ansatz.G_args;
    std::sort(sys.F_args.begin(), sys.F_args.end());
    std::sort(sys.G_args.begin(), sys.G_args.end());

    bool f_has_u1 = std::count(sys.F_args.begin(), sys.F_args.end(), Var::u(1)) > 0;
    sys.gauge = ReducedGauge::Generic;
    if (!f_has_u1 && is_zero(euler_u(sys.H)).certified()) {
        try {
            sys.hat_H = antiderivative_x(sys.H, decls);
            sys.gauge = ReducedGauge::DivergenceForm;
        } catch (const UnsupportedIntegrand&) {
            sys.gauge = ReducedGauge::Generic;  // no closed form for hat_H
        }
    }

    sys.F = detail::fresh_symbol(decls, "F", static_cast<int>(sys.F_args.size()));
    sys.G = detail::fresh_symbol(
        decls, sys.gauge == ReducedGauge::DivergenceForm ? "G0" : "G1",
        static_cast<int>(sys.G_args.size()));

    auto atom_of = [](const FunctionSymbolPtr& s, const std::vector<Var>& sig) {
        std::vector<JetExpr> args;
        for (Var v : sig) args.push_back(JetExpr::variable(v));
        return JetExpr::function(s, std::move(args));
    };
    JetExpr Fe = atom_of(sys.F, sys.F_args);
    JetExpr Ge = atom_of(sys.G, sys.G_args);
    JetExpr G_full = sys.gauge == ReducedGauge::DivergenceForm
                         ? Ge - Fe.diff(Var::u(0)) * sys.hat_H
                         : Ge - Fe.diff(Var::u(1)) * sys.H;
    JetExpr condition = total_t(Fe, sys.H) + total_x(G_full);

    std::set<int> sig_codes;
    for (Var v : sys.F_args) sig_codes.insert(v.code);
    for (Var v : sys.G_args) sig_codes.insert(v.code);
    std::set<std::string> names{sys.F->name, sys.G->name};
    auto groups = detail::split_by_free(condition, sig_codes, names,
                                        /*allow_atom_split=*/false, nullptr);
    for (auto& g : groups) {
        sys.equations.push_back(g.eq);
        sys.provenance.push_back("coefficient of " + g.label);
    }
    return sys;
}

}  // namespace jetcl
