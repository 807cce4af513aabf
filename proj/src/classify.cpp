#include "jetcl/classify.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "claws_internal.hpp"

namespace jetcl {

namespace {

// ---------------------------------------------------------------------------
// Chart bookkeeping
// ---------------------------------------------------------------------------
// Temporary variable codes for the target chart while a change of variables
// is inverted. Far above any jet order that occurs in practice, but below the
// expression core's internal formal-variable band at 1 << 20.
constexpr int kNewBase = 200000;

int nt_code() { return kNewBase; }
int nx_code() { return kNewBase + 1; }
int nu_code(int k) { return kNewBase + 2 + k; }  // k-th x~-derivative of u~

JetExpr pvar(int code) { return JetExpr::variable(Var{code}); }

// ---------------------------------------------------------------------------
// exp/ln collapse
// ---------------------------------------------------------------------------
// Inverting a chart through an exponential map produces exp(k*ln w) factors.
// The expression core keeps exp opaque, so fold integer multiples of
// logarithms back into powers here.

JetExpr collapse_exp_ln(const JetExpr& e);

JetExpr collapse_base(const BaseRef& b, int k) {
    if (b.is_var()) return pvar(b.var_code).pow(k);
    const Atom& a = *b.atom;
    switch (a.kind) {
        case AtomKind::Exp: {
            JetExpr arg = collapse_exp_ln(a.args[0]);
            if (arg.den().is_constant() && !arg.den().is_zero()) {
                Rational dc = arg.den().terms[0].coeff;
                JetExpr pulled(1);
                JetExpr rest(0);
                bool any = false;
                for (const Term& t : arg.num().terms) {
                    Rational c = t.coeff / dc;
                    const Atom* ln_atom = nullptr;
                    if (c.is_integer() && t.mono.factors.size() == 1 &&
                        !t.mono.factors[0].first.is_var() &&
                        t.mono.factors[0].first.atom->kind == AtomKind::Ln &&
                        t.mono.factors[0].second == 1)
                        ln_atom = t.mono.factors[0].first.atom.get();
                    if (ln_atom) {
                        any = true;
                        pulled = pulled * collapse_exp_ln(ln_atom->args[0])
                                              .pow((int)c.to_long());
                    } else {
                        JetExpr term(t.coeff);
                        for (auto& [fb, fe] : t.mono.factors)
                            term = term * collapse_base(fb, fe);
                        rest = rest + term / JetExpr(dc);
                    }
                }
                if (any) return (pulled * JetExpr::exp(rest)).pow(k);
            }
            return JetExpr::exp(arg).pow(k);
        }
        case AtomKind::Ln:
            return JetExpr::ln(collapse_exp_ln(a.args[0])).pow(k);
        case AtomKind::Sin:
            return JetExpr::sin(collapse_exp_ln(a.args[0])).pow(k);
        case AtomKind::Cos:
            return JetExpr::cos(collapse_exp_ln(a.args[0])).pow(k);
        case AtomKind::Func: {
            std::vector<JetExpr> args;
            args.reserve(a.args.size());
            for (auto& arg : a.args) args.push_back(collapse_exp_ln(arg));
            return JetExpr::function(a.sym, args, a.deriv).pow(k);
        }
    }
    return JetExpr(0);  // unreachable
}

JetExpr collapse_poly(const Polynomial& p) {
    JetExpr out(0);
    for (const Term& t : p.terms) {
        JetExpr term(t.coeff);
        for (auto& [b, k] : t.mono.factors) term = term * collapse_base(b, k);
        out = out + term;
    }
    return out;
}

JetExpr collapse_exp_ln(const JetExpr& e) {
    bool has_transcendental = e.any_atom([](const Atom& a) {
        return a.kind == AtomKind::Exp || a.kind == AtomKind::Ln;
    });
    if (!has_transcendental) return e;
    return collapse_poly(e.num()) / collapse_poly(e.den());
}

// ---------------------------------------------------------------------------
// Solving one forward relation target = f(...) for a single variable
// ---------------------------------------------------------------------------

bool hides(const JetExpr& e, Var v) {
    return e.any_atom([&](const Atom& a) {
        for (auto& arg : a.args)
            if (arg.depends_on(v)) return true;
        return false;
    });
}

std::optional<JetExpr> solve_for(const JetExpr& target, const JetExpr& f, Var v) {
    JetExpr one = JetExpr(1);
    JetExpr p = JetExpr::fraction(f.num(), Polynomial::constant(Rational(1))) -
                target * JetExpr::fraction(f.den(), Polynomial::constant(Rational(1)));
    if (!hides(p, v)) {
        if (p.degree_in(v) != 1) return std::nullopt;
        std::vector<JetExpr> cs = p.coefficients_in(v);
        if (is_zero(cs[1]).kind == ZeroKind::Yes) return std::nullopt;
        return -cs[0] / cs[1];
    }
    // v sits inside a transcendental atom: require a single such atom,
    // entering linearly, with no direct occurrence of v outside it
    const Atom* hit = nullptr;
    for (const Term& t : p.num().terms)
        for (auto& [b, k] : t.mono.factors) {
            if (b.is_var()) {
                if (b.var_code == v.code) return std::nullopt;
                continue;
            }
            bool dep = false;
            for (auto& arg : b.atom->args)
                if (arg.depends_on(v)) dep = true;
            if (!dep) continue;
            if (hit && hit != b.atom.get()) return std::nullopt;
            if (k != 1) return std::nullopt;
            hit = b.atom.get();
        }
    if (!hit || (hit->kind != AtomKind::Exp && hit->kind != AtomKind::Ln))
        return std::nullopt;
    JetExpr c1(0), c0(0);
    for (const Term& t : p.num().terms) {
        JetExpr rest(t.coeff);
        int cnt = 0;
        for (auto& [b, k] : t.mono.factors) {
            if (!b.is_var() && b.atom.get() == hit) {
                cnt += k;
                continue;
            }
            rest = rest * collapse_base(b, k);
        }
        if (cnt == 0)
            c0 = c0 + rest;
        else
            c1 = c1 + rest;
    }
    if (is_zero(c1).kind == ZeroKind::Yes) return std::nullopt;
    JetExpr inner = -c0 / c1;  // value the atom must take
    if (inner.depends_on(v)) return std::nullopt;
    JetExpr g = hit->args[0];
    if (hides(g, v) || g.degree_in(v) != 1) return std::nullopt;
    std::vector<JetExpr> gs = g.coefficients_in(v);
    if (is_zero(gs[1]).kind == ZeroKind::Yes) return std::nullopt;
    if (hit->kind == AtomKind::Exp) return (JetExpr::ln(inner) - gs[0]) / gs[1];
    return (JetExpr::exp(inner) - gs[0]) / gs[1];
}

// ---------------------------------------------------------------------------
// Chart inversion
// ---------------------------------------------------------------------------

struct Chart {
    std::vector<std::pair<int, JetExpr>> forward;  // new code -> old-chart expr
    std::map<int, JetExpr> solved;                 // old code -> new-chart expr
    int order = 2;
};

Chart invert_chart(const ContactTransformation& tr, int order) {
    Chart ch;
    ch.order = order;
    JetExpr dxX = total_x(tr.X());
    ch.forward.push_back({nt_code(), tr.T()});
    ch.forward.push_back({nx_code(), tr.X()});
    ch.forward.push_back({nu_code(0), tr.U()});
    JetExpr cur = tr.V();
    ch.forward.push_back({nu_code(1), cur});
    for (int k = 2; k <= order; ++k) {
        cur = total_x(cur) / dxX;
        ch.forward.push_back({nu_code(k), cur});
    }

    std::vector<std::pair<int, JetExpr>> eqs = ch.forward;
    bool progress = true;
    while (progress && !eqs.empty()) {
        progress = false;
        for (auto it = eqs.begin(); it != eqs.end();) {
            JetExpr f = it->second.substitute(ch.solved);
            std::set<int> pending;
            for (Var v : f.variables())
                if (v.code < kNewBase && !ch.solved.count(v.code))
                    pending.insert(v.code);
            if (pending.empty()) {  // consistency relation, nothing to solve
                it = eqs.erase(it);
                continue;
            }
            if (pending.size() == 1) {
                Var v{*pending.begin()};
                auto sol = solve_for(pvar(it->first), f, v);
                if (sol) {
                    ch.solved[v.code] = collapse_exp_ln(*sol);
                    it = eqs.erase(it);
                    progress = true;
                    continue;
                }
            }
            ++it;
        }
    }
    // back-substitute until the solutions live in the new chart alone
    for (int pass = 0; pass < 8; ++pass) {
        bool dirty = false;
        for (auto& [code, expr] : ch.solved) {
            bool old_left = false;
            for (Var v : expr.variables())
                if (v.code < kNewBase && ch.solved.count(v.code)) old_left = true;
            if (old_left) {
                expr = collapse_exp_ln(expr.substitute(ch.solved));
                dirty = true;
            }
        }
        if (!dirty) break;
    }
    return ch;
}

JetExpr to_new_chart(const JetExpr& e, const Chart& ch) {
    JetExpr r = collapse_exp_ln(e.substitute(ch.solved));
    for (Var v : r.variables())
        if (v.code < kNewBase)
            throw InversionFailure("cannot re-express " + v.str() +
                                   " in the new chart (relation not invertible "
                                   "within the expression class)");
    std::map<int, JetExpr> rename;
    rename[nt_code()] = JetExpr::t();
    rename[nx_code()] = JetExpr::x();
    for (int k = 0; k <= ch.order; ++k) rename[nu_code(k)] = JetExpr::u(k);
    return r.substitute(rename);
}

// Substitution map sending the standard chart variables of a re-expressed
// result back through the forward maps; used for round-trip certification.
std::map<int, JetExpr> forward_map(const Chart& ch) {
    std::map<int, JetExpr> m;
    for (auto& [code, expr] : ch.forward) {
        if (code == nt_code())
            m[Var::t().code] = expr;
        else if (code == nx_code())
            m[Var::x().code] = expr;
        else
            m[Var::u(code - nu_code(0)).code] = expr;
    }
    return m;
}

void certify_round_trip(const JetExpr& renamed, const JetExpr& original,
                        const Chart& ch, const char* what) {
    JetExpr back = renamed.substitute(forward_map(ch));
    if (is_zero(back - original).kind == ZeroKind::No)
        throw InversionFailure(std::string("round-trip check failed for ") + what);
}

JetExpr partial_t(const JetExpr& e) { return e.diff(Var::t()); }
JetExpr partial_x(const JetExpr& e) { return e.diff(Var::x()); }
JetExpr partial_u(const JetExpr& e) { return e.diff(Var::u(0)); }
JetExpr partial_u1(const JetExpr& e) { return e.diff(Var::u(1)); }

// Pretty form of the adjoint equation h_t + D_x^2(a h) - D_x(b h) + c h = 0
// in expanded coefficient form; coefficients are (t,x)-expressions.
std::string adjoint_str(const std::string& name, const LinearForm& lf) {
    JetExpr ax = partial_x(lf.a);
    std::vector<std::pair<JetExpr, std::string>> parts = {
        {lf.a, name + "_xx"},
        {JetExpr(2) * ax - lf.b, name + "_x"},
        {partial_x(ax) - partial_x(lf.b) + lf.c, name},
    };
    std::string out = name + "_t";
    for (const auto& [coef, part] : parts) {
        if (coef.is_canonical_zero()) continue;
        if (auto c = coef.as_constant()) {
            out += c->sign() < 0 ? " - " : " + ";
            Rational a = c->abs();
            if (!a.is_one()) out += a.str() + "*";
            out += part;
        } else {
            out += " + (" + coef.str() + ")*" + part;
        }
    }
    return out + " = 0";
}

}  // namespace

// ---------------------------------------------------------------------------
// ContactTransformation
// ---------------------------------------------------------------------------

ContactTransformation::ContactTransformation(JetExpr T, JetExpr X, JetExpr U)
    : T_(std::move(T)), X_(std::move(X)), U_(std::move(U)) {
    for (Var v : T_.variables())
        if (v.code != Var::t().code)
            throw DegenerateTransformation("time map may depend on t only, got " +
                                           T_.str());
    if (is_zero(T_.diff(Var::t())).kind != ZeroKind::No)
        throw DegenerateTransformation("time map is not invertible (T_t = 0)");
    for (const JetExpr* e : {&X_, &U_}) {
        if (e->order() > 1)
            throw DegenerateTransformation(
                "chart maps must have jet order <= 1, got " + e->str());
        for (Var v : e->variables())
            if (v.is_ut())
                throw DegenerateTransformation("chart maps may not involve u_t");
    }
    JetExpr xq = partial_u1(X_), uq = partial_u1(U_);
    kind_ = (is_zero(xq).kind == ZeroKind::Yes && is_zero(uq).kind == ZeroKind::Yes)
                ? Kind::Point
                : Kind::Contact;
    JetExpr dxX = partial_x(X_) + partial_u(X_) * JetExpr::u(1);
    JetExpr dxU = partial_x(U_) + partial_u(U_) * JetExpr::u(1);
    JetExpr contact = dxU * xq - dxX * uq;
    if (is_zero(contact).kind != ZeroKind::Yes)
        throw DegenerateTransformation("contact condition not certified: " +
                                       contact.str() + " != 0");
    JetExpr m1 = partial_x(X_) * partial_u(U_) - partial_u(X_) * partial_x(U_);
    JetExpr m2 = partial_x(X_) * uq - xq * partial_x(U_);
    JetExpr m3 = partial_u(X_) * uq - xq * partial_u(U_);
    if (is_zero(m1).kind != ZeroKind::No && is_zero(m2).kind != ZeroKind::No &&
        is_zero(m3).kind != ZeroKind::No)
        throw DegenerateTransformation("Jacobian of (X,U) in (x,u,u_x) has rank < 2");
    V_ = kind_ == Kind::Point ? dxU / dxX : uq / xq;
}

// ---------------------------------------------------------------------------
// apply_transformation
// ---------------------------------------------------------------------------

EvolutionEquation apply_transformation(const ContactTransformation& tr,
                                       const EvolutionEquation& eq) {
    const JetExpr& H = eq.rhs;
    JetExpr Tt = tr.T().diff(Var::t());
    JetExpr h_old;
    if (tr.is_point()) {
        JetExpr dxX = total_x(tr.X()), dxU = total_x(tr.U());
        JetExpr delta = partial_x(tr.X()) * partial_u(tr.U()) -
                        partial_u(tr.X()) * partial_x(tr.U());
        h_old = (delta * H + partial_t(tr.U()) * dxX - partial_t(tr.X()) * dxU) /
                (Tt * dxX);
    } else {
        const JetExpr& V = tr.V();
        h_old = ((partial_u(tr.U()) - partial_u(tr.X()) * V) * H +
                 partial_t(tr.U()) - partial_t(tr.X()) * V) /
                Tt;
    }
    Chart ch = invert_chart(tr, 2);
    JetExpr h_new = to_new_chart(h_old, ch);
    certify_round_trip(h_new, h_old, ch, "the transformed right-hand side");
    try {
        return EvolutionEquation(h_new);
    } catch (const std::invalid_argument& ex) {
        throw DegenerateTransformation(
            std::string("transformed equation leaves the class: ") + ex.what());
    }
}

// ---------------------------------------------------------------------------
// transform_conserved_vector
// ---------------------------------------------------------------------------

ConservedVector transform_conserved_vector(const ContactTransformation& tr,
                                           const ConservedVector& cv,
                                           const EvolutionEquation& eq) {
    JetExpr J = total_x(tr.X());
    JetExpr Tt = tr.T().diff(Var::t());
    JetExpr dtX = total_t(tr.X(), eq.rhs);
    JetExpr f_old = cv.F / J;
    JetExpr g_old = cv.G / Tt + (dtX / J) * (cv.F / Tt);
    int order = std::max({f_old.order(), g_old.order(), 2});
    Chart ch = invert_chart(tr, order);
    JetExpr f_new = to_new_chart(f_old, ch);
    JetExpr g_new = to_new_chart(g_old, ch);
    certify_round_trip(f_new, f_old, ch, "the transported density");
    certify_round_trip(g_new, g_old, ch, "the transported flux");
    return {f_new, g_new, false};
}

// ---------------------------------------------------------------------------
// strip_ux_linear
// ---------------------------------------------------------------------------

ConservedVector strip_ux_linear(const ConservedVector& cv,
                                const EvolutionEquation& eq, Declarations& decls) {
    JetExpr f1 = partial_u1(cv.F);
    if (is_zero(partial_u1(f1)).kind == ZeroKind::No)
        throw std::invalid_argument("strip_ux_linear: density is not linear in u_x");
    if (is_zero(f1).kind == ZeroKind::Yes) return cv;
    JetExpr phi = integrate_wrt(f1, Var::u(0), decls);
    return {cv.F - total_x(phi), cv.G + total_t(phi, eq.rhs), cv.reduced};
}

// ---------------------------------------------------------------------------
// normalize_char1
// ---------------------------------------------------------------------------

NormalizationOutcome normalize_char1(const ConservedVector& cv,
                                     const EvolutionEquation& eq,
                                     Declarations& decls) {
    ConservedVector r = reduce_order(cv, eq, decls);
    if (r.trivial()) throw TrivialInput("conserved vector is trivial");
    JetExpr f11 = partial_u1(partial_u1(r.F));
    if (is_zero(f11).kind == ZeroKind::Yes) {
        ConservedVector s = strip_ux_linear(r, eq, decls);
        if (s.trivial() || is_zero(partial_u(s.F)).kind == ZeroKind::Yes)
            throw TrivialInput("density reduces to a null divergence");
        return ContactTransformation(JetExpr::t(), JetExpr::x(), s.F);
    }

    // genuinely contact case: the new spatial coordinate must solve
    //   u_x F_{u_x u_x} X_x + F_{u_x u_x} X_u
    //     + (F_x - u_x F_{x u_x} - F_{u u_x}) X_{u_x} = 0
    JetExpr cx = JetExpr::u(1) * f11;
    JetExpr cu = f11;
    JetExpr cq = partial_x(r.F) - JetExpr::u(1) * partial_u1(partial_x(r.F)) -
                 partial_u1(partial_u(r.F));
    struct Candidate {
        JetExpr X, U;
    };
    const Candidate library[] = {
        {JetExpr::u(1), JetExpr::x() * JetExpr::u(1) - JetExpr::u(0)},  // Legendre
        {JetExpr::u(0), JetExpr::x()},                                  // hodograph
    };
    auto unit_char = [&](const ContactTransformation& cand_tr)
        -> std::optional<Rational> {
        EvolutionEquation te = apply_transformation(cand_tr, eq);
        ConservedVector tc = transform_conserved_vector(cand_tr, r, eq);
        ConservedVector tred = reduce_order(tc, te, decls);
        return characteristic_of(tred).lambda.as_constant();
    };
    for (const Candidate& cand : library) {
        JetExpr res = cx * partial_x(cand.X) + cu * partial_u(cand.X) +
                      cq * partial_u1(cand.X);
        if (is_zero(res).kind != ZeroKind::Yes) continue;
        try {
            ContactTransformation t0(JetExpr::t(), cand.X, cand.U);
            auto c = unit_char(t0);
            if (!c || c->is_zero()) continue;
            if (c->is_one()) return t0;
            // the library chart is off by the constant factor c; scale the
            // dependent coordinate and re-check
            ContactTransformation t1(JetExpr::t(), cand.X, JetExpr(*c) * cand.U);
            auto c1 = unit_char(t1);
            if (c1 && c1->is_one()) return t1;
        } catch (const DegenerateTransformation&) {
        } catch (const InversionFailure&) {
        } catch (const UnsupportedIntegrand&) {
        }
    }

    // no pattern matched: emit the characteristic system of Lemma-4 type
    FunctionSymbolPtr Xs = detail::fresh_symbol(decls, "X", 4);
    FunctionSymbolPtr Us = detail::fresh_symbol(decls, "U", 4);
    FunctionSymbolPtr Ps = detail::fresh_symbol(decls, "Phi", 4);
    std::vector<JetExpr> args = {JetExpr::t(), JetExpr::x(), JetExpr::u(0),
                                 JetExpr::u(1)};
    auto at = [&](const FunctionSymbolPtr& s, int slot) {
        std::vector<int> d(4, 0);
        d[slot] = 1;
        return JetExpr::function(s, args, d);
    };
    JetExpr Xa = JetExpr::function(Xs, args);
    JetExpr Ua = JetExpr::function(Us, args);
    EmittedSystem sys;
    sys.unknowns = {Xs->name + "(t,x,u,u_x)", Us->name + "(t,x,u,u_x)",
                    Ps->name + "(t,x,u,u_x)"};
    sys.equations = {
        cx * at(Xs, 1) + cu * at(Xs, 2) + cq * at(Xs, 3),
        at(Ps, 1) + Ua * at(Xs, 1) - (r.F - JetExpr::u(1) * partial_u1(r.F)),
        at(Ps, 2) + Ua * at(Xs, 2) - partial_u1(r.F),
        at(Ps, 3) + Ua * at(Xs, 3),
    };
    sys.note = "no library pattern solves the characteristic equation for " +
               Xs->name + "; solve the first equation for " + Xs->name +
               ", then the inhomogeneous triple determines " + Ps->name +
               " and " + Us->name;
    return sys;
}

// ---------------------------------------------------------------------------
// normalize_pair
// ---------------------------------------------------------------------------

NormalizationOutcome normalize_pair(const ConservedVector& cv1,
                                    const ConservedVector& cv2,
                                    const EvolutionEquation& eq,
                                    Declarations& decls) {
    ConservedVector r1 = reduce_order(cv1, eq, decls);
    ConservedVector r2 = reduce_order(cv2, eq, decls);
    if (r1.trivial() || r2.trivial())
        throw TrivialInput("both laws in the pair must be nontrivial");
    JetExpr l1 = characteristic_of(r1).lambda;

    if (is_zero(partial_u1(r2.F)).kind != ZeroKind::Yes) {
        if (is_zero(partial_u1(partial_u1(r2.F))).kind == ZeroKind::Yes)
            r2 = strip_ux_linear(r2, eq, decls);
        else
            throw std::invalid_argument(
                "normalize_pair: second density is not point-reducible");
    }

    if (is_zero(l1 - 1).kind != ZeroKind::Yes) {
        JetExpr l2 = characteristic_of(r2).lambda;
        if (depends_only_on_tx(l1) && depends_only_on_tx(l2)) {
            JetExpr ratio = l2 / l1;
            JetExpr rx = partial_x(ratio);
            if (is_zero(rx).kind != ZeroKind::No)
                throw DependentLaws(
                    "characteristic ratio does not depend on x; the pair "
                    "carries no second chart coordinate");
            return ContactTransformation(JetExpr::t(), ratio,
                                         l1 * JetExpr::u(0) / rx);
        }
        throw std::invalid_argument(
            "normalize_pair: first law must have characteristic 1");
    }

    JetExpr X = partial_u(r2.F);
    JetExpr Xx = partial_x(X), Xu = partial_u(X);
    auto zx = is_zero(Xx), zu = is_zero(Xu);
    if (zx.kind == ZeroKind::Yes && zu.kind == ZeroKind::Yes)
        throw DependentLaws(
            "second density is affine in u with constant slope; the pair is "
            "linearly dependent modulo trivial laws");
    if (zu.kind == ZeroKind::Yes)
        return ContactTransformation(JetExpr::t(), X, JetExpr::u(0) / Xx);
    if (zx.kind == ZeroKind::Yes)
        return ContactTransformation(JetExpr::t(), X, -JetExpr::x() / Xu);
    for (const JetExpr& cand : {JetExpr::u(0), -JetExpr::x()}) {
        JetExpr cond = Xx * partial_u(cand) - Xu * partial_x(cand) - 1;
        if (is_zero(cond).kind == ZeroKind::Yes)
            return ContactTransformation(JetExpr::t(), X, cand);
    }
    FunctionSymbolPtr Us = detail::fresh_symbol(decls, "U", 3);
    std::vector<JetExpr> args = {JetExpr::t(), JetExpr::x(), JetExpr::u(0)};
    JetExpr Uu = JetExpr::function(Us, args, {0, 0, 1});
    JetExpr Ux = JetExpr::function(Us, args, {0, 1, 0});
    EmittedSystem sys;
    sys.unknowns = {Us->name + "(t,x,u)"};
    sys.equations = {Xx * Uu - Xu * Ux - 1};
    sys.note = "dependent chart coordinate for X = " + X.str() +
               " requires the area condition X_x U_u - X_u U_x = 1";
    return sys;
}

// ---------------------------------------------------------------------------
// decide
// ---------------------------------------------------------------------------

namespace {

// Adjoint-family report for equations affine in the u-jets:
// u_t = a u_xx + b u_x + c u + d over (t,x).
void attach_linear_family(ClassificationReport& rep, const LinearForm& lf,
                          Declarations& decls) {
    rep.verdict = {VerdictKind::Infinite, 0};
    auto ac = lf.a.as_constant();
    bool plain_second_order = ac.has_value() &&
                              is_zero(lf.b).kind == ZeroKind::Yes &&
                              is_zero(lf.c).kind == ZeroKind::Yes;
    std::optional<SecondOrderConstraint> constraint;
    if (plain_second_order)
        // h_t + a h_xx = 0 rewrites as h_xx = (-1/a) h_t
        constraint = SecondOrderConstraint{0, 1, Rational(-1) / *ac};
    FunctionSymbolPtr h = detail::fresh_symbol(decls, "h", 2, constraint);
    std::vector<JetExpr> targs = {JetExpr::t(), JetExpr::x()};
    JetExpr ha = JetExpr::function(h, targs);
    LawFamily fam;
    fam.sym = h;
    fam.vec.F = ha * JetExpr::u(0);
    fam.vec.G = -lf.a * ha * JetExpr::u(1) +
                (total_x(lf.a * ha) - lf.b * ha) * JetExpr::u(0);
    fam.vec.reduced = true;
    fam.lambda = {ha};
    fam.constraint = adjoint_str(h->name, lf);
    rep.families.push_back(fam);
    if (is_zero(lf.d).kind != ZeroKind::Yes)
        rep.notes.push_back(
            "the zeroth-order source term " + lf.d.str() +
            " is dropped from the family fluxes; they acquire an "
            "x-antiderivative of h*(source) outside the expression class");
    rep.notes.push_back(
        "equation is affine in the u-jets; the conservation-law space is "
        "infinite-dimensional, parametrized by solutions of the adjoint "
        "equation");
}

}  // namespace

ClassificationReport decide(const EvolutionEquation& eq,
                            const SolveOptions& options, Declarations& decls) {
    ClassificationReport rep;
    const JetExpr& H = eq.rhs;

    // (i) equations not fractionally linear in u_xx admit no conservation laws
    if (!is_fractionally_linear_u2(H)) {
        rep.verdict = {VerdictKind::Exact, 0};
        rep.notes.push_back(
            "right-hand side is not fractionally linear in u_xx; no such "
            "equation has a nontrivial conservation law (in any contact chart)");
        return rep;
    }

    // (ii) affine equations carry the adjoint family
    LinearForm lf = linear_decompose(H);
    if (lf.linear) {
        attach_linear_family(rep, lf, decls);
        // divergence forms for potential systems, when they exist
        if (is_zero(euler_u(H)).kind == ZeroKind::Yes) {
            try {
                rep.hat_H = antiderivative_x(H, decls);
                if (is_zero(euler_u(JetExpr::x() * H)).kind == ZeroKind::Yes)
                    rep.check_H = JetExpr::x() * *rep.hat_H -
                                  antiderivative_x(JetExpr::x() * H, decls);
            } catch (const UnsupportedIntegrand&) {
            }
        }
        return rep;
    }

    // (iii) divergence ladder in the given chart
    std::optional<std::pair<ConservedVector, Characteristic>> seeded_mass;
    ZeroResult z_h = is_zero(euler_u(H));
    if (z_h.kind == ZeroKind::Yes) {
        bool have_hat = true;
        JetExpr hat;
        try {
            hat = antiderivative_x(H, decls);
        } catch (const UnsupportedIntegrand& ex) {
            have_hat = false;
            rep.notes.push_back(std::string("right-hand side is a certified "
                                            "x-derivative but its antiderivative "
                                            "leaves the expression class: ") +
                                ex.what());
        }
        if (have_hat) {
            rep.hat_H = hat;
            seeded_mass = {{JetExpr::u(0), -hat, true}, {JetExpr(1)}};
            ZeroResult z_xh = is_zero(euler_u(JetExpr::x() * H));
            if (z_xh.kind == ZeroKind::Yes) {
                std::optional<JetExpr> check;
                try {
                    check = JetExpr::x() * hat -
                            antiderivative_x(JetExpr::x() * H, decls);
                } catch (const UnsupportedIntegrand& ex) {
                    rep.notes.push_back(
                        std::string("x*H is a certified x-derivative but its "
                                    "antiderivative leaves the expression "
                                    "class: ") +
                        ex.what());
                }
                if (check) {
                    rep.check_H = check;
                    ConservedVector moment{JetExpr::x() * JetExpr::u(0),
                                           *check - JetExpr::x() * hat, true};
                    rep.basis.push_back(*seeded_mass);
                    rep.basis.push_back({moment, {JetExpr::x()}});
                    JetExpr check_uu = partial_u(partial_u(*check));
                    ZeroResult z_uu = is_zero(check_uu);
                    if (z_uu.kind == ZeroKind::No) {
                        rep.verdict = {VerdictKind::Exact, 2};
                        // a sampled nonzero is a witness for concrete input
                        // but only a genericity assumption when opaque
                        // symbols are present
                        if (check_uu.any_atom([](const Atom& a) {
                                return a.kind == AtomKind::Func;
                            }))
                            rep.side_conditions.push_back(
                                "assumed nonzero: " + check_uu.str());
                        rep.chart_caveat =
                            "the second-level divergence form is relative to "
                            "the given coordinates; the dimension count is not";
                        return rep;
                    }
                    if (z_uu.kind == ZeroKind::Yes) {
                        // the second-level potential is affine in u, so the
                        // equation is linear; unreachable after gate (ii) but
                        // kept for safety
                        LinearForm lin = linear_decompose(H);
                        if (lin.linear) {
                            attach_linear_family(rep, lin, decls);
                            return rep;
                        }
                    }
                    rep.verdict = {VerdictKind::Undecided, 2};
                    rep.chart_caveat =
                        "the linearity test on the second-level potential was "
                        "probable-only; the dimension is 2 or infinite";
                    return rep;
                }
            } else if (z_xh.kind == ZeroKind::ProbablyZero) {
                rep.notes.push_back(
                    "the divergence test for x*H returned probable zero; a "
                    "second conservation law with characteristic x may exist");
            }
            if (!is_fractionally_linear_u1(hat)) {
                rep.verdict = {VerdictKind::Exact, 1};
                rep.basis.push_back(*seeded_mass);
                if (hat.any_atom(
                        [](const Atom& a) { return a.kind == AtomKind::Func; }))
                    rep.side_conditions.push_back(
                        "fractional linearity of the first-level potential "
                        "was refuted by sampling generic interpretations of "
                        "the declared symbols");
                rep.notes.push_back(
                    "the first-level potential is not fractionally linear in "
                    "u_x, which pins the dimension at exactly one");
                rep.chart_caveat =
                    "the divergence form is relative to the given "
                    "coordinates; the dimension count is not";
                return rep;
            }
        }
    } else if (z_h.kind == ZeroKind::ProbablyZero) {
        rep.notes.push_back(
            "the euler residual of the right-hand side is probable zero; "
            "divergence structure was not certified");
    }

    // (iv) determining-system search over the reduced ansatz. For a
    // quasi-linear right-hand side every conservation law has a reduced
    // representative with u_x-free density, so when the divergence gauge is
    // available the restricted signature is complete and a function-level
    // closure counts all laws, not just a lower bound.
    bool complete_density = rep.hat_H.has_value() && is_quasilinear_u2(H);
    std::vector<Var> f_args = complete_density
                                  ? std::vector<Var>{Var::t(), Var::x(), Var::u(0)}
                                  : std::vector<Var>{Var::t(), Var::x(), Var::u(0),
                                                     Var::u(1)};
    AnsatzSignature ansatz{f_args,
                           {Var::t(), Var::x(), Var::u(0), Var::u(1)}};
    DeterminingSystem sys = determining_system(eq, ansatz, decls);
    SolveResult sol = solve_determining(sys, options, decls);
    rep.basis = sol.basis;
    rep.families = sol.families;
    rep.side_conditions = sol.side_conditions;
    for (const std::string& r : sol.residual)
        rep.notes.push_back("unresolved determining constraint: " + r);
    if (seeded_mass) {
        // the divergence structure certifies the density u even when its flux
        // lies outside the polynomial ansatz
        bool already = false;
        for (auto& [cv, lam] : rep.basis)
            if (are_equivalent(cv, seeded_mass->first, eq, decls)) already = true;
        if (!already) rep.basis.insert(rep.basis.begin(), *seeded_mass);
    }
    int found = static_cast<int>(rep.basis.size());
    if (complete_density && sol.completeness == Completeness::FunctionLevel &&
        sol.families.empty() && sol.side_conditions.empty()) {
        rep.verdict = {VerdictKind::Exact, found};
        rep.notes.push_back(
            "the u_x-free density signature is complete for quasi-linear "
            "equations and the divergence-gauge solve closed at the function "
            "level, so the count is exact");
        rep.chart_caveat =
            "the divergence form is relative to the given coordinates; the "
            "dimension count is not";
        return rep;
    }
    rep.verdict = {sol.completeness == Completeness::Heuristic
                       ? VerdictKind::Undecided
                       : VerdictKind::AtLeast,
                   found};
    rep.chart_caveat =
        "counts are lower bounds in the given coordinates; contact-equivalent "
        "charts were not searched";
    if (!sol.families.empty())
        rep.notes.push_back(
            "a function-parametrized family is attached; the space is "
            "infinite-dimensional whenever its constraint has infinitely many "
            "independent solutions");
    return rep;
}

// ---------------------------------------------------------------------------
// emit_potential_system
// ---------------------------------------------------------------------------

std::vector<PotentialSystem> emit_potential_system(const ClassificationReport& report,
                                                   const EvolutionEquation& eq) {
    (void)eq;
    if (!report.hat_H ||
        (report.verdict.kind == VerdictKind::Exact && report.verdict.count == 0))
        throw NoDivergenceForm(
            "no first-level divergence form available in the given chart");
    std::vector<PotentialSystem> out;
    PotentialSystem first;
    first.name = "first-level potential system";
    first.equations = {{"v_x", "u"}, {"v_t", report.hat_H->str()}};
    first.note = "the potential equation substitutes u = v_x into v_t";
    out.push_back(first);

    bool two_laws = report.verdict.kind == VerdictKind::Infinite ||
                    report.verdict.count >= 2;
    if (report.check_H && two_laws) {
        PotentialSystem second;
        second.name = "second-level potential system";
        second.equations = {{"v1_x", "u"},
                            {"w_x", "v1"},
                            {"w_t", report.check_H->str()}};
        second.note =
            "v1_t = D_x of the second-level potential is a differential "
            "consequence of the last two equations and is omitted";
        out.push_back(second);
    }
    return out;
}

}  // namespace jetcl
