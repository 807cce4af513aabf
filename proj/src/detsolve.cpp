#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "claws_internal.hpp"
#include "jetcl/claws.hpp"

namespace jetcl {

namespace detail {

namespace {

std::vector<long> divisors(long n) {
    std::vector<long> out;
    for (long d = 1; d * d <= n; ++d)
        if (n % d == 0) {
            out.push_back(d);
            if (d != n / d) out.push_back(n / d);
        }
    std::sort(out.begin(), out.end());
    return out;
}

Rational eval_poly(const std::vector<Rational>& p, const Rational& r) {
    Rational acc;
    for (size_t i = p.size(); i-- > 0;) acc = acc * r + p[i];
    return acc;
}

}  // namespace

std::optional<std::vector<std::pair<Rational, int>>> rational_roots(
    const std::vector<Rational>& coeffs) {
    int top = static_cast<int>(coeffs.size()) - 1;
    while (top >= 0 && coeffs[top].is_zero()) --top;
    if (top < 1) return std::nullopt;
    std::map<Rational, int> mult;
    int low = 0;
    while (coeffs[low].is_zero()) ++low;
    if (low > 0) mult[Rational(0)] = low;
    std::vector<Rational> p(coeffs.begin() + low, coeffs.begin() + top + 1);
    while (p.size() > 1) {
        Rational scale(1);
        for (const Rational& c : p) scale = rational_int_lcm(scale, c.denominator());
        for (Rational& c : p) c *= scale;
        Rational a0 = p.front().abs(), aN = p.back().abs();
        if (a0.is_zero()) return std::nullopt;  // canonicalized away above
        long n0 = a0.to_long(), nN = aN.to_long();
        if (n0 <= 0 || nN <= 0 || n0 > 1000000 || nN > 1000000 ||
            Rational(n0) != a0 || Rational(nN) != aN)
            return std::nullopt;
        bool found = false;
        for (long num : divisors(n0)) {
            for (long den : divisors(nN)) {
                for (int sgn : {1, -1}) {
                    Rational r(sgn * num, den);
                    if (!eval_poly(p, r).is_zero()) continue;
                    // deflate by (x - r)
                    std::vector<Rational> q(p.size() - 1);
                    Rational carry = p.back();
                    for (size_t i = p.size() - 1; i-- > 0;) {
                        q[i] = carry;
                        carry = p[i] + r * carry;
                    }
                    ++mult[r];
                    p = std::move(q);
                    found = true;
                    break;
                }
                if (found) break;
            }
            if (found) break;
        }
        if (!found) return std::nullopt;
    }
    std::vector<std::pair<Rational, int>> out(mult.begin(), mult.end());
    return out;
}

}  // namespace detail

namespace {

JetExpr atom_of(const FunctionSymbolPtr& s, const std::vector<Var>& sig,
                std::vector<int> deriv = {}) {
    std::vector<JetExpr> args;
    for (Var v : sig) args.push_back(JetExpr::variable(v));
    return JetExpr::function(s, std::move(args), std::move(deriv));
}

JetExpr atom_ref(const AtomPtr& a) {
    return JetExpr::fraction(Polynomial::from_atom(a), Polynomial::constant(Rational(1)));
}

std::vector<Var> sig_without(const std::vector<Var>& sig, Var v) {
    std::vector<Var> out;
    for (Var w : sig)
        if (w != v) out.push_back(w);
    return out;
}

bool vars_subset(const JetExpr& e, const std::vector<Var>& sig) {
    std::set<int> codes;
    for (Var v : sig) codes.insert(v.code);
    for (Var v : e.variables())
        if (!codes.count(v.code)) return false;
    return true;
}

std::string var_suffix(Var v) {
    if (v == Var::t()) return "t";
    if (v == Var::x()) return "x";
    if (v.is_u()) return "u" + std::string(static_cast<size_t>(v.u_order()), 'x');
    return v.str();
}

std::string signed_term(const Rational& k, const std::string& body, bool first) {
    std::string mag = k.abs().is_one() ? body : k.abs().str() + "*" + body;
    if (first) return (k.sign() < 0 ? "-" : "") + mag;
    return (k.sign() < 0 ? " - " : " + ") + mag;
}

struct Unknown {
    FunctionSymbolPtr sym;
    std::vector<Var> sig;
};

struct LinPart {
    AtomPtr atom;
    int live_idx = -1;
    int depth = 0;  // antiderivative layers between the atom and the unknown
    JetExpr coeff;
};

struct LinEq {
    std::vector<LinPart> parts;  // canonical atom order, one entry per atom
    JetExpr rest;                // unknown-free remainder
    bool nonlinear = false;
};

struct Engine {
    const DeterminingSystem& sys;
    SolveOptions opt;
    Declarations& decls;

    ReducedGauge gauge;
    JetExpr H, hatH;
    JetExpr Fe, Ge;
    std::vector<Unknown> live;
    std::vector<JetExpr> eqs;
    struct Fam {
        FunctionSymbolPtr sym;
        std::vector<Var> sig;
        std::string constraint;  // empty: unconstrained free direction
    };
    std::vector<Fam> fams;
    std::set<std::string> sides;
    SolveResult res;

    Engine(const DeterminingSystem& s, const SolveOptions& o, Declarations& d)
        : sys(s), opt(o), decls(d), gauge(s.gauge), H(s.H), hatH(s.hat_H) {}

    JetExpr g_full(const JetExpr& fe, const JetExpr& ge) const {
        return gauge == ReducedGauge::DivergenceForm ? ge - fe.diff(Var::u(0)) * hatH
                                                     : ge - fe.diff(Var::u(1)) * H;
    }

    // ---- unknown bookkeeping -------------------------------------------
    const Unknown& add_unknown(const std::string& base, std::vector<Var> sig) {
        auto sym = detail::fresh_symbol(decls, sig.empty() ? "k" : base,
                                        static_cast<int>(sig.size()));
        live.push_back(Unknown{sym, std::move(sig)});
        return live.back();
    }

    int live_of(const Atom& a, int* depth) const {
        for (size_t i = 0; i < live.size(); ++i) {
            int d = detail::antiderivative_depth(a, live[i].sym->name);
            if (d >= 0) {
                if (depth) *depth = d;
                return static_cast<int>(i);
            }
        }
        return -1;
    }

    bool contains_unknown(const JetExpr& e, const std::string& name) const {
        return e.any_atom([&](const Atom& a) {
            return detail::antiderivative_depth(a, name) >= 0;
        });
    }

    void assign(const std::string& name, const JetExpr& value, const std::string& why) {
        auto it = std::find_if(live.begin(), live.end(),
                               [&](const Unknown& u) { return u.sym->name == name; });
        if (it == live.end()) throw std::logic_error("assign: unknown not live: " + name);
        Unknown w = *it;
        live.erase(it);
        res.log.push_back(why);
        Fe = substitute_symbol(Fe, w.sym, w.sig, value, decls);
        Ge = substitute_symbol(Ge, w.sym, w.sig, value, decls);
        for (JetExpr& e : eqs) e = substitute_symbol(e, w.sym, w.sig, value, decls);
    }

    // ---- linear decomposition of one equation --------------------------
    LinEq collect(const JetExpr& eq) const {
        LinEq out;
        std::map<std::string, size_t> index;
        for (const Term& tm : eq.num().terms) {
            JetExpr cof{tm.coeff};
            AtomPtr found;
            int fidx = -1, fdepth = 0, unknowns = 0;
            for (const auto& fac : tm.mono.factors) {
                if (!fac.first.is_var()) {
                    int d = 0;
                    int li = live_of(*fac.first.atom, &d);
                    if (li >= 0) {
                        unknowns += fac.second;
                        found = fac.first.atom;
                        fidx = li;
                        fdepth = d;
                        continue;
                    }
                }
                JetExpr f = fac.first.is_var() ? JetExpr::variable(fac.first.var())
                                               : atom_ref(fac.first.atom);
                cof = cof * f.pow(fac.second);
            }
            if (unknowns > 1) {
                out.nonlinear = true;
                return out;
            }
            JetExpr scaled =
                cof / JetExpr::fraction(eq.den(), Polynomial::constant(Rational(1)));
            if (!found) {
                out.rest = out.rest + scaled;
                continue;
            }
            auto it = index.find(found->key());
            if (it == index.end()) {
                index[found->key()] = out.parts.size();
                out.parts.push_back(LinPart{found, fidx, fdepth, scaled});
            } else {
                out.parts[it->second].coeff = out.parts[it->second].coeff + scaled;
            }
        }
        return out;
    }

    void note_generic_coeff(const JetExpr& c) {
        if (c.as_constant()) return;
        if (c.any_atom([](const Atom&) { return true; }))
            sides.insert("assumed nonzero: " + c.str());
    }

    // ---- rules ----------------------------------------------------------

    // single derivative atom with nonzero coefficient: the unknown loses
    // structure (dropped argument, polynomial tail, or additive split)
    bool try_force(size_t ei) {
        LinEq lin = collect(eqs[ei]);
        if (lin.nonlinear || lin.parts.size() != 1 || !lin.rest.is_canonical_zero())
            return false;
        const LinPart& p = lin.parts[0];
        if (p.depth != 0) return false;
        if (is_zero(p.coeff, opt.seed).kind != ZeroKind::No) return false;
        Unknown w = live[p.live_idx];
        std::vector<int> slots;
        for (size_t i = 0; i < p.atom->deriv.size(); ++i)
            if (p.atom->deriv[i] > 0) slots.push_back(static_cast<int>(i));
        JetExpr value;
        if (slots.empty()) {
            value = JetExpr();
        } else if (slots.size() == 1) {
            Var v = w.sig[slots[0]];
            int k = p.atom->deriv[slots[0]];
            auto nsig = sig_without(w.sig, v);
            if (k == 1) {
                value = atom_of(add_unknown("c", nsig).sym, nsig);
            } else {
                for (int j = 0; j < k; ++j) {
                    auto nsig2 = nsig;
                    value = value + atom_of(add_unknown("c", nsig2).sym, nsig) *
                                        JetExpr::variable(v).pow(j);
                }
            }
        } else if (slots.size() == 2 && p.atom->deriv[slots[0]] == 1 &&
                   p.atom->deriv[slots[1]] == 1) {
            Var va = w.sig[slots[0]], vb = w.sig[slots[1]];
            auto s1 = sig_without(w.sig, vb), s2 = sig_without(w.sig, va);
            FunctionSymbolPtr f1 = add_unknown("c", s1).sym;
            FunctionSymbolPtr f2 = add_unknown("c", s2).sym;
            value = atom_of(f1, s1) + atom_of(f2, s2);
        } else {
            return false;
        }
        note_generic_coeff(p.coeff);
        assign(w.sym->name, value,
               "forced " + atom_ref(p.atom).str() + " = 0 (coefficient " + p.coeff.str() +
                   ")");
        return true;
    }

    // underived unknown with invertible coefficient: solve algebraically
    bool try_algebraic(size_t ei) {
        LinEq lin = collect(eqs[ei]);
        if (lin.nonlinear) return false;
        for (const LinPart& p : lin.parts) {
            if (p.depth != 0) continue;
            bool underived = true;
            for (int d : p.atom->deriv)
                if (d) underived = false;
            if (!underived) continue;
            if (is_zero(p.coeff, opt.seed).kind != ZeroKind::No) continue;
            const Unknown& w = live[p.live_idx];
            JetExpr value = -(eqs[ei] - p.coeff * atom_ref(p.atom)) / p.coeff;
            if (contains_unknown(value, w.sym->name)) continue;
            if (!vars_subset(value, w.sig)) continue;
            note_generic_coeff(p.coeff);
            assign(w.sym->name, value,
                   "solved " + atom_ref(p.atom).str() + " = " + value.str());
            return true;
        }
        return false;
    }

    // top derivative along one argument: substitute the integral plus a
    // polynomial gauge tail of lower-order integration constants
    bool try_integrate(size_t ei) {
        LinEq lin = collect(eqs[ei]);
        if (lin.nonlinear) return false;
        for (const LinPart& p : lin.parts) {
            if (p.depth != 0) continue;
            std::vector<int> slots;
            for (size_t i = 0; i < p.atom->deriv.size(); ++i)
                if (p.atom->deriv[i] > 0) slots.push_back(static_cast<int>(i));
            if (slots.size() != 1) continue;
            if (is_zero(p.coeff, opt.seed).kind != ZeroKind::No) continue;
            const Unknown w = live[p.live_idx];
            Var v = w.sig[slots[0]];
            int k = p.atom->deriv[slots[0]];
            JetExpr rhs = -(eqs[ei] - p.coeff * atom_ref(p.atom)) / p.coeff;
            if (contains_unknown(rhs, w.sym->name)) continue;
            if (!vars_subset(rhs, w.sig)) continue;
            JetExpr acc = rhs;
            bool ok = true;
            try {
                for (int j = 0; j < k; ++j) acc = integrate_wrt(acc, v, decls);
            } catch (const UnsupportedIntegrand&) {
                ok = false;
            }
            if (!ok) continue;
            JetExpr value = acc;
            auto nsig = sig_without(w.sig, v);
            for (int j = 0; j < k; ++j) {
                auto nsig2 = nsig;
                value = value + atom_of(add_unknown("c", nsig2).sym, nsig) *
                                    JetExpr::variable(v).pow(j);
            }
            note_generic_coeff(p.coeff);
            assign(w.sym->name, value,
                   "integrated " + atom_ref(p.atom).str() + " = " + rhs.str() +
                       " along " + v.str());
            return true;
        }
        return false;
    }

    // constant-coefficient ODE in a single argument, solved through rational
    // characteristic roots
    bool try_ode(size_t ei) {
        LinEq lin = collect(eqs[ei]);
        if (lin.nonlinear || lin.parts.empty() || !lin.rest.is_canonical_zero())
            return false;
        int idx = lin.parts[0].live_idx;
        int slot = -1;
        int topk = 0;
        for (const LinPart& p : lin.parts) {
            if (p.depth != 0 || p.live_idx != idx) return false;
            for (size_t i = 0; i < p.atom->deriv.size(); ++i)
                if (p.atom->deriv[i] > 0) {
                    if (slot >= 0 && slot != static_cast<int>(i)) return false;
                    slot = static_cast<int>(i);
                    topk = std::max(topk, p.atom->deriv[i]);
                }
        }
        if (slot < 0 || topk < 1) return false;
        std::vector<Rational> coeffs(static_cast<size_t>(topk) + 1, Rational(0));
        for (const LinPart& p : lin.parts) {
            auto c = p.coeff.as_constant();
            if (!c) return false;
            coeffs[static_cast<size_t>(p.atom->deriv[slot])] += *c;
        }
        auto roots = detail::rational_roots(coeffs);
        if (!roots) return false;
        const Unknown w = live[idx];
        Var v = w.sig[slot];
        auto nsig = sig_without(w.sig, v);
        JetExpr value;
        std::ostringstream rstr;
        for (const auto& [r, m] : *roots) {
            for (int j = 0; j < m; ++j) {
                auto nsig2 = nsig;
                JetExpr mode = atom_of(add_unknown("c", nsig2).sym, nsig) *
                               JetExpr::variable(v).pow(j);
                if (!r.is_zero())
                    mode = mode * JetExpr::exp(JetExpr(r) * JetExpr::variable(v));
                value = value + mode;
            }
            rstr << (rstr.tellp() > 0 ? ", " : "") << r.str() << "^" << m;
        }
        assign(w.sym->name, value,
               "solved constant-coefficient equation for " + w.sym->name + " in " +
                   v.str() + " (roots " + rstr.str() + ")");
        return true;
    }

    // heat-shaped pair k1 W_a + k2 W_bb + lower(a) = 0: constrained symbol
    // plus a particular part integrated along a
    bool try_family(size_t ei) {
        LinEq lin = collect(eqs[ei]);
        if (lin.nonlinear) return false;
        std::set<int> cand;
        for (const LinPart& p : lin.parts) cand.insert(p.live_idx);
        for (int idx : cand) {
            std::vector<const LinPart*> wparts;
            bool clean = true;
            for (const LinPart& p : lin.parts)
                if (p.live_idx == idx) {
                    if (p.depth != 0) clean = false;
                    wparts.push_back(&p);
                }
            if (!clean || wparts.size() != 2) continue;
            auto pattern = [](const LinPart& p, int order) -> int {
                int slot = -1;
                for (size_t i = 0; i < p.atom->deriv.size(); ++i)
                    if (p.atom->deriv[i] > 0) {
                        if (slot >= 0) return -1;
                        if (p.atom->deriv[i] != order) return -1;
                        slot = static_cast<int>(i);
                    }
                return slot;
            };
            const LinPart *pa = wparts[0], *pb = wparts[1];
            int sa = pattern(*pa, 1), sb = pattern(*pb, 2);
            if (sa < 0 || sb < 0) {
                std::swap(pa, pb);
                sa = pattern(*pa, 1);
                sb = pattern(*pb, 2);
            }
            if (sa < 0 || sb < 0 || sa == sb) continue;
            auto k1 = pa->coeff.as_constant(), k2 = pb->coeff.as_constant();
            if (!k1 || !k2 || k1->is_zero() || k2->is_zero()) continue;
            const Unknown w = live[idx];
            Var va = w.sig[sa], vb = w.sig[sb];
            JetExpr rest =
                eqs[ei] - pa->coeff * atom_ref(pa->atom) - pb->coeff * atom_ref(pb->atom);
            if (contains_unknown(rest, w.sym->name)) continue;
            if (!vars_subset(rest, {va})) continue;
            JetExpr particular;
            if (!rest.is_canonical_zero()) {
                try {
                    particular = -integrate_wrt(rest, va, decls) / JetExpr(*k1);
                } catch (const UnsupportedIntegrand&) {
                    continue;
                }
            }
            Rational factor = -*k1 / *k2;
            auto sym = detail::fresh_symbol(decls, "sigma",
                                            static_cast<int>(w.sig.size()),
                                            SecondOrderConstraint{sa, sb, factor});
            std::string constraint =
                signed_term(*k1, sym->name + "_" + var_suffix(va), true) +
                signed_term(*k2, sym->name + "_" + var_suffix(vb) + var_suffix(vb),
                            false) +
                " = 0";
            fams.push_back(Fam{sym, w.sig, constraint});
            assign(w.sym->name, atom_of(sym, w.sig) + particular,
                   "introduced constrained symbol " + sym->name + " with " + constraint);
            return true;
        }
        return false;
    }

    // additive separation: terms carrying v equal a function of the shared
    // variables only
    bool try_separate(size_t ei) {
        const Polynomial& P = eqs[ei].num();
        if (P.terms.size() < 2) return false;
        auto term_support = [&](const Term& tm) {
            std::set<int> s;
            for (const auto& fac : tm.mono.factors) {
                if (fac.first.is_var()) {
                    s.insert(fac.first.var().code);
                } else {
                    for (const JetExpr& arg : fac.first.atom->args)
                        for (Var v : arg.variables()) s.insert(v.code);
                }
            }
            return s;
        };
        std::vector<std::set<int>> supp;
        std::set<int> all;
        for (const Term& tm : P.terms) {
            supp.push_back(term_support(tm));
            all.insert(supp.back().begin(), supp.back().end());
        }
        for (auto it = all.rbegin(); it != all.rend(); ++it) {
            int v = *it;
            Polynomial with_v, without_v;
            std::set<int> sv, s0;
            for (size_t i = 0; i < P.terms.size(); ++i) {
                if (supp[i].count(v)) {
                    with_v.terms.push_back(P.terms[i]);
                    sv.insert(supp[i].begin(), supp[i].end());
                } else {
                    without_v.terms.push_back(P.terms[i]);
                    s0.insert(supp[i].begin(), supp[i].end());
                }
            }
            if (with_v.terms.empty() || without_v.terms.empty()) continue;
            bool exclusive = false;
            for (int w : s0)
                if (!sv.count(w)) exclusive = true;
            if (!exclusive) continue;
            std::vector<Var> shared;
            for (int c : sv)
                if (s0.count(c)) shared.push_back({c});
            const Unknown& rho = add_unknown("r", shared);
            JetExpr rho_atom = atom_of(rho.sym, rho.sig);
            JetExpr ev = JetExpr::fraction(with_v, Polynomial::constant(Rational(1)));
            JetExpr e0 = JetExpr::fraction(without_v, Polynomial::constant(Rational(1)));
            res.log.push_back("separated " + Var{v}.str() + "-dependent terms through " +
                              rho.sym->name);
            eqs[ei] = ev - rho_atom;
            eqs.push_back(e0 + rho_atom);
            return true;
        }
        return false;
    }

    // ---- trivial-direction gauge ---------------------------------------

    bool tx_cofactored(const std::string& name, const JetExpr& e) const {
        auto tx_only = [](const JetExpr& a) {
            for (Var v : a.variables())
                if (v != Var::t() && v != Var::x()) return false;
            return true;
        };
        bool num_has = false;
        for (const Term& tm : e.num().terms) {
            bool has = false;
            for (const auto& fac : tm.mono.factors)
                if (!fac.first.is_var() &&
                    detail::antiderivative_depth(*fac.first.atom, name) >= 0)
                    has = true;
            if (!has) continue;
            num_has = true;
            for (const auto& fac : tm.mono.factors) {
                if (fac.first.is_var()) {
                    if (fac.first.var() != Var::t() && fac.first.var() != Var::x())
                        return false;
                    continue;
                }
                if (detail::antiderivative_depth(*fac.first.atom, name) >= 0) {
                    if (fac.second != 1) return false;
                    continue;
                }
                if (!tx_only(atom_ref(fac.first.atom))) return false;
            }
        }
        if (num_has &&
            !tx_only(JetExpr::fraction(e.den(), Polynomial::constant(Rational(1)))))
            return false;
        return true;
    }

    // zero or absorb unknowns that enter the conserved vector only through
    // (t,x)-dependent parts; such parts are conserved vectors in t and x
    // alone and therefore trivial
    bool try_gauge() {
        std::vector<char> td(live.size(), 0);
        for (size_t i = 0; i < live.size(); ++i) {
            bool txsig = true;
            for (Var v : live[i].sig)
                if (v != Var::t() && v != Var::x()) txsig = false;
            if (!txsig) continue;
            const std::string& n = live[i].sym->name;
            if (tx_cofactored(n, Fe) && tx_cofactored(n, Ge)) td[i] = 1;
        }
        for (size_t ei = 0; ei < eqs.size(); ++ei) {
            LinEq lin = collect(eqs[ei]);
            if (lin.nonlinear) continue;
            std::vector<const LinPart*> tdparts;
            std::set<std::string> names;
            for (const LinPart& p : lin.parts)
                if (td[p.live_idx]) {
                    tdparts.push_back(&p);
                    names.insert(live[p.live_idx].sym->name);
                }
            if (tdparts.empty()) continue;
            bool unique = true;
            for (size_t ej = 0; ej < eqs.size() && unique; ++ej) {
                if (ej == ei) continue;
                for (const std::string& n : names)
                    if (contains_unknown(eqs[ej], n)) unique = false;
            }
            if (!unique) continue;
            JetExpr non_td = eqs[ei];
            for (const LinPart* p : tdparts) non_td = non_td - p->coeff * atom_ref(p->atom);
            if (non_td.is_canonical_zero()) {
                std::string shown = eqs[ei].str();
                for (const std::string& n : names)
                    assign(n, JetExpr(),
                           "gauge: dropped trivial (t,x)-only direction " + n +
                               " [" + shown + " = 0]");
                return true;
            }
            // absorb through a t-slot when possible so explicit x stays out
            // of the flux side
            std::vector<const LinPart*> scan;
            for (int pass = 0; pass < 2; ++pass)
                for (const LinPart* p : tdparts) {
                    bool tside = true;
                    for (size_t i = 0; i < p->atom->deriv.size(); ++i)
                        if (p->atom->deriv[i] > 0 &&
                            live[p->live_idx].sig[i] != Var::t())
                            tside = false;
                    if ((pass == 0) == tside) scan.push_back(p);
                }
            for (const LinPart* p : scan) {
                if (p->depth != 0) continue;
                const Unknown w = live[p->live_idx];
                int count = 0;
                for (const LinPart* q : tdparts)
                    if (q->live_idx == p->live_idx) ++count;
                if (count != 1) continue;
                auto c = p->coeff.as_constant();
                if (!c || c->is_zero()) continue;
                std::vector<int> slots;
                for (size_t i = 0; i < p->atom->deriv.size(); ++i)
                    if (p->atom->deriv[i] > 0) slots.push_back(static_cast<int>(i));
                if (slots.size() > 1) continue;
                JetExpr acc = -non_td / JetExpr(*c);
                if (contains_unknown(acc, w.sym->name)) continue;
                bool ok = true;
                if (!slots.empty()) {
                    Var v = w.sig[slots[0]];
                    try {
                        for (int j = 0; j < p->atom->deriv[slots[0]]; ++j)
                            acc = integrate_wrt(acc, v, decls);
                    } catch (const UnsupportedIntegrand&) {
                        ok = false;
                    }
                }
                if (!ok || !vars_subset(acc, w.sig)) continue;
                std::string shown = eqs[ei].str();
                for (const std::string& n : names)
                    if (n != w.sym->name)
                        assign(n, JetExpr(),
                               "gauge: dropped trivial (t,x)-only direction " + n);
                assign(w.sym->name, acc,
                       "gauge: absorbed the residual equation into " + w.sym->name +
                           " [" + shown + " = 0]");
                return true;
            }
        }
        return false;
    }

    // ---- main loop -------------------------------------------------------

    void normalize_split() {
        std::set<int> sig_codes;
        std::set<std::string> names;
        for (const Unknown& u : live) {
            for (Var v : u.sig) sig_codes.insert(v.code);
            names.insert(u.sym->name);
            names.insert(u.sym->name + "_int");
            names.insert(u.sym->name + "_int_int");
        }
        std::vector<JetExpr> out;
        std::set<std::string> seen;
        std::vector<std::string> new_sides;
        for (const JetExpr& e : eqs) {
            if (e.is_canonical_zero()) continue;
            auto groups = detail::split_by_free(e, sig_codes, names,
                                                /*allow_atom_split=*/true, &new_sides);
            for (auto& g : groups) {
                LinEq lin = collect(g.eq);
                if (!lin.nonlinear && lin.parts.empty()) {
                    ZeroResult z = is_zero(g.eq, opt.seed);
                    if (z.kind == ZeroKind::No) {
                        res.residual.push_back("inconsistent constraint: " + g.eq.str() +
                                               " = 0");
                        continue;
                    }
                    if (z.kind == ZeroKind::ProbablyZero)
                        sides.insert("residual sampled as zero: " + g.eq.str());
                    continue;
                }
                if (seen.insert(g.eq.str()).second) out.push_back(g.eq);
            }
        }
        for (auto& s : new_sides) sides.insert(s);
        eqs = std::move(out);
    }

    bool apply_rule() {
        for (size_t i = 0; i < eqs.size(); ++i)
            if (try_force(i)) return true;
        for (size_t i = 0; i < eqs.size(); ++i)
            if (try_algebraic(i)) return true;
        for (size_t i = 0; i < eqs.size(); ++i)
            if (try_integrate(i)) return true;
        for (size_t i = 0; i < eqs.size(); ++i)
            if (try_ode(i)) return true;
        for (size_t i = 0; i < eqs.size(); ++i)
            if (try_family(i)) return true;
        for (size_t i = 0; i < eqs.size(); ++i)
            if (try_separate(i)) return true;
        return try_gauge();
    }

    void init() {
        if (gauge == ReducedGauge::DivergenceForm) {
            Fe = atom_of(sys.F, sys.F_args);
            Ge = atom_of(sys.G, sys.G_args);
            live.push_back(Unknown{sys.F, sys.F_args});
            live.push_back(Unknown{sys.G, sys.G_args});
            eqs = sys.equations;
            res.log.push_back("divergence-form gauge: unknowns kept at function level");
        } else {
            auto build = [&](const std::vector<Var>& sig, const char* base) {
                std::vector<Var> jets, csig;
                for (Var v : sig)
                    (v == Var::u(0) || v == Var::u(1) ? jets : csig).push_back(v);
                JetExpr sum;
                int d = std::max(opt.degree, 0);
                if (jets.empty()) {
                    auto cs = csig;
                    return atom_of(add_unknown(base, cs).sym, csig);
                }
                for (int i = 0; i <= d; ++i) {
                    JetExpr mi = JetExpr::variable(jets[0]).pow(i);
                    if (jets.size() == 1) {
                        auto cs = csig;
                        sum = sum + atom_of(add_unknown(base, cs).sym, csig) * mi;
                        continue;
                    }
                    for (int j = 0; i + j <= d; ++j) {
                        auto cs = csig;
                        sum = sum + atom_of(add_unknown(base, cs).sym, csig) * mi *
                                        JetExpr::variable(jets[1]).pow(j);
                    }
                }
                return sum;
            };
            Fe = build(sys.F_args, "c");
            Ge = build(sys.G_args, "d");
            res.log.push_back("generic gauge: polynomial ansatz of degree " +
                              std::to_string(std::max(opt.degree, 0)) +
                              " in the jet arguments");
            eqs = {total_t(Fe, H) + total_x(g_full(Fe, Ge))};
        }
    }

    void run() {
        init();
        bool stuck = false;
        for (int iter = 0; iter < 400 && !stuck; ++iter) {
            normalize_split();
            if (eqs.empty()) break;
            stuck = !apply_rule();
        }
        if (!stuck) normalize_split();
        for (const JetExpr& e : eqs) res.residual.push_back(e.str() + " = 0");
        finalize();
    }

    // ---- output assembly --------------------------------------------------

    JetExpr zero_sym(const JetExpr& e, const FunctionSymbolPtr& sym,
                     const std::vector<Var>& sig) {
        if (!contains_unknown(e, sym->name)) return e;
        return substitute_symbol(e, sym, sig, JetExpr(), decls);
    }

    void finalize() {
        // unconstrained function directions: trivial ones are gauged away,
        // genuine ones become unconstrained families
        for (bool changed = true; changed;) {
            changed = false;
            for (size_t i = 0; i < live.size(); ++i) {
                if (live[i].sig.empty()) continue;
                bool in_eqs = false;
                for (const JetExpr& e : eqs)
                    if (contains_unknown(e, live[i].sym->name)) in_eqs = true;
                if (in_eqs) continue;
                JetExpr fdir = Fe - zero_sym(Fe, live[i].sym, live[i].sig);
                Characteristic lam = characteristic_of({fdir, JetExpr(), true});
                if (is_zero(lam.lambda, opt.seed).kind == ZeroKind::Yes) {
                    assign(live[i].sym->name, JetExpr(),
                           "dropped free trivial direction " + live[i].sym->name);
                } else {
                    fams.push_back(Fam{live[i].sym, live[i].sig, ""});
                    res.log.push_back("kept free function direction " +
                                      live[i].sym->name + " as a family");
                    live.erase(live.begin() + static_cast<long>(i));
                }
                changed = true;
                break;
            }
        }

        res.completeness = !res.residual.empty() ? Completeness::Heuristic
                           : gauge == ReducedGauge::DivergenceForm
                               ? Completeness::FunctionLevel
                               : Completeness::CompleteForAnsatz;

        JetExpr Gfull = g_full(Fe, Ge);

        // families
        for (const Fam& f : fams) {
            JetExpr ff = Fe, gf = Gfull;
            for (const Fam& o : fams)
                if (o.sym->name != f.sym->name) {
                    ff = zero_sym(ff, o.sym, o.sig);
                    gf = zero_sym(gf, o.sym, o.sig);
                }
            for (const Unknown& u : live) {
                ff = zero_sym(ff, u.sym, u.sig);
                gf = zero_sym(gf, u.sym, u.sig);
            }
            if (ff.is_canonical_zero() && gf.is_canonical_zero()) continue;
            ConservedVector vec{ff, gf, true};
            ZeroResult zc = is_zero(total_t(ff, H) + total_x(gf), opt.seed);
            if (zc.kind == ZeroKind::No) {
                res.residual.push_back("family " + f.sym->name +
                                       " failed the divergence identity");
                res.completeness = Completeness::Heuristic;
                continue;
            }
            res.families.push_back(LawFamily{f.sym, f.constraint, vec,
                                             characteristic_of(vec)});
        }

        // finite directions from the remaining constants
        struct Candidate {
            ConservedVector vec;
            JetExpr lambda;
        };
        std::vector<Candidate> cands;
        for (size_t i = 0; i < live.size(); ++i) {
            if (!live[i].sig.empty()) continue;  // stuck function unknowns stay out
            JetExpr fb = Fe, gb = Gfull;
            for (const Fam& o : fams) {
                fb = zero_sym(fb, o.sym, o.sig);
                gb = zero_sym(gb, o.sym, o.sig);
            }
            for (size_t j = 0; j < live.size(); ++j) {
                JetExpr val = (i == j) ? JetExpr(1) : JetExpr();
                fb = substitute_symbol(fb, live[j].sym, live[j].sig, val, decls);
                gb = substitute_symbol(gb, live[j].sym, live[j].sig, val, decls);
            }
            if (fb.is_canonical_zero() && gb.is_canonical_zero()) continue;
            JetExpr c = total_t(fb, H) + total_x(gb);
            if (!c.is_canonical_zero()) {
                res.log.push_back("direction " + live[i].sym->name +
                                  " dropped: divergence identity not certified");
                continue;
            }
            JetExpr lam = characteristic_of({fb, gb, true}).lambda;
            if (is_zero(lam, opt.seed).kind == ZeroKind::Yes) {
                res.log.push_back("direction " + live[i].sym->name +
                                  " dropped: trivial (zero characteristic)");
                continue;
            }
            cands.push_back(Candidate{ConservedVector{fb, gb, true}, lam});
        }

        // independence modulo trivial vectors: the characteristics must stay
        // linearly independent over Q
        std::vector<Candidate> indep;
        std::vector<Polynomial> kept;
        Polynomial common = Polynomial::constant(Rational(1));
        for (const Candidate& c : cands) {
            Polynomial g = poly_gcd(common, c.lambda.den());
            common = poly_divexact(poly_mul(common, c.lambda.den()), g);
        }
        for (const Candidate& c : cands) {
            Polynomial n =
                poly_mul(c.lambda.num(), poly_divexact(common, c.lambda.den()));
            for (const Polynomial& k : kept) {
                if (n.is_zero()) break;
                Rational coeff;
                bool found = false;
                for (const Term& tm : n.terms)
                    if (monomial_compare(tm.mono, k.leading().mono) == 0) {
                        coeff = tm.coeff;
                        found = true;
                    }
                if (!found) continue;
                n = poly_sub(n, poly_mul(k, Polynomial::constant(
                                                coeff / k.leading().coeff)));
            }
            if (n.is_zero()) {
                res.log.push_back(
                    "direction dropped: dependent modulo trivial vectors");
                continue;
            }
            kept.push_back(n);
            std::sort(kept.begin(), kept.end(),
                      [](const Polynomial& a, const Polynomial& b) {
                          return monomial_compare(a.leading().mono, b.leading().mono) >
                                 0;
                      });
            indep.push_back(c);
        }

        // scale to unit leading coefficient, then order deterministically
        for (Candidate& c : indep) {
            Rational lead = c.vec.F.num().is_zero() ? Rational(1)
                                                    : c.vec.F.num().leading().coeff;
            JetExpr s{Rational(1) / lead};
            c.vec.F = c.vec.F * s;
            c.vec.G = c.vec.G * s;
            c.lambda = c.lambda * s;
        }
        std::stable_sort(indep.begin(), indep.end(),
                         [](const Candidate& a, const Candidate& b) {
                             auto key = [](const Candidate& c) {
                                 std::string s = c.vec.F.str();
                                 return std::make_tuple(c.vec.F.degree_in(Var::u(1)),
                                                        c.vec.F.degree_in(Var::u(0)),
                                                        s.size(), s);
                             };
                             return key(a) < key(b);
                         });
        for (Candidate& c : indep)
            res.basis.emplace_back(std::move(c.vec), Characteristic{c.lambda});

        for (const std::string& s : sides) res.side_conditions.push_back(s);
    }
};

}  // namespace

SolveResult solve_determining(const DeterminingSystem& sys,
                              const SolveOptions& options, Declarations& decls) {
    Engine e(sys, options, decls);
    e.run();
    return std::move(e.res);
}

}  // namespace jetcl
