#include "jetcl/verify.hpp"

#include <cmath>
#include <random>
#include <set>
#include <sstream>

namespace jetcl {

namespace {

// ---------------------------------------------------------------------------
// Sampling support
// ---------------------------------------------------------------------------

void collect_funcs(const JetExpr& e, std::map<std::string, AtomPtr>& out) {
    for (const AtomPtr& a : e.atoms()) {
        if (a->kind == AtomKind::Func) out.emplace(a->key(), a);
        for (const JetExpr& arg : a->args) collect_funcs(arg, out);
    }
}

void collect_var_codes(const JetExpr& e, std::set<int>& out) {
    for (Var v : e.variables()) out.insert(v.code);
}

// Distinct atoms of one symbol and derivative index are sampled as
// independent coordinates; that is only consistent with an actual function
// when their argument tuples differ, so colliding points are rejected.
bool args_collide(const std::vector<AtomPtr>& fa, const EvalPoint& pt) {
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
}

std::string describe_point(const ResidualSample& s) {
    std::ostringstream os;
    os << "{";
    bool first = true;
    for (const auto& [k, v] : s.point) {
        if (!first) os << ", ";
        first = false;
        os << k << " = " << v;
    }
    os << "}";
    return os.str();
}

// Certify that residual vanishes: canonically, or at opts.samples accepted
// points. On a violation throws Refuted (with the witness sample) when
// as_refutation is set, Mismatch (with the residual) otherwise.
Certificate certify(const JetExpr& residual, const VerifyOptions& opts,
                    bool as_refutation, const std::string& what) {
    Certificate cert;
    cert.residual = residual;
    cert.seed = opts.seed;
    if (residual.is_canonical_zero()) return cert;

    cert.kind = CertificateKind::NumericSampled;
    std::set<int> codes;
    collect_var_codes(residual, codes);
    std::map<std::string, AtomPtr> funcs;
    collect_funcs(residual, funcs);
    std::vector<AtomPtr> fa;
    for (const auto& [k, a] : funcs) fa.push_back(a);

    std::mt19937 rng(opts.seed);
    std::uniform_real_distribution<double> mag(1.0 / 3.0, 3.0);
    std::uniform_int_distribution<int> sgn(0, 1);
    auto draw = [&]() {
        double v = mag(rng);
        return sgn(rng) ? v : -v;
    };

    int done = 0;
    for (int attempts = 0; done < opts.samples && attempts < opts.samples * 64;
         ++attempts) {
        EvalPoint pt;
        for (int c : codes) pt.vars[c] = draw();
        for (const auto& [k, a] : funcs) pt.atoms[k] = draw();
        double v;
        try {
            if (args_collide(fa, pt)) continue;
            v = evaluate(residual, pt);
        } catch (const EvalDomainError&) {
            continue;
        }
        if (!std::isfinite(v)) continue;

        ResidualSample s;
        for (const auto& [c, val] : pt.vars) s.point[Var{c}.str()] = val;
        for (const auto& [k, val] : pt.atoms) s.point[k] = val;
        s.value = v;
        cert.samples.push_back(s);
        ++done;
        if (std::abs(v) > opts.tolerance) {
            std::ostringstream os;
            os << what << ": residual " << residual.str() << " evaluates to "
               << v << " at " << describe_point(s);
            if (as_refutation) throw Refuted(os.str(), s);
            throw Mismatch(os.str(), residual);
        }
        cert.max_abs_residual = std::max(cert.max_abs_residual, std::abs(v));
    }
    if (done < opts.samples)
        throw std::runtime_error(what +
                                 ": could not draw enough valid sample points "
                                 "(expression too singular)");
    cert.sample_count = done;
    return cert;
}

// Symbol rewrites that canonicalization applied while the inputs were built:
// derivative constraints and antiderivative links of every function symbol
// appearing in the given expressions.
std::vector<std::string> active_constraints(const std::vector<JetExpr>& exprs) {
    std::map<std::string, AtomPtr> funcs;
    for (const JetExpr& e : exprs) collect_funcs(e, funcs);
    std::set<std::string> seen;
    std::vector<std::string> out;
    for (const auto& [k, a] : funcs) {
        const FunctionSymbolPtr& sym = a->sym;
        if (!seen.insert(sym->name).second) continue;
        if (sym->constraint) {
            const SecondOrderConstraint& c = *sym->constraint;
            std::ostringstream os;
            os << sym->name << ": second derivative in slot " << c.arg_b
               << " rewrites to (" << c.factor.str()
               << ") * first derivative in slot " << c.arg_a;
            out.push_back(os.str());
        }
        if (sym->base)
            out.push_back(sym->name + "' = " + sym->base->name +
                          " (antiderivative link)");
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// verify_conserved
// ---------------------------------------------------------------------------

Certificate verify_conserved(const ConservedVector& cv,
                             const EvolutionEquation& eq,
                             const VerifyOptions& opts) {
    JetExpr residual = total_t(cv.F, eq.rhs) + total_x(cv.G);
    Certificate cert = certify(residual, opts, true, "conservation");
    cert.constraints = active_constraints({cv.F, cv.G, eq.rhs});
    return cert;
}

// ---------------------------------------------------------------------------
// verify_characteristic
// ---------------------------------------------------------------------------

Certificate verify_characteristic(const ConservedVector& cv,
                                  const Characteristic& lambda,
                                  const EvolutionEquation& eq,
                                  const VerifyOptions& opts) {
    if (!cv.reduced || cv.F.order() > 1)
        throw std::invalid_argument(
            "verify_characteristic: conserved vector must be in reduced form");

    // Route 1: the multiplier identity, with u_t-jets independent. For a
    // reduced vector the whole on-shell divergence is carried by the
    // multiplier term plus the null divergence induced by F_{u_x}.
    JetExpr ut = JetExpr::variable(Var::ut(0));
    JetExpr defect = ut - eq.rhs;
    JetExpr identity = total_t_offshell(cv.F) + total_x(cv.G) -
                       lambda.lambda * defect -
                       total_x(cv.F.diff(Var::u(1)) * defect);
    Certificate cert =
        certify(identity, opts, false, "multiplier identity");

    // Route 2: independent recomputation of the characteristic.
    JetExpr recomputed = characteristic_of(cv).lambda;
    Certificate agree = certify(lambda.lambda - recomputed, opts, false,
                                "characteristic agreement");

    if (!agree.symbolic()) {
        cert.kind = CertificateKind::NumericSampled;
        cert.sample_count += agree.sample_count;
        cert.max_abs_residual =
            std::max(cert.max_abs_residual, agree.max_abs_residual);
        cert.samples.insert(cert.samples.end(), agree.samples.begin(),
                            agree.samples.end());
    }
    cert.constraints =
        active_constraints({cv.F, cv.G, lambda.lambda, eq.rhs});
    return cert;
}

// ---------------------------------------------------------------------------
// verify_transformation
// ---------------------------------------------------------------------------

Certificate verify_transformation(const ContactTransformation& tr,
                                  const EvolutionEquation& eq,
                                  const EvolutionEquation& expected,
                                  const VerifyOptions& opts) {
    EvolutionEquation te = apply_transformation(tr, eq);
    JetExpr residual = te.rhs - expected.rhs;
    Certificate cert =
        certify(residual, opts, false, "transformed right-hand side");
    cert.constraints = active_constraints({te.rhs, expected.rhs});
    return cert;
}

}  // namespace jetcl
