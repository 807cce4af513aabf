#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "jetcl/rational.hpp"

namespace jetcl {

class JetExpr;
struct Atom;
using AtomPtr = std::shared_ptr<const Atom>;

// ---------------------------------------------------------------------------
// Variables of the jet space: t, x, and the x-derivative column u, u_x, ...
// Extended jets (u_t, u_tx, ...) used by off-shell checks get their own band.
// ---------------------------------------------------------------------------
struct Var {
    int code = 0;

    static Var t() { return {0}; }
    static Var x() { return {1}; }
    static Var u(int k) { return {2 + k}; }
    /// d^{k+1} u / dt dx^k, treated as an independent coordinate (off-shell).
    static Var ut(int k) { return {1000 + k}; }

    bool is_u() const { return code >= 2 && code < 1000; }
    bool is_ut() const { return code >= 1000; }
    int u_order() const { return code - 2; }
    int ut_order() const { return code - 1000; }

    friend bool operator==(Var a, Var b) { return a.code == b.code; }
    friend bool operator!=(Var a, Var b) { return a.code != b.code; }
    friend bool operator<(Var a, Var b) { return a.code < b.code; }

    std::string str() const;
};

// ---------------------------------------------------------------------------
// Function symbols. A symbol may carry one linear jet constraint of the shape
//   d^2 phi / d(arg_b)^2 = factor * d phi / d(arg_a)
// (enough for heat-type families), applied as a rewrite when atoms are built.
// A symbol may also be registered as the antiderivative of another symbol
// with respect to its single argument.
// ---------------------------------------------------------------------------
struct SecondOrderConstraint {
    int arg_a = 0;       // slot whose first derivative appears on the rhs
    int arg_b = 1;       // slot whose second derivative is rewritten
    Rational factor{1};  // phi_{bb} = factor * phi_a
};

struct FunctionSymbol {
    std::string name;
    int arity = 1;
    std::optional<SecondOrderConstraint> constraint;
    /// Set when this symbol is the antiderivative of `base` w.r.t. its single
    /// argument: d(this)/d(arg) = base(arg).
    std::shared_ptr<const FunctionSymbol> base;
};
using FunctionSymbolPtr = std::shared_ptr<const FunctionSymbol>;

/// Session-level set of declared symbols; owns names used by the parser and
/// hands out antiderivative symbols on demand.
class Declarations {
public:
    FunctionSymbolPtr declare(const std::string& name, int arity);
    FunctionSymbolPtr declare(const FunctionSymbol& sym);
    FunctionSymbolPtr lookup(const std::string& name) const;
    /// The antiderivative symbol of `sym`, named <name>_int, created lazily.
    FunctionSymbolPtr antiderivative(const FunctionSymbolPtr& sym);
    std::vector<FunctionSymbolPtr> all() const;

private:
    std::map<std::string, FunctionSymbolPtr> table_;
};

// ---------------------------------------------------------------------------
// Atoms: opaque multiplicands beyond plain variables. Derivative indices are
// canonicalized at construction (constraint rewrites, antiderivative
// collapse); exp/ln get the two identities exp(a)exp(b)=exp(a+b) and
// ln(exp(a))=a, nothing else.
// ---------------------------------------------------------------------------
enum class AtomKind { Func, Exp, Ln, Sin, Cos };

struct Atom {
    AtomKind kind = AtomKind::Func;
    FunctionSymbolPtr sym;      // Func only
    std::vector<int> deriv;     // Func only, size == arity
    std::vector<JetExpr> args;  // Func: arity entries; others: exactly one

    const std::string& key() const { return key_; }
    std::string key_;  // canonical identity string, set by the factory
};

int atom_compare(const AtomPtr& a, const AtomPtr& b);

// ---------------------------------------------------------------------------
// Monomials and polynomials over {variables} ∪ {atoms}.
// ---------------------------------------------------------------------------
struct BaseRef {
    int var_code = -1;  // >= 0: a Var; -1: atom
    AtomPtr atom;

    bool is_var() const { return var_code >= 0; }
    Var var() const { return {var_code}; }
};
int base_compare(const BaseRef& a, const BaseRef& b);

struct Monomial {
    // factors sorted by base_compare ascending, exponents > 0
    std::vector<std::pair<BaseRef, int>> factors;

    int total_degree() const;
    int degree_of(Var v) const;
    bool is_one() const { return factors.empty(); }
};
int monomial_compare(const Monomial& a, const Monomial& b);  // canonical order
Monomial monomial_mul(const Monomial& a, const Monomial& b, Rational& coeff_out);

struct Term {
    Rational coeff;
    Monomial mono;
};

struct Polynomial {
    // terms sorted by monomial_compare ascending; no zero coefficients
    std::vector<Term> terms;

    bool is_zero() const { return terms.empty(); }
    bool is_constant() const {
        return terms.empty() || (terms.size() == 1 && terms[0].mono.is_one());
    }
    const Term& leading() const { return terms.back(); }

    static Polynomial constant(const Rational& c);
    static Polynomial from_var(Var v);
    static Polynomial from_atom(const AtomPtr& a);
};

Polynomial poly_add(const Polynomial& a, const Polynomial& b);
Polynomial poly_sub(const Polynomial& a, const Polynomial& b);
Polynomial poly_neg(const Polynomial& a);
Polynomial poly_mul(const Polynomial& a, const Polynomial& b);
Polynomial poly_mul_term(const Polynomial& a, const Term& t);
Polynomial poly_pow(const Polynomial& a, int e);
bool poly_equal(const Polynomial& a, const Polynomial& b);
/// Exact division; throws std::logic_error if not exact.
Polynomial poly_divexact(const Polynomial& a, const Polynomial& b);
Polynomial poly_gcd(const Polynomial& a, const Polynomial& b);

// ---------------------------------------------------------------------------
// JetExpr: immutable rational normal form num/den, gcd-reduced, den monic.
// ---------------------------------------------------------------------------
class JetExpr {
public:
    JetExpr() : num_(), den_(Polynomial::constant(Rational(1))) {}
    JetExpr(long n) : JetExpr(Rational(n)) {}
    explicit JetExpr(const Rational& c)
        : num_(Polynomial::constant(c)), den_(Polynomial::constant(Rational(1))) {}

    static JetExpr constant(const Rational& c) { return JetExpr(c); }
    static JetExpr variable(Var v);
    static JetExpr t() { return variable(Var::t()); }
    static JetExpr x() { return variable(Var::x()); }
    static JetExpr u(int k = 0) { return variable(Var::u(k)); }
    /// phi(args) with derivative multi-index (all zeros if omitted).
    static JetExpr function(const FunctionSymbolPtr& sym, std::vector<JetExpr> args,
                            std::vector<int> deriv = {});
    static JetExpr exp(const JetExpr& a);
    static JetExpr ln(const JetExpr& a);
    static JetExpr sin(const JetExpr& a);
    static JetExpr cos(const JetExpr& a);
    /// Build from explicit numerator/denominator (normalizes).
    static JetExpr fraction(Polynomial num, Polynomial den);

    const Polynomial& num() const { return num_; }
    const Polynomial& den() const { return den_; }

    bool is_canonical_zero() const { return num_.is_zero(); }
    bool is_canonical_one() const;
    /// Set if the expression is a rational constant.
    std::optional<Rational> as_constant() const;

    friend JetExpr operator+(const JetExpr& a, const JetExpr& b);
    friend JetExpr operator-(const JetExpr& a, const JetExpr& b);
    friend JetExpr operator*(const JetExpr& a, const JetExpr& b);
    friend JetExpr operator/(const JetExpr& a, const JetExpr& b);
    JetExpr operator-() const;
    JetExpr pow(int e) const;

    friend bool operator==(const JetExpr& a, const JetExpr& b) {
        return poly_equal(a.num_, b.num_) && poly_equal(a.den_, b.den_);
    }
    friend bool operator!=(const JetExpr& a, const JetExpr& b) { return !(a == b); }

    /// Partial derivative with respect to a plain variable (atoms chain-rule
    /// through their arguments; u_k are mutually independent coordinates).
    JetExpr diff(Var v) const;
    JetExpr diff(Var v, int order) const;

    /// Simultaneous substitution of variables by expressions, applied also
    /// inside atom arguments.
    JetExpr substitute(const std::map<int, JetExpr>& var_map) const;

    /// All variables appearing (including inside atom arguments).
    std::vector<Var> variables() const;
    /// Highest k such that u_k appears; -1 if no u-variable appears.
    int order() const;
    bool depends_on(Var v) const;
    /// All distinct atoms appearing at top level of num/den (not recursing
    /// into atom arguments).
    std::vector<AtomPtr> atoms() const;
    /// True if some Func atom (anywhere, including nested args) satisfies p.
    bool any_atom(const std::function<bool(const Atom&)>& p) const;

    /// Degree in v of numerator minus implicit; requires den independent of v
    /// for coefficient extraction helpers below.
    int degree_in(Var v) const;
    /// Coefficients of v^0..v^deg of the numerator, as expressions over the
    /// common denominator. Precondition: den independent of v.
    std::vector<JetExpr> coefficients_in(Var v) const;

    std::string str() const;

private:
    Polynomial num_, den_;
    void normalize();
};

JetExpr operator+(const JetExpr& a, long b);
JetExpr operator+(long a, const JetExpr& b);
JetExpr operator-(const JetExpr& a, long b);
JetExpr operator-(long a, const JetExpr& b);
JetExpr operator*(const JetExpr& a, long b);
JetExpr operator*(long a, const JetExpr& b);
JetExpr operator/(const JetExpr& a, long b);
JetExpr operator/(long a, const JetExpr& b);

// ---------------------------------------------------------------------------
// Zero decision and numeric evaluation
// ---------------------------------------------------------------------------
enum class ZeroKind {
    Yes,           // canonical zero: certified
    No,            // nonzero witness found
    ProbablyZero,  // not canonical zero, but vanished at all sample points
};

struct ZeroWitness {
    std::map<std::string, double> point;  // variable/atom key -> value
    double value = 0.0;
};

struct ZeroResult {
    ZeroKind kind = ZeroKind::Yes;
    std::optional<ZeroWitness> witness;  // set when kind == No
    bool certified() const { return kind == ZeroKind::Yes; }
};

/// Decide whether e vanishes identically. Canonical zero is certified;
/// otherwise samples `samples` random rational points (components of the form
/// p/q with |p|,|q| <= 1e4 drawn from ±[1/3,3]) and reports No with a witness
/// or ProbablyZero.
ZeroResult is_zero(const JetExpr& e, unsigned seed = 0x5eed, int samples = 32,
                   double tol = 1e-9);

struct EvalPoint {
    std::map<int, double> vars;            // Var::code -> value
    std::map<std::string, double> atoms;   // atom key -> value
};

struct UnboundSymbol : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EvalDomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Numeric evaluation. Func atoms are looked up by key in point.atoms
/// (generic-point semantics: every distinct derivative atom is its own
/// coordinate); exp/ln/sin/cos evaluate through their argument.
double evaluate(const JetExpr& e, const EvalPoint& point);

/// Identity already canonical by construction; returns its argument.
/// Present so callers can normalize expressions built elsewhere.
inline const JetExpr& simplify(const JetExpr& e) { return e; }

}  // namespace jetcl
