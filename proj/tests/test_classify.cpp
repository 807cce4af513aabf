#include "jetcl/classify.hpp"

#include <stdexcept>

#include "doctest.h"

using namespace jetcl;

namespace {

JetExpr T() { return JetExpr::t(); }
JetExpr X() { return JetExpr::x(); }
JetExpr U(int k = 0) { return JetExpr::u(k); }

bool certified(const JetExpr& e) { return is_zero(e).kind == ZeroKind::Yes; }

bool conserved_certified(const ConservedVector& v, const JetExpr& H) {
    return certified(total_t(v.F, H) + total_x(v.G));
}

// slow diffusion written as a first-level divergence, u_t = D_x(u_x / u^2)
EvolutionEquation slow_diffusion() { return EvolutionEquation(total_x(U(1) / (U() * U()))); }

// filtration-type equation whose laws live on the derivative jet,
// u_t = -1/u_xx
EvolutionEquation filtration() { return EvolutionEquation(JetExpr(-1) / U(2)); }

// inverse-gradient diffusion, u_t = u_xx / u_x^2
EvolutionEquation gradient_diffusion() {
    return EvolutionEquation(U(2) / (U(1) * U(1)));
}

// u_t = (A(u) u_x)_x + A(u) u_x with an opaque coefficient
EvolutionEquation drift_matches_diffusion(Declarations& decls) {
    FunctionSymbolPtr A = decls.lookup("A") ? decls.lookup("A") : decls.declare("A", 1);
    JetExpr a = JetExpr::function(A, {U()});
    return EvolutionEquation(total_x(a * U(1)) + a * U(1));
}

}  // namespace

// ---------------------------------------------------------------------------
// ContactTransformation construction
// ---------------------------------------------------------------------------

TEST_CASE("identity chart map is a point transformation") {
    ContactTransformation id(T(), X(), U());
    CHECK(id.is_point());
    CHECK(id.kind() == ContactTransformation::Kind::Point);
    CHECK(certified(id.V() - U(1)));
}

TEST_CASE("time map must depend on t alone and be invertible") {
    CHECK_THROWS_AS(ContactTransformation(T() + X(), X(), U()),
                    DegenerateTransformation);
    CHECK_THROWS_AS(ContactTransformation(JetExpr(1), X(), U()),
                    DegenerateTransformation);
}

TEST_CASE("chart maps reject second-order jets and u_t") {
    CHECK_THROWS_AS(ContactTransformation(T(), U(2), U()),
                    DegenerateTransformation);
    CHECK_THROWS_AS(ContactTransformation(T(), JetExpr::variable(Var{1000}), U()),
                    DegenerateTransformation);
}

TEST_CASE("rank-deficient chart maps are rejected") {
    CHECK_THROWS_AS(ContactTransformation(T(), X(), X()),
                    DegenerateTransformation);
    CHECK_THROWS_AS(ContactTransformation(T(), U(), JetExpr(2) * U()),
                    DegenerateTransformation);
}

TEST_CASE("maps violating the contact condition are rejected") {
    CHECK_THROWS_AS(ContactTransformation(T(), U(1), U()),
                    DegenerateTransformation);
}

TEST_CASE("derivative-flip chart is a genuine contact transformation") {
    ContactTransformation leg(T(), U(1), X() * U(1) - U());
    CHECK_FALSE(leg.is_point());
    CHECK(leg.kind() == ContactTransformation::Kind::Contact);
    CHECK(certified(leg.V() - X()));
}

// ---------------------------------------------------------------------------
// apply_transformation
// ---------------------------------------------------------------------------

TEST_CASE("identity transformation preserves the right-hand side") {
    EvolutionEquation heat(U(2));
    ContactTransformation id(T(), X(), U());
    CHECK(certified(apply_transformation(id, heat).rhs - U(2)));
}

TEST_CASE("time rescaling divides the right-hand side") {
    EvolutionEquation heat(U(2));
    ContactTransformation tr(JetExpr(2) * T(), X(), U());
    CHECK(certified(apply_transformation(tr, heat).rhs - U(2) / JetExpr(2)));
}

TEST_CASE("swapping dependent and independent variables linearizes gradient diffusion") {
    ContactTransformation hodo(T(), U(), X());
    EvolutionEquation out = apply_transformation(hodo, gradient_diffusion());
    CHECK(certified(out.rhs - U(2)));
}

TEST_CASE("derivative-flip transformation linearizes the filtration equation") {
    ContactTransformation leg(T(), U(1), X() * U(1) - U());
    EvolutionEquation out = apply_transformation(leg, filtration());
    CHECK(certified(out.rhs - U(2)));
}

TEST_CASE("exponential chart turns matched drift into a pure double divergence") {
    Declarations decls;
    EvolutionEquation eq = drift_matches_diffusion(decls);
    ContactTransformation tr(T(), JetExpr::exp(X()), JetExpr::exp(-X()) * U());
    EvolutionEquation out = apply_transformation(tr, eq);

    FunctionSymbolPtr A = decls.lookup("A");
    FunctionSymbolPtr Ai = decls.antiderivative(A);
    JetExpr target = total_x(total_x(X() * JetExpr::function(Ai, {X() * U()})));
    CHECK(certified(out.rhs - target));
}

TEST_CASE("charts outside the invertible pattern library are refused") {
    EvolutionEquation heat(U(2));
    ContactTransformation tr(T(), X() + X() * X() * X() / JetExpr(3), U());
    CHECK_THROWS_AS(apply_transformation(tr, heat), InversionFailure);
}

// ---------------------------------------------------------------------------
// transform_conserved_vector
// ---------------------------------------------------------------------------

TEST_CASE("identity transport returns the same conserved vector") {
    EvolutionEquation heat(U(2));
    ContactTransformation id(T(), X(), U());
    ConservedVector cv{U(), -U(1), true};
    ConservedVector out = transform_conserved_vector(id, cv, heat);
    CHECK(certified(out.F - U()));
    CHECK(certified(out.G + U(1)));
}

TEST_CASE("time rescaling scales the flux only") {
    EvolutionEquation heat(U(2));
    ContactTransformation tr(JetExpr(2) * T(), X(), U());
    ConservedVector cv{U(), -U(1), true};
    ConservedVector out = transform_conserved_vector(tr, cv, heat);
    CHECK(certified(out.F - U()));
    CHECK(certified(out.G + U(1) / JetExpr(2)));
    EvolutionEquation out_eq = apply_transformation(tr, heat);
    CHECK(conserved_certified(out, out_eq.rhs));
}

TEST_CASE("transport through the exponential chart keeps conservation") {
    Declarations decls;
    EvolutionEquation eq = drift_matches_diffusion(decls);
    JetExpr a = JetExpr::function(decls.lookup("A"), {U()});
    ConservedVector cv{JetExpr::exp(X()) * U(), -JetExpr::exp(X()) * a * U(1),
                       true};
    REQUIRE(conserved_certified(cv, eq.rhs));

    ContactTransformation tr(T(), JetExpr::exp(X()), JetExpr::exp(-X()) * U());
    ConservedVector out = transform_conserved_vector(tr, cv, eq);
    CHECK(certified(out.F - X() * U()));
    EvolutionEquation out_eq = apply_transformation(tr, eq);
    CHECK(conserved_certified(out, out_eq.rhs));
}

TEST_CASE("transport through the derivative flip reaches the expected characteristic") {
    Declarations decls;
    EvolutionEquation eq = filtration();
    ConservedVector cv{U(1) * U(1) - JetExpr(2) * T(),
                       JetExpr(2) * U(1) / U(2), false};
    REQUIRE(conserved_certified(cv, eq.rhs));

    ContactTransformation leg(T(), U(1), X() * U(1) - U());
    ConservedVector out = transform_conserved_vector(leg, cv, eq);
    EvolutionEquation out_eq = apply_transformation(leg, eq);
    CHECK(conserved_certified(out, out_eq.rhs));
    ConservedVector red = reduce_order(out, out_eq, decls);
    CHECK(certified(characteristic_of(red).lambda - JetExpr(2)));
}

// ---------------------------------------------------------------------------
// strip_ux_linear
// ---------------------------------------------------------------------------

TEST_CASE("stripping removes a u_x-linear null summand from the density") {
    Declarations decls;
    EvolutionEquation heat(U(2));
    FunctionSymbolPtr phi = decls.declare("phi", 1);
    JetExpr p = JetExpr::function(phi, {U()});
    ConservedVector cv{p * U(1) + U(), -U(1) - p * U(2), true};
    REQUIRE(conserved_certified(cv, heat.rhs));

    ConservedVector out = strip_ux_linear(cv, heat, decls);
    CHECK(certified(out.F - U()));
    CHECK(certified(out.G + U(1)));
}

TEST_CASE("stripping a purely null density yields a trivial vector") {
    Declarations decls;
    EvolutionEquation heat(U(2));
    ConservedVector cv{U(1), -U(2), true};
    ConservedVector out = strip_ux_linear(cv, heat, decls);
    CHECK(out.trivial());
}

TEST_CASE("stripping requires a u_x-affine density") {
    Declarations decls;
    EvolutionEquation heat(U(2));
    ConservedVector cv{U(1) * U(1), JetExpr(0), true};
    CHECK_THROWS_AS(strip_ux_linear(cv, heat, decls), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// normalize_char1
// ---------------------------------------------------------------------------

TEST_CASE("point-reducible law normalizes via its own density") {
    Declarations decls;
    EvolutionEquation eq = drift_matches_diffusion(decls);
    JetExpr a = JetExpr::function(decls.lookup("A"), {U()});
    ConservedVector cv{JetExpr::exp(X()) * U(), -JetExpr::exp(X()) * a * U(1),
                       true};
    NormalizationOutcome out = normalize_char1(cv, eq, decls);
    REQUIRE(std::holds_alternative<ContactTransformation>(out));
    const auto& tr = std::get<ContactTransformation>(out);
    CHECK(tr.is_point());
    CHECK(certified(tr.U() - JetExpr::exp(X()) * U()));

    EvolutionEquation te = apply_transformation(tr, eq);
    ConservedVector tc = transform_conserved_vector(tr, cv, eq);
    ConservedVector red = reduce_order(tc, te, decls);
    CHECK(certified(characteristic_of(red).lambda - JetExpr(1)));
}

TEST_CASE("trivial densities are refused") {
    Declarations decls;
    EvolutionEquation heat(U(2));
    ConservedVector cv{U(1), -U(2), true};
    CHECK_THROWS_AS(normalize_char1(cv, heat, decls), TrivialInput);
}

TEST_CASE("derivative-jet law normalizes through the derivative flip with rescale") {
    Declarations decls;
    EvolutionEquation eq = filtration();
    ConservedVector cv{U(1) * U(1) - JetExpr(2) * T(),
                       JetExpr(2) * U(1) / U(2), false};
    NormalizationOutcome out = normalize_char1(cv, eq, decls);
    REQUIRE(std::holds_alternative<ContactTransformation>(out));
    const auto& tr = std::get<ContactTransformation>(out);
    CHECK_FALSE(tr.is_point());
    CHECK(certified(tr.X() - U(1)));
    CHECK(certified(tr.U() - JetExpr(2) * (X() * U(1) - U())));

    EvolutionEquation te = apply_transformation(tr, eq);
    CHECK(certified(te.rhs - U(2)));
    ConservedVector tc = transform_conserved_vector(tr, cv, eq);
    ConservedVector red = reduce_order(tc, te, decls);
    CHECK(certified(characteristic_of(red).lambda - JetExpr(1)));
}

TEST_CASE("laws beyond the chart library come back as a solvable system") {
    Declarations decls;
    EvolutionEquation eq = filtration();
    JetExpr w = U(1);
    ConservedVector cv{w * w * w - JetExpr(6) * T() * w,
                       (JetExpr(3) * w * w - JetExpr(6) * T()) / U(2), false};
    REQUIRE(conserved_certified(cv, eq.rhs));

    NormalizationOutcome out = normalize_char1(cv, eq, decls);
    REQUIRE(std::holds_alternative<EmittedSystem>(out));
    const auto& sys = std::get<EmittedSystem>(out);
    CHECK(sys.unknowns.size() == 3);
    CHECK(sys.equations.size() == 4);
    CHECK_FALSE(sys.note.empty());
}

// ---------------------------------------------------------------------------
// normalize_pair
// ---------------------------------------------------------------------------

TEST_CASE("pair normalization recovers the exponential chart") {
    Declarations decls;
    EvolutionEquation eq = drift_matches_diffusion(decls);
    FunctionSymbolPtr A = decls.lookup("A");
    JetExpr a = JetExpr::function(A, {U()});
    JetExpr ai = JetExpr::function(decls.antiderivative(A), {U()});
    ConservedVector mass{U(), -a * U(1) - ai, true};
    REQUIRE(conserved_certified(mass, eq.rhs));
    ConservedVector second{JetExpr::exp(X()) * U(),
                           -JetExpr::exp(X()) * a * U(1), true};

    NormalizationOutcome out = normalize_pair(mass, second, eq, decls);
    REQUIRE(std::holds_alternative<ContactTransformation>(out));
    const auto& tr = std::get<ContactTransformation>(out);
    CHECK(tr.is_point());
    CHECK(certified(tr.X() - JetExpr::exp(X())));
    CHECK(certified(tr.U() - JetExpr::exp(-X()) * U()));
}

TEST_CASE("pair normalization is the identity when the second density is x u") {
    Declarations decls;
    FunctionSymbolPtr A = decls.declare("A", 1);
    JetExpr a = JetExpr::function(A, {U()});
    JetExpr ai = JetExpr::function(decls.antiderivative(A), {U()});
    EvolutionEquation eq(total_x(a * U(1)));
    ConservedVector mass{U(), -a * U(1), true};
    ConservedVector moment{X() * U(), ai - X() * a * U(1), true};
    REQUIRE(conserved_certified(mass, eq.rhs));
    REQUIRE(conserved_certified(moment, eq.rhs));

    NormalizationOutcome out = normalize_pair(mass, moment, eq, decls);
    REQUIRE(std::holds_alternative<ContactTransformation>(out));
    const auto& tr = std::get<ContactTransformation>(out);
    CHECK(certified(tr.X() - X()));
    CHECK(certified(tr.U() - U()));
}

TEST_CASE("a scalar multiple of the first law is rejected as dependent") {
    Declarations decls;
    FunctionSymbolPtr A = decls.declare("A", 1);
    JetExpr a = JetExpr::function(A, {U()});
    EvolutionEquation eq(total_x(a * U(1)));
    ConservedVector mass{U(), -a * U(1), true};
    ConservedVector triple{JetExpr(3) * U(), JetExpr(-3) * a * U(1), true};
    CHECK_THROWS_AS(normalize_pair(mass, triple, eq, decls), DependentLaws);
}

TEST_CASE("u-dependent second density produces a hodograph-like chart") {
    Declarations decls;
    EvolutionEquation eq = gradient_diffusion();
    ConservedVector mass{U(), JetExpr(1) / U(1), false};
    ConservedVector second{U() * U() - JetExpr(2) * T(),
                           JetExpr(2) * U() / U(1), false};
    REQUIRE(conserved_certified(mass, eq.rhs));
    REQUIRE(conserved_certified(second, eq.rhs));

    NormalizationOutcome out = normalize_pair(mass, second, eq, decls);
    REQUIRE(std::holds_alternative<ContactTransformation>(out));
    const auto& tr = std::get<ContactTransformation>(out);
    CHECK(certified(tr.X() - JetExpr(2) * U()));
    CHECK(certified(tr.U() + X() / JetExpr(2)));

    EvolutionEquation te = apply_transformation(tr, eq);
    ConservedVector t1 = reduce_order(transform_conserved_vector(tr, mass, eq),
                                      te, decls);
    ConservedVector t2 = reduce_order(transform_conserved_vector(tr, second, eq),
                                      te, decls);
    CHECK(certified(characteristic_of(t1).lambda - JetExpr(1)));
    CHECK(certified(characteristic_of(t2).lambda - X()));
}

TEST_CASE("coordinate characteristics build the chart from their ratio") {
    Declarations decls;
    EvolutionEquation eq(U(2) - U());
    JetExpr ex = JetExpr::exp(X());
    ConservedVector cv1{ex * U(), ex * (U() - U(1)), true};
    JetExpr h = (X() - JetExpr(2) * T()) * ex;
    ConservedVector cv2{h * U(), -h * U(1) + h.diff(Var::x()) * U(), true};
    REQUIRE(conserved_certified(cv1, eq.rhs));
    REQUIRE(conserved_certified(cv2, eq.rhs));

    NormalizationOutcome out = normalize_pair(cv1, cv2, eq, decls);
    REQUIRE(std::holds_alternative<ContactTransformation>(out));
    const auto& tr = std::get<ContactTransformation>(out);
    CHECK(certified(tr.X() - (X() - JetExpr(2) * T())));
    CHECK(certified(tr.U() - ex * U()));

    EvolutionEquation te = apply_transformation(tr, eq);
    CHECK(certified(te.rhs - U(2)));
    ConservedVector t1 = reduce_order(transform_conserved_vector(tr, cv1, eq),
                                      te, decls);
    ConservedVector t2 = reduce_order(transform_conserved_vector(tr, cv2, eq),
                                      te, decls);
    CHECK(certified(characteristic_of(t1).lambda - JetExpr(1)));
    CHECK(certified(characteristic_of(t2).lambda - X()));
}

TEST_CASE("proportional coordinate characteristics are rejected as dependent") {
    Declarations decls;
    EvolutionEquation eq(U(2) - U());
    JetExpr ex = JetExpr::exp(X());
    ConservedVector cv1{ex * U(), ex * (U() - U(1)), true};
    ConservedVector cv2{JetExpr(2) * ex * U(), JetExpr(2) * ex * (U() - U(1)),
                        true};
    CHECK_THROWS_AS(normalize_pair(cv1, cv2, eq, decls), DependentLaws);
}

TEST_CASE("mixed-slope second density falls back to the candidate list") {
    Declarations decls;
    FunctionSymbolPtr A = decls.declare("A", 1);
    JetExpr a = JetExpr::function(A, {U()});
    JetExpr ai = JetExpr::function(decls.antiderivative(A), {U()});
    EvolutionEquation eq(total_x(a * U(1)));
    ConservedVector mass{U(), -a * U(1), true};
    ConservedVector moment{X() * U(), ai - X() * a * U(1), true};

    // shear the chart so the moment density mixes x and u: the transported
    // density strips to x u - u^2/2, whose u-slope x - u has unit x-slope
    ContactTransformation shear(T(), X() + U(), U());
    EvolutionEquation sheared = apply_transformation(shear, eq);
    ConservedVector m1 = transform_conserved_vector(shear, mass, eq);
    ConservedVector m2 = transform_conserved_vector(shear, moment, eq);
    REQUIRE(conserved_certified(m1, sheared.rhs));
    REQUIRE(conserved_certified(m2, sheared.rhs));

    NormalizationOutcome out = normalize_pair(m1, m2, sheared, decls);
    REQUIRE(std::holds_alternative<ContactTransformation>(out));
    const auto& tr = std::get<ContactTransformation>(out);
    CHECK(tr.is_point());
    CHECK(certified(tr.X() - (X() - U())));
    CHECK(certified(tr.U() - U()));

    // the produced chart undoes the shear
    EvolutionEquation back = apply_transformation(tr, sheared);
    CHECK(certified(back.rhs - eq.rhs));
}

TEST_CASE("pairs outside the candidate list emit the area condition") {
    Declarations decls;
    FunctionSymbolPtr A = decls.declare("A", 1);
    JetExpr a = JetExpr::function(A, {U()});
    JetExpr ai = JetExpr::function(decls.antiderivative(A), {U()});
    EvolutionEquation eq(total_x(a * U(1)));
    // doubled mass law: after the scaled shear its characteristic is 1 again
    ConservedVector mass{JetExpr(2) * U(), JetExpr(-2) * a * U(1), true};
    ConservedVector moment{X() * U(), ai - X() * a * U(1), true};

    // scaled shear: the moment density strips to (x u - u^2)/4, whose slope
    // (x - 2u)/4 matches neither u nor -x as a conjugate coordinate
    ContactTransformation shear(T(), JetExpr(2) * (X() + U()), U());
    EvolutionEquation sheared = apply_transformation(shear, eq);
    ConservedVector m1 = transform_conserved_vector(shear, mass, eq);
    ConservedVector m2 = transform_conserved_vector(shear, moment, eq);
    REQUIRE(conserved_certified(m1, sheared.rhs));
    REQUIRE(conserved_certified(m2, sheared.rhs));

    NormalizationOutcome out = normalize_pair(m1, m2, sheared, decls);
    REQUIRE(std::holds_alternative<EmittedSystem>(out));
    const auto& sys = std::get<EmittedSystem>(out);
    CHECK(sys.unknowns.size() == 1);
    CHECK(sys.equations.size() == 1);
    CHECK_FALSE(sys.note.empty());
}

// ---------------------------------------------------------------------------
// decide
// ---------------------------------------------------------------------------

TEST_CASE("heat equation carries the full adjoint family") {
    Declarations decls;
    EvolutionEquation heat(U(2));
    ClassificationReport rep = decide(heat, {}, decls);
    CHECK(rep.verdict.kind == VerdictKind::Infinite);
    REQUIRE(rep.families.size() == 1);
    CHECK(rep.families[0].constraint == "h_t + h_xx = 0");
    // with the constraint attached the family conserves identically
    CHECK(certified(total_t(rep.families[0].vec.F, heat.rhs) +
                    total_x(rep.families[0].vec.G)));
    REQUIRE(rep.hat_H.has_value());
    REQUIRE(rep.check_H.has_value());
    CHECK(certified(*rep.hat_H - U(1)));
    CHECK(certified(*rep.check_H - U()));
}

TEST_CASE("lower-order terms enter the adjoint constraint") {
    Declarations decls;
    EvolutionEquation eq(U(2) - U());
    ClassificationReport rep = decide(eq, {}, decls);
    CHECK(rep.verdict.kind == VerdictKind::Infinite);
    REQUIRE(rep.families.size() == 1);
    CHECK(rep.families[0].constraint == "h_t + h_xx - h = 0");

    // instantiate the family at a concrete adjoint solution and verify
    JetExpr body = JetExpr::exp(X());
    std::vector<Var> params = {Var::t(), Var::x()};
    JetExpr F = substitute_symbol(rep.families[0].vec.F, rep.families[0].sym,
                                  params, body, decls);
    JetExpr G = substitute_symbol(rep.families[0].vec.G, rep.families[0].sym,
                                  params, body, decls);
    CHECK(conserved_certified({F, G, true}, eq.rhs));
}

TEST_CASE("source terms are reported when they block the family flux") {
    Declarations decls;
    EvolutionEquation eq(U(2) + JetExpr(1));
    ClassificationReport rep = decide(eq, {}, decls);
    CHECK(rep.verdict.kind == VerdictKind::Infinite);
    bool noted = false;
    for (const auto& n : rep.notes)
        if (n.find("source") != std::string::npos) noted = true;
    CHECK(noted);
}

TEST_CASE("double divergence form yields exactly two laws") {
    Declarations decls;
    ClassificationReport rep = decide(slow_diffusion(), {}, decls);
    CHECK(rep.verdict.kind == VerdictKind::Exact);
    CHECK(rep.verdict.count == 2);
    REQUIRE(rep.basis.size() == 2);
    CHECK(certified(rep.basis[0].second.lambda - JetExpr(1)));
    CHECK(certified(rep.basis[1].second.lambda - X()));
    REQUIRE(rep.hat_H.has_value());
    REQUIRE(rep.check_H.has_value());
    CHECK(certified(*rep.hat_H - U(1) / (U() * U())));
    CHECK(certified(*rep.check_H + JetExpr(1) / U()));
    for (const auto& [cv, lam] : rep.basis)
        CHECK(conserved_certified(cv, slow_diffusion().rhs));
}

TEST_CASE("quadratic flux potential also yields exactly two laws") {
    Declarations decls;
    EvolutionEquation eq(total_x(U() * U(1)));
    ClassificationReport rep = decide(eq, {}, decls);
    CHECK(rep.verdict.kind == VerdictKind::Exact);
    CHECK(rep.verdict.count == 2);
    REQUIRE(rep.check_H.has_value());
    CHECK(certified(*rep.check_H - U() * U() / JetExpr(2)));
}

TEST_CASE("equations that are not fractionally linear in u_xx have no laws") {
    Declarations decls;
    EvolutionEquation cubic(U(2) * U(2) * U(2));
    ClassificationReport rep = decide(cubic, {}, decls);
    CHECK(rep.verdict.kind == VerdictKind::Exact);
    CHECK(rep.verdict.count == 0);
    CHECK(rep.basis.empty());
}

TEST_CASE("fractional-linearity gate fires across assorted nonlinearities") {
    Declarations decls;
    std::vector<JetExpr> rhss = {
        U(2) * U(2) * U(2),
        U(2) * U(2) + U(1),
        JetExpr::exp(U(2)),
        JetExpr::ln(U(2)),
        U(2) * U(2) / (JetExpr(1) + U(2)),
        U(2) + U(2) * U(2) * U(1) * U(1),
        JetExpr::sin(U(2)),
        U(2) * U(2) * U(2) + U() * U(2),
        (U(1) + U(2) * U(2)) / U(2),
        U(2) * U(2) + T() * X() * U(2),
    };
    for (const JetExpr& h : rhss) {
        ClassificationReport rep = decide(EvolutionEquation(h), {}, decls);
        CHECK(rep.verdict.kind == VerdictKind::Exact);
        CHECK(rep.verdict.count == 0);
    }
}

TEST_CASE("opaque drift keeps only the mass law visible") {
    Declarations decls;
    FunctionSymbolPtr A = decls.declare("A", 1);
    FunctionSymbolPtr Bk = decls.declare("Bk", 1);
    JetExpr a = JetExpr::function(A, {U()});
    JetExpr bk = JetExpr::function(Bk, {U()});
    EvolutionEquation eq(total_x(a * U(1) + bk));
    ClassificationReport rep = decide(eq, {}, decls);
    CHECK(rep.verdict.kind == VerdictKind::AtLeast);
    CHECK(rep.verdict.count == 1);
    REQUIRE(rep.hat_H.has_value());
    CHECK(certified(*rep.hat_H - (a * U(1) + bk)));
    REQUIRE(rep.basis.size() == 1);
    CHECK(conserved_certified(rep.basis[0].first, eq.rhs));
    CHECK_FALSE(rep.chart_caveat.empty());
}

TEST_CASE("matching drift and diffusion unlock a second exact law") {
    Declarations decls;
    // u_t = (u u_x)_x + u u_x: quasi-linear with a certified flux potential,
    // so the u_x-free density search is complete and closes at dimension two
    EvolutionEquation eq(total_x(U() * U(1)) + U() * U(1));
    ClassificationReport rep = decide(eq, {}, decls);
    CHECK(rep.verdict.kind == VerdictKind::Exact);
    CHECK(rep.verdict.count == 2);
    REQUIRE(rep.basis.size() == 2);
    CHECK(certified(rep.basis[0].second.lambda - JetExpr(1)));
    CHECK(certified(rep.basis[1].second.lambda - JetExpr::exp(X())));
    ConservedVector weighted{JetExpr::exp(X()) * U(),
                             JetExpr(0) - JetExpr::exp(X()) * U() * U(1), false};
    REQUIRE(conserved_certified(weighted, eq.rhs));
    bool matched = false;
    for (const auto& [cv, lam] : rep.basis) {
        CHECK(conserved_certified(cv, eq.rhs));
        if (are_equivalent(cv, weighted, eq, decls)) matched = true;
    }
    CHECK(matched);
}

TEST_CASE("drift against a saturating diffusion leaves only the mass law") {
    Declarations decls;
    EvolutionEquation eq(total_x((JetExpr(1) + U() * U()) * U(1)) + U() * U(1));
    ClassificationReport rep = decide(eq, {}, decls);
    CHECK(rep.verdict.kind == VerdictKind::Exact);
    CHECK(rep.verdict.count == 1);
    REQUIRE(rep.basis.size() == 1);
    CHECK(certified(rep.basis[0].second.lambda - JetExpr(1)));
    CHECK(certified(rep.basis[0].first.F - U()));
    CHECK(conserved_certified(rep.basis[0].first, eq.rhs));
}

TEST_CASE("fully nonlinear equations still yield first-jet densities") {
    Declarations decls;
    EvolutionEquation eq = filtration();
    // hand-checked: D_t(u_x^2 - 2t) = 2 u_x u_xxx / u_xx^2 - 2 and
    // D_x(2 u_x / u_xx) = 2 - 2 u_x u_xxx / u_xx^2 cancel on solutions
    ConservedVector known{U(1) * U(1) - JetExpr(2) * T(),
                          JetExpr(2) * U(1) / U(2), false};
    REQUIRE(conserved_certified(known, eq.rhs));

    ClassificationReport rep = decide(eq, {}, decls);
    CHECK(rep.verdict.kind == VerdictKind::AtLeast);
    CHECK(rep.verdict.count >= 1);
    CHECK_FALSE(rep.hat_H.has_value());
    CHECK_FALSE(rep.chart_caveat.empty());
    bool found = false;
    for (const auto& [cv, lam] : rep.basis) {
        CHECK(conserved_certified(cv, eq.rhs));
        if (are_equivalent(cv, known, eq, decls)) found = true;
    }
    CHECK(found);
}

TEST_CASE("nonlinear source without divergence structure reports a searched lower bound") {
    Declarations decls;
    EvolutionEquation eq(U(2) + U() * U());
    ClassificationReport rep = decide(eq, {}, decls);
    CHECK(rep.verdict.kind == VerdictKind::AtLeast);
    CHECK(rep.verdict.count == 0);
}

TEST_CASE("concrete coefficients can only grow the certified count") {
    Declarations opaque_decls;
    FunctionSymbolPtr A = opaque_decls.declare("A", 1);
    FunctionSymbolPtr Bk = opaque_decls.declare("Bk", 1);
    EvolutionEquation generic(total_x(JetExpr::function(A, {U()}) * U(1) +
                                      JetExpr::function(Bk, {U()})));
    ClassificationReport generic_rep = decide(generic, {}, opaque_decls);

    Declarations concrete_decls;
    ClassificationReport concrete_rep =
        decide(slow_diffusion(), {}, concrete_decls);
    CHECK(generic_rep.verdict.count <= concrete_rep.verdict.count);
}

TEST_CASE("divergence route and determining-system route agree") {
    Declarations decls;
    EvolutionEquation eq = slow_diffusion();
    ClassificationReport rep = decide(eq, {}, decls);
    REQUIRE(rep.basis.size() == 2);

    AnsatzSignature sig{{Var::t(), Var::x(), Var::u(0)},
                        {Var::t(), Var::x(), Var::u(0), Var::u(1)}};
    DeterminingSystem sys = determining_system(eq, sig, decls);
    SolveResult sol = solve_determining(sys, {}, decls);
    REQUIRE(sol.basis.size() == 2);
    for (const auto& [cv, lam] : rep.basis) {
        bool matched = false;
        for (const auto& [scv, slam] : sol.basis)
            if (are_equivalent(cv, scv, eq, decls)) matched = true;
        CHECK(matched);
    }
}

// ---------------------------------------------------------------------------
// emit_potential_system
// ---------------------------------------------------------------------------

TEST_CASE("linear equations emit both potential levels") {
    Declarations decls;
    EvolutionEquation heat(U(2));
    ClassificationReport rep = decide(heat, {}, decls);
    std::vector<PotentialSystem> systems = emit_potential_system(rep, heat);
    REQUIRE(systems.size() == 2);
    CHECK(systems[0].equations.size() == 2);
    CHECK(systems[0].equations[0].first == "v_x");
    CHECK(systems[0].equations[0].second == "u");
    CHECK(systems[1].equations.size() == 3);
    CHECK_FALSE(systems[1].note.empty());
}

TEST_CASE("two-law equations emit both potential levels") {
    Declarations decls;
    EvolutionEquation eq = slow_diffusion();
    ClassificationReport rep = decide(eq, {}, decls);
    std::vector<PotentialSystem> systems = emit_potential_system(rep, eq);
    CHECK(systems.size() == 2);
}

TEST_CASE("single-law equations emit one potential level") {
    Declarations decls;
    FunctionSymbolPtr A = decls.declare("A", 1);
    FunctionSymbolPtr Bk = decls.declare("Bk", 1);
    EvolutionEquation eq(total_x(JetExpr::function(A, {U()}) * U(1) +
                                 JetExpr::function(Bk, {U()})));
    ClassificationReport rep = decide(eq, {}, decls);
    std::vector<PotentialSystem> systems = emit_potential_system(rep, eq);
    CHECK(systems.size() == 1);
}

TEST_CASE("equations without divergence structure emit nothing") {
    Declarations decls;
    EvolutionEquation cubic(U(2) * U(2) * U(2));
    ClassificationReport rep = decide(cubic, {}, decls);
    CHECK_THROWS_AS(emit_potential_system(rep, cubic), NoDivergenceForm);

    ClassificationReport rep2 = decide(filtration(), {}, decls);
    CHECK_THROWS_AS(emit_potential_system(rep2, filtration()), NoDivergenceForm);
}
