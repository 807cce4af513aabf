#include <stdexcept>

#include "doctest.h"
#include "jetcl/claws.hpp"

using namespace jetcl;

namespace {
JetExpr U() { return JetExpr::u(0); }
JetExpr UX() { return JetExpr::u(1); }
JetExpr UXX() { return JetExpr::u(2); }
JetExpr X() { return JetExpr::x(); }
JetExpr T() { return JetExpr::t(); }

std::vector<Var> txu() { return {Var::t(), Var::x(), Var::u(0)}; }
std::vector<Var> txu1() { return {Var::t(), Var::x(), Var::u(0), Var::u(1)}; }
}  // namespace

TEST_CASE("characteristics of reduced densities") {
    auto lam = [](const JetExpr& f) {
        return characteristic_of({f, JetExpr(), true}).lambda;
    };
    CHECK(lam(U()) == JetExpr(1));
    CHECK(lam(X() * U()) == X());
    CHECK(lam(JetExpr::exp(X()) * U()) == JetExpr::exp(X()));
    CHECK(lam(UX() * UX() - 2 * T()) == -2 * UXX());
    // a pure u_x density is a total x-derivative: characteristic zero
    CHECK(lam(UX()).is_canonical_zero());
}

TEST_CASE("substitute_symbol instantiates function atoms") {
    Declarations d;
    auto A = d.declare("A", 1);
    JetExpr Au = JetExpr::function(A, {U()});
    JetExpr Ai = JetExpr::function(d.antiderivative(A), {U()});
    JetExpr e = Au * UX() + Ai;

    JetExpr body = 1 + U() * U();  // A(s) = 1 + s^2 over parameter u
    JetExpr got = substitute_symbol(e, A, {Var::u(0)}, body, d);
    JetExpr want = (1 + U() * U()) * UX() + U() + U() * U() * U() / 3;
    CHECK(got == want);

    // derivative atoms pick up the differentiated body at the atom argument
    JetExpr dA = JetExpr::function(A, {UX()}, {1});
    CHECK(substitute_symbol(dA, A, {Var::u(0)}, body, d) == 2 * UX());
}

TEST_CASE("substitute_symbol respects constrained symbols") {
    Declarations d;
    // sigma(t, w) with sigma_ww = -sigma_t
    auto sig = d.declare({"sigma", 2, SecondOrderConstraint{0, 1, Rational(-1)}, {}});
    JetExpr s_ww = JetExpr::function(sig, {T(), U()}, {0, 2});  // rewrites to -sigma_t
    JetExpr body = U() * U() - 2 * T();  // solves sigma_t + sigma_ww = 0
    CHECK(substitute_symbol(s_ww, sig, {Var::t(), Var::u(0)}, body, d) == JetExpr(2));
    JetExpr s_w = JetExpr::function(sig, {T(), U()}, {0, 1});
    CHECK(substitute_symbol(s_w, sig, {Var::t(), Var::u(0)}, body, d) == 2 * U());
}

TEST_CASE("reduce_order strips a total-shift dressing on the heat equation") {
    Declarations d;
    EvolutionEquation heat{UXX()};
    // (u, -u_x) shifted by (D_x phi, -D_t phi) with phi = u u_x
    ConservedVector dressed{U() + UX() * UX() + U() * UXX(),
                            -UX() - UX() * UXX() - U() * JetExpr::u(3)};
    ConservedVector red = reduce_order(dressed, heat, d);
    CHECK(red.F == U());
    CHECK(red.G == -UX());
    CHECK(red.reduced);
    CHECK_FALSE(red.trivial());

    // already reduced vectors are fixed points
    ConservedVector again = reduce_order(red, heat, d);
    CHECK(again.F == U());
    CHECK(again.G == -UX());
}

TEST_CASE("reduce_order sends trivial vectors to zero") {
    Declarations d;
    EvolutionEquation heat{UXX()};
    // (D_x phi, -D_t phi) with phi = exp(x) u, t-derivative on shell
    JetExpr ex = JetExpr::exp(X());
    ConservedVector triv{ex * U() + ex * UX(), -ex * UXX()};
    ConservedVector red = reduce_order(triv, heat, d);
    CHECK(red.F.is_canonical_zero());
    CHECK(red.G.is_canonical_zero());
    CHECK(red.trivial());

    // u_t-band components are eliminated through the equation first
    ConservedVector tband{JetExpr::variable(Var::ut(0)),
                          -JetExpr::variable(Var::ut(1))};
    ConservedVector red2 = reduce_order(tband, heat, d);
    CHECK(red2.F.is_canonical_zero());
    CHECK(red2.G.is_canonical_zero());
}

TEST_CASE("reduce_order rejects non-conserved pairs") {
    Declarations d;
    EvolutionEquation heat{UXX()};
    CHECK_THROWS_AS(reduce_order({U(), UX()}, heat, d), NotConserved);
}

TEST_CASE("equivalence modulo trivial vectors") {
    Declarations d;
    EvolutionEquation heat{UXX()};
    ConservedVector a{U(), -UX()};
    ConservedVector b{U() + UX() * UX() + U() * UXX(),
                      -UX() - UX() * UXX() - U() * JetExpr::u(3)};
    CHECK(are_equivalent(a, b, heat, d));
    ConservedVector c{X() * U(), U() - X() * UX()};
    CHECK_FALSE(are_equivalent(a, c, heat, d));
}

TEST_CASE("determining system for the heat equation, divergence form") {
    Declarations d;
    EvolutionEquation heat{UXX()};
    DeterminingSystem sys = determining_system(heat, {txu(), txu()}, d);
    CHECK(sys.gauge == ReducedGauge::DivergenceForm);
    CHECK(sys.hat_H == UX());
    REQUIRE(sys.equations.size() == 3);
    REQUIRE(sys.provenance.size() == 3);
    CHECK(sys.provenance[0] == "coefficient of u_x^2");
    CHECK(sys.provenance[1] == "coefficient of u_x");
    CHECK(sys.provenance[2] == "coefficient of 1");

    auto Fat = [&](std::vector<int> deriv) {
        return JetExpr::function(sys.F, {T(), X(), U()}, std::move(deriv));
    };
    auto Gat = [&](std::vector<int> deriv) {
        return JetExpr::function(sys.G, {T(), X(), U()}, std::move(deriv));
    };
    JetExpr e0 = Fat({0, 0, 2});
    JetExpr e1 = Gat({0, 0, 1}) - Fat({0, 1, 1});
    JetExpr e2 = Fat({1, 0, 0}) + Gat({0, 1, 0});
    CHECK((sys.equations[0] == e0 || sys.equations[0] == -e0));
    CHECK((sys.equations[1] == e1 || sys.equations[1] == -e1));
    CHECK((sys.equations[2] == e2 || sys.equations[2] == -e2));
}

TEST_CASE("determining system for a fully nonlinear equation, generic gauge") {
    Declarations d;
    EvolutionEquation eq{-1 / UXX()};
    DeterminingSystem sys = determining_system(eq, {txu1(), txu1()}, d);
    CHECK(sys.gauge == ReducedGauge::Generic);
    REQUIRE(sys.equations.size() == 3);
    CHECK(sys.provenance[0] == "coefficient of u_xx^2");
    CHECK(sys.provenance[1] == "coefficient of u_xx");
    CHECK(sys.provenance[2] == "coefficient of 1");

    auto Fat = [&](std::vector<int> deriv) {
        return JetExpr::function(sys.F, {T(), X(), U(), UX()}, std::move(deriv));
    };
    auto Gat = [&](std::vector<int> deriv) {
        return JetExpr::function(sys.G, {T(), X(), U(), UX()}, std::move(deriv));
    };
    JetExpr e0 = Gat({0, 0, 0, 1});
    JetExpr e1 = Fat({1, 0, 0, 0}) + Fat({0, 0, 0, 2}) + Gat({0, 1, 0, 0}) +
                 Gat({0, 0, 1, 0}) * UX();
    JetExpr e2 = Fat({0, 1, 0, 1}) - Fat({0, 0, 1, 0}) + Fat({0, 0, 1, 1}) * UX();
    CHECK((sys.equations[0] == e0 || sys.equations[0] == -e0));
    CHECK((sys.equations[1] == e1 || sys.equations[1] == -e1));
    CHECK((sys.equations[2] == e2 || sys.equations[2] == -e2));
}

TEST_CASE("divergence-form gauge integrates the right-hand side") {
    Declarations d;
    auto A = d.declare("A", 1);
    auto B = d.declare("B", 1);
    JetExpr Au = JetExpr::function(A, {U()});
    JetExpr Bu = JetExpr::function(B, {U()});
    JetExpr H = JetExpr::function(A, {U()}, {1}) * UX() * UX() + Au * UXX() + Bu * UX();
    EvolutionEquation eq{H};
    DeterminingSystem sys = determining_system(eq, {txu(), txu()}, d);
    CHECK(sys.gauge == ReducedGauge::DivergenceForm);
    JetExpr Bi = JetExpr::function(d.antiderivative(B), {U()});
    CHECK(sys.hat_H == Au * UX() + Bi);
}

TEST_CASE("splitting fails honestly when a jet variable hides in an atom") {
    Declarations d;
    EvolutionEquation eq{UXX() + JetExpr::exp(UXX())};
    CHECK_THROWS_AS(determining_system(eq, {txu(), txu1()}, d), SplitFailure);
}

TEST_CASE("ansatz signatures are validated") {
    Declarations d;
    EvolutionEquation heat{UXX()};
    CHECK_THROWS_AS(determining_system(heat, {{Var::u(2)}, txu()}, d),
                    std::invalid_argument);
    CHECK_THROWS_AS(determining_system(heat, {{Var::t(), Var::t()}, txu()}, d),
                    std::invalid_argument);
    CHECK_THROWS_AS(determining_system(heat, {{}, txu()}, d), std::invalid_argument);
}
