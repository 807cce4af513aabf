#include <random>

#include "doctest.h"
#include "jetcl/jet.hpp"

using namespace jetcl;

namespace {
JetExpr U() { return JetExpr::u(0); }
JetExpr UX() { return JetExpr::u(1); }
JetExpr UXX() { return JetExpr::u(2); }
JetExpr X() { return JetExpr::x(); }
JetExpr T() { return JetExpr::t(); }
}  // namespace

TEST_CASE("total_x on basic expressions") {
    CHECK(total_x(U()) == UX());
    CHECK(total_x(UX()) == UXX());
    CHECK(total_x(X()) == JetExpr(1));
    CHECK(total_x(T()).is_canonical_zero());
    CHECK(total_x(U() * U()) == 2 * U() * UX());
    CHECK(total_x(X() * U()) == U() + X() * UX());
    CHECK(total_x(U(), 2) == UXX());
    CHECK(total_x(JetExpr(1) / U()) == -UX() / (U() * U()));

    Declarations d;
    auto A = d.declare("A", 1);
    JetExpr Au = JetExpr::function(A, {U()});
    CHECK(total_x(Au) == JetExpr::function(A, {U()}, {1}) * UX());

    // u_t-band variables are promoted along their own column
    JetExpr ut0 = JetExpr::variable(Var::ut(0));
    CHECK(total_x(ut0) == JetExpr::variable(Var::ut(1)));
}

TEST_CASE("total_t along an equation") {
    JetExpr heat = UXX();
    CHECK(total_t(U(), heat) == UXX());
    CHECK(total_t(UX(), heat) == JetExpr::variable(Var::u(3)));
    CHECK(total_t(T(), heat) == JetExpr(1));
    CHECK(total_t(X(), heat).is_canonical_zero());

    JetExpr burgers = UXX() + U() * UX();
    CHECK(total_t(U(), burgers) == burgers);
    CHECK(total_t(U() * U(), burgers) == 2 * U() * burgers);

    CHECK_THROWS_AS(total_t(JetExpr::variable(Var::ut(0)), heat),
                    std::invalid_argument);
}

TEST_CASE("total derivatives commute on shell") {
    Declarations d;
    auto A = d.declare("A", 1);
    JetExpr burgers = UXX() + U() * UX();
    for (const JetExpr& e :
         {U() * UX(), JetExpr::function(A, {U()}), X() * UXX(), T() * U() + X()}) {
        JetExpr lhs = total_x(total_t(e, burgers));
        JetExpr rhs = total_t(total_x(e), burgers);
        CHECK(lhs == rhs);
    }
}

TEST_CASE("total_t_offshell keeps u_t symbolic") {
    JetExpr ut0 = JetExpr::variable(Var::ut(0));
    JetExpr ut1 = JetExpr::variable(Var::ut(1));
    CHECK(total_t_offshell(U()) == ut0);
    CHECK(total_t_offshell(U() * UX()) == ut0 * UX() + U() * ut1);
    CHECK(total_t_offshell(T()) == JetExpr(1));
    CHECK_THROWS_AS(total_t_offshell(ut0), std::invalid_argument);
}

TEST_CASE("euler operator known values") {
    CHECK(euler_u(UX() * UX() / 2) == -UXX());
    CHECK(euler_u(U() * U() / 2) == U());
    // divergences are annihilated
    CHECK(euler_u(U() * UXX() + UX() * UX()).is_canonical_zero());
    CHECK(euler_u(total_x(U() * U() * UX())).is_canonical_zero());

    Declarations d;
    auto A = d.declare("A", 1);
    JetExpr Au = JetExpr::function(A, {U()});
    CHECK(euler_u(total_x(Au * UX())).is_canonical_zero());
}

TEST_CASE("integrate_wrt power and logarithm shapes") {
    Declarations d;
    Var u = Var::u(0);

    CHECK(integrate_wrt(U() * U(), u, d) == U().pow(3) / 3);
    CHECK(integrate_wrt(JetExpr(1) / U(), u, d) == JetExpr::ln(U()));
    CHECK(integrate_wrt((U() + 1) / (U() * U()), u, d) ==
          JetExpr::ln(U()) - JetExpr(1) / U());
    CHECK(integrate_wrt(JetExpr(1) / (U() + 1), u, d) == JetExpr::ln(U() + 1));
    CHECK(integrate_wrt(T() / (X() + T()), Var::x(), d) ==
          T() * JetExpr::ln(X() + T()));
    // coefficients in other variables ride along
    CHECK(integrate_wrt(T() * X() * U(), u, d) == T() * X() * U() * U() / 2);
}

TEST_CASE("integrate_wrt atoms and integration by parts") {
    Declarations d;
    auto A = d.declare("A", 1);
    auto h = d.declare("h", 2);
    Var u = Var::u(0);

    JetExpr Au = JetExpr::function(A, {U()});
    JetExpr Aint = JetExpr::function(d.antiderivative(A), {U()});
    CHECK(integrate_wrt(Au, u, d) == Aint);
    JetExpr Ap = JetExpr::function(A, {U()}, {1});
    CHECK(integrate_wrt(Ap, u, d) == Au);

    // d/dx h(t,x) integrates back to h
    JetExpr hx = JetExpr::function(h, {T(), X()}, {0, 1});
    CHECK(integrate_wrt(hx, Var::x(), d) == JetExpr::function(h, {T(), X()}));

    // by parts: int u A(u) du = u A_int - A_int_int
    JetExpr r = integrate_wrt(U() * Au, u, d);
    CHECK(r.diff(u) == U() * Au);

    // exp with a linear argument
    JetExpr e3x = JetExpr::exp(3 * X());
    JetExpr rx = integrate_wrt(X() * X() * e3x, Var::x(), d);
    CHECK(rx.diff(Var::x()) == X() * X() * e3x);
    CHECK(integrate_wrt(JetExpr::exp(2 * U()), u, d) == JetExpr::exp(2 * U()) / 2);
}

TEST_CASE("integrate_wrt rejects shapes outside the pattern language") {
    Declarations d;
    auto A = d.declare("A", 1);
    Var u = Var::u(0);
    JetExpr Au = JetExpr::function(A, {U()});

    CHECK_THROWS_AS(integrate_wrt(JetExpr::ln(U()), u, d), UnsupportedIntegrand);
    CHECK_THROWS_AS(integrate_wrt(Au * Au, u, d), UnsupportedIntegrand);
    CHECK_THROWS_AS(integrate_wrt(JetExpr::function(A, {X() * U()}), u, d),
                    UnsupportedIntegrand);
    CHECK_THROWS_AS(integrate_wrt(JetExpr(1) / (U() * U() + 1), u, d),
                    UnsupportedIntegrand);
    CHECK_THROWS_AS(integrate_wrt(JetExpr::exp(U() * U()), u, d),
                    UnsupportedIntegrand);
}

TEST_CASE("antiderivative_x known values") {
    Declarations d;
    auto A = d.declare("A", 1);
    JetExpr Au = JetExpr::function(A, {U()});
    JetExpr Aint = JetExpr::function(d.antiderivative(A), {U()});

    CHECK(antiderivative_x(UX(), d) == U());
    CHECK(antiderivative_x(U() * UX(), d) == U() * U() / 2);
    CHECK(antiderivative_x(Au * UX(), d) == Aint);
    CHECK(antiderivative_x(UX() * UX() + U() * UXX(), d) == U() * UX());
    CHECK(antiderivative_x(UX() * UXX(), d) == UX() * UX() / 2);
    CHECK(antiderivative_x(UXX() / (UX() * UX()), d) == -1 / UX());
    JetExpr ex = JetExpr::exp(X());
    CHECK(antiderivative_x(ex * U() + ex * UX() + ex, d) == ex * U() + ex);
    CHECK(antiderivative_x(JetExpr(1), d) == X());
}

TEST_CASE("antiderivative_x rejects non-divergences") {
    Declarations d;
    CHECK_THROWS_AS(antiderivative_x(U(), d), UnsupportedIntegrand);
    CHECK_THROWS_AS(antiderivative_x(UX() * UX(), d), UnsupportedIntegrand);
    auto A = d.declare("A", 1);
    CHECK_THROWS_AS(antiderivative_x(JetExpr::function(A, {U()}), d),
                    UnsupportedIntegrand);
}

TEST_CASE("structure predicates") {
    Declarations d;
    auto h = d.declare("h", 2);
    CHECK(depends_only_on_tx(T() * X() + JetExpr::exp(T())));
    CHECK(depends_only_on_tx(JetExpr::function(h, {T(), X()})));
    CHECK_FALSE(depends_only_on_tx(U()));
    auto A = d.declare("A", 1);
    CHECK_FALSE(depends_only_on_tx(JetExpr::function(A, {U()})));

    CHECK(is_quasilinear_u2(UXX()));
    CHECK(is_quasilinear_u2(JetExpr::function(A, {U()}) * UXX() + UX()));
    CHECK_FALSE(is_quasilinear_u2(UXX() * UXX()));
    CHECK_FALSE(is_quasilinear_u2(-1 / UXX()));
}

TEST_CASE("fractional linearity in the top jet") {
    Declarations d;
    auto A = d.declare("A", 1);
    auto B = d.declare("B", 1);
    JetExpr Au = JetExpr::function(A, {U()});
    JetExpr Bu1 = JetExpr::function(B, {UX()});

    CHECK(is_fractionally_linear_u2(UXX()));
    CHECK(is_fractionally_linear_u2(-1 / UXX()));
    CHECK(is_fractionally_linear_u2((Au * UXX() + Bu1) / (UXX() + 1)));
    CHECK(is_fractionally_linear_u2((Au * UXX() + 1) / (UXX() - Au)));
    CHECK(is_fractionally_linear_u2(UXX() / (UX() * UX())));

    CHECK_FALSE(is_fractionally_linear_u2(UXX() * UXX()));
    CHECK_FALSE(is_fractionally_linear_u2(1 / (UXX() * UXX() + 1)));
    CHECK_FALSE(is_fractionally_linear_u2(JetExpr::function(A, {UXX()})));
    CHECK_FALSE(is_fractionally_linear_u2(JetExpr::exp(UXX())));

    CHECK(is_fractionally_linear_u1(-1 / UX()));
    CHECK(is_fractionally_linear_u1(Au * UX() + Au));
    CHECK_FALSE(is_fractionally_linear_u1(UX() * UX()));
    CHECK_FALSE(is_fractionally_linear_u1(JetExpr::exp(UX())));
}

TEST_CASE("linear_decompose") {
    LinearForm lf = linear_decompose(UXX());
    CHECK(lf.linear);
    CHECK(lf.a == JetExpr(1));
    CHECK(lf.b.is_canonical_zero());
    CHECK(lf.c.is_canonical_zero());
    CHECK(lf.d.is_canonical_zero());

    lf = linear_decompose(T() * UXX() + X() * UX() + U() + JetExpr::exp(T()));
    CHECK(lf.linear);
    CHECK(lf.a == T());
    CHECK(lf.b == X());
    CHECK(lf.c == JetExpr(1));
    CHECK(lf.d == JetExpr::exp(T()));

    CHECK_FALSE(linear_decompose(UXX() + U() * UX()).linear);
    Declarations d;
    auto A = d.declare("A", 1);
    CHECK_FALSE(linear_decompose(JetExpr::function(A, {U()}) * UXX()).linear);
    CHECK_FALSE(linear_decompose(UXX() + U() * U()).linear);
}

TEST_CASE("evolution equation validation") {
    auto make = [](const JetExpr& h) { return EvolutionEquation(h); };
    CHECK_NOTHROW(make(UXX()));
    CHECK_NOTHROW(make(UXX() + U() * UX()));
    CHECK_NOTHROW(make(-1 / UXX()));
    CHECK_THROWS_AS(make(UX()), std::invalid_argument);
    CHECK_THROWS_AS(make(JetExpr::variable(Var::u(3))), std::invalid_argument);
    CHECK_THROWS_AS(make(UXX() + JetExpr::variable(Var::ut(0))),
                    std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Property: for densities built from the supported pattern language,
// euler_u annihilates total_x and antiderivative_x inverts it.
// ---------------------------------------------------------------------------
namespace {

JetExpr random_density(std::mt19937& rng, Declarations& d) {
    std::uniform_int_distribution<int> coeff(-3, 3);
    std::uniform_int_distribution<int> deg(0, 2);
    std::uniform_int_distribution<int> pickatom(0, 5);
    std::uniform_int_distribution<int> nterms(1, 3);

    auto A = d.lookup("A");
    auto h = d.lookup("h");
    JetExpr phi;
    int n = nterms(rng);
    for (int i = 0; i < n; ++i) {
        int c = coeff(rng);
        if (c == 0) c = 1;
        JetExpr term(c);
        term = term * T().pow(deg(rng)) * X().pow(deg(rng)) * U().pow(deg(rng)) *
               UX().pow(deg(rng));
        switch (pickatom(rng)) {
            case 0: term = term * JetExpr::function(A, {U()}); break;
            case 1: term = term * JetExpr::function(A, {U()}, {1}); break;
            case 2: term = term * JetExpr::exp(U()); break;
            case 3: term = term * JetExpr::exp(2 * X()); break;
            case 4: term = term * JetExpr::function(h, {T(), X()}); break;
            default: break;
        }
        phi = phi + term;
    }
    return phi;
}

}  // namespace

TEST_CASE("euler annihilates divergences and peeling inverts them") {
    std::mt19937 rng(20260815);
    Declarations d;
    d.declare("A", 1);
    d.declare("h", 2);
    for (int round = 0; round < 40; ++round) {
        JetExpr phi = random_density(rng, d);
        JetExpr e = total_x(phi);
        CAPTURE(phi.str());
        CHECK(euler_u(e).is_canonical_zero());
        if (e.is_canonical_zero()) continue;
        JetExpr back = antiderivative_x(e, d);
        CHECK(total_x(back) == e);
    }
}
