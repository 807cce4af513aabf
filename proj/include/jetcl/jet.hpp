#pragma once

#include <stdexcept>

#include "jetcl/expr.hpp"

namespace jetcl {

/// Thrown by the symbolic integrators when no closed form in the supported
/// pattern language exists.
struct UnsupportedIntegrand : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A second-order evolution equation u_t = rhs(t, x, u, u_x, u_xx).
/// Construction validates that rhs is of order exactly two: order() <= 2 and
/// d(rhs)/d(u_xx) does not vanish (certified or sampled nonzero).
struct EvolutionEquation {
    JetExpr rhs;
    explicit EvolutionEquation(JetExpr h);
};

/// Total x-derivative on the extended jet space:
/// D_x = d_x + sum_k u_{k+1} d_{u_k} + sum_k ut_{k+1} d_{ut_k}.
JetExpr total_x(const JetExpr& e);
JetExpr total_x(const JetExpr& e, int order);

/// Total t-derivative of e(t,x,u,...) along solutions of u_t = H:
/// D_t = d_t + sum_k D_x^k(H) d_{u_k}. Rejects expressions that already
/// carry u_t-band variables.
JetExpr total_t(const JetExpr& e, const JetExpr& H);

/// Total t-derivative off shell: u_t-jets stay symbolic,
/// D_t = d_t + sum_k ut_k d_{u_k}. Input must be u_t-band free.
JetExpr total_t_offshell(const JetExpr& e);

/// Euler operator in u: sum_k (-D_x)^k d_{u_k} e.
JetExpr euler_u(const JetExpr& e);

/// Antiderivative of e with respect to a single variable v, treating all
/// other variables as constants. Supported shapes per term: powers v^n
/// (n != -1), 1/v -> ln v, single function atoms with a plain-v slot
/// (derivative decrement or antiderivative symbol), exp atoms with argument
/// linear in v, and power-times-atom via integration by parts. Throws
/// UnsupportedIntegrand otherwise.
JetExpr integrate_wrt(const JetExpr& e, Var v, Declarations& decls);

/// Phi with D_x Phi = e, found by top-order peeling; throws
/// UnsupportedIntegrand if e is not a total x-derivative of an expression in
/// the supported pattern language.
JetExpr antiderivative_x(const JetExpr& e, Declarations& decls);

/// True when e involves at most t and x (no u-jets, no u_t-jets, also not
/// inside atom arguments).
bool depends_only_on_tx(const JetExpr& e);

/// d^2 H / d(u_xx)^2 == 0 (canonically).
bool is_quasilinear_u2(const JetExpr& H);

/// H is fractionally linear in u_xx: H = (a u_xx + b)/(c u_xx + d) with
/// u_xx-free coefficient functions. Decided syntactically on the rational
/// normal form when u_xx does not hide inside atom arguments, otherwise by
/// the differential criterion S_{u_xx} = S^2/2 for S = H_{u_xx u_xx}/H_{u_xx}.
bool is_fractionally_linear_u2(const JetExpr& H);

/// Same criterion with respect to u_x (used for first-order reduced forms).
bool is_fractionally_linear_u1(const JetExpr& e);

/// Decomposition H = a u_xx + b u_x + c u + d with (t,x)-only coefficients;
/// `linear` is false (and the fields empty) if H is not of that form.
struct LinearForm {
    bool linear = false;
    JetExpr a, b, c, d;
};
LinearForm linear_decompose(const JetExpr& H);

struct StructuralFlags {
    bool quasi_linear = false;  // H_{u_xx u_xx} = 0
    bool linear = false;        // affine in (u, u_x, u_xx) over (t,x)
};
StructuralFlags structural_flags(const JetExpr& H);

}  // namespace jetcl
