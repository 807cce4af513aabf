#pragma once

#include <stdexcept>
#include <string>

#include "jetcl/expr.hpp"

namespace jetcl {

struct ParseError : std::runtime_error {
    size_t position;
    ParseError(const std::string& msg, size_t pos)
        : std::runtime_error(msg + " (at offset " + std::to_string(pos) + ")"),
          position(pos) {}
};

/// Parse the expression language printed by JetExpr::str().
///
///   expr   := term (('+'|'-') term)*
///   term   := factor (('*'|'/') factor)*
///   factor := '-' factor | base ('^' int)?          (int may be (-n) or -n)
///   base   := number | variable | '(' expr ')' | call
///
/// Variables: t, x, u, u_x, u_xx, u[k], u_t, u_tx, u_txx, ut[k]. Numbers are
/// exact (decimals become rationals). Calls: exp/ln/sin/cos, declared
/// function symbols (primes mark derivatives of unary symbols, name_d<i>...
/// indexed derivatives, name_int antiderivatives), and diff(e, v[, k]) with
/// total x-differentiation for v = x and partial differentiation otherwise.
JetExpr parse_expression(const std::string& text, Declarations& decls);

}  // namespace jetcl
