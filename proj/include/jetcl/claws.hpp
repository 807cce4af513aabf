#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "jetcl/jet.hpp"

namespace jetcl {

struct NotConserved : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SplitFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Conserved vectors (F, G) with D_t F + D_x G = 0 on solutions, and their
// characteristics.
// ---------------------------------------------------------------------------
struct ConservedVector {
    JetExpr F, G;
    bool reduced = false;  // F = F(t,x,u,u_x) and G + F_{u_x}H = G1(t,x,u,u_x)

    /// Note-2 triviality for reduced vectors: both components depend at most
    /// on t and x.
    bool trivial() const {
        return depends_only_on_tx(F) && depends_only_on_tx(G);
    }
};

struct Characteristic {
    JetExpr lambda;
};

/// lambda = F_u - D_x(F_{u_x}), the variational derivative of the density in
/// the x-jet. A reduced conserved vector is equivalent to a trivial one
/// exactly when its characteristic vanishes identically.
Characteristic characteristic_of(const ConservedVector& cv);

/// Substitute a declared function symbol by a concrete expression: body is
/// given over the formal parameter variables `params`; every atom of `sym`
/// (including differentiated ones) is replaced by the correspondingly
/// differentiated body evaluated at the atom's arguments. Atoms of an
/// antiderivative symbol of `sym` become the integrated body (integration
/// constant zero); decls provides their integration.
JetExpr substitute_symbol(const JetExpr& e, const FunctionSymbolPtr& sym,
                          const std::vector<Var>& params, const JetExpr& body,
                          Declarations& decls);

/// Reduce an on-shell conserved vector to first-order form by subtracting
/// total shifts (D_x Phi, -D_t Phi): u_t-jets are eliminated through the
/// equation, the density is peeled to order <= 1, and an u_x-linear density
/// part is stripped when possible. Throws NotConserved if the input fails
/// the divergence check, UnsupportedIntegrand if peeling leaves the
/// supported expression class.
ConservedVector reduce_order(const ConservedVector& cv, const EvolutionEquation& eq,
                             Declarations& decls);

/// True when cv1 - cv2 reduces to a vector with both components depending at
/// most on (t,x).
bool are_equivalent(const ConservedVector& cv1, const ConservedVector& cv2,
                    const EvolutionEquation& eq, Declarations& decls);

// ---------------------------------------------------------------------------
// Determining systems for reduced-form conserved vectors
// ---------------------------------------------------------------------------

/// How the flux is parametrized against the density.
enum class ReducedGauge {
    Generic,         // G = -F_{u_x} H + G1(t,x,u,u_x)
    DivergenceForm,  // H = D_x hat_H and G = -F_u hat_H + G0 with F = F(t,x,u)
};

struct AnsatzSignature {
    std::vector<Var> F_args;  // subset of {t, x, u, u_x}
    std::vector<Var> G_args;
};

struct DeterminingSystem {
    JetExpr H;
    ReducedGauge gauge = ReducedGauge::Generic;
    JetExpr hat_H;  // DivergenceForm only
    FunctionSymbolPtr F, G;
    std::vector<Var> F_args, G_args;
    std::vector<JetExpr> equations;
    std::vector<std::string> provenance;  // splitting monomial per equation
};

/// Substitute unknown symbols F, G with the given signatures into the
/// reduced divergence condition and split polynomially with respect to every
/// jet variable absent from all signatures. Uses the divergence-form
/// parametrization when the equation is a total x-derivative and u_x is not
/// in F's signature. Throws SplitFailure when a splitting variable hides
/// inside a fixed atom argument.
DeterminingSystem determining_system(const EvolutionEquation& eq,
                                     const AnsatzSignature& ansatz,
                                     Declarations& decls);

// ---------------------------------------------------------------------------
// Solving
// ---------------------------------------------------------------------------

enum class Completeness {
    FunctionLevel,      // solved with unknowns kept as functions; no ansatz cut
    CompleteForAnsatz,  // solved completely within the polynomial ansatz
    Heuristic,          // unresolved constraints remain
};

/// An infinite family of conservation laws parametrized by a constrained
/// function symbol (second-order constraint, heat-equation type).
struct LawFamily {
    FunctionSymbolPtr sym;
    std::string constraint;  // e.g. "sigma_t + sigma_uu = 0"
    ConservedVector vec;     // components carry atoms of sym
    Characteristic lambda;
};

struct SolveOptions {
    int degree = 2;         // polynomial ansatz degree in (u, u_x), Generic gauge
    unsigned seed = 0x5eed; // nonzero-test sampling seed
};

struct SolveResult {
    std::vector<std::pair<ConservedVector, Characteristic>> basis;
    std::vector<LawFamily> families;
    Completeness completeness = Completeness::Heuristic;
    std::vector<std::string> side_conditions;  // genericity assumptions used
    std::vector<std::string> residual;         // unsolved constraints, printed
    std::vector<std::string> log;              // solving moves, for reports
};

/// Solve the determining system. In the divergence-form gauge the unknowns
/// are kept as opaque functions and reduced by equivalence moves
/// (completeness FunctionLevel when everything discharges); in the generic
/// gauge they are expanded polynomially in (u, u_x) up to options.degree
/// with (t,x)-coefficient unknowns. The returned basis is trivial-stripped,
/// independent modulo trivial vectors, sorted by (degree in u_x, degree in
/// u, printed form) and scaled to leading coefficient 1.
SolveResult solve_determining(const DeterminingSystem& sys,
                              const SolveOptions& options, Declarations& decls);

}  // namespace jetcl
