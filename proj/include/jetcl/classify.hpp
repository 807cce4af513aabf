#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "jetcl/claws.hpp"
#include "jetcl/jet.hpp"

namespace jetcl {

struct DegenerateTransformation : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InversionFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct TrivialInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DependentLaws : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NoDivergenceForm : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Admissible transformations t~ = T(t), x~ = X(t,x,u,u_x), u~ = U(t,x,u,u_x)
// ---------------------------------------------------------------------------

/// Construction validates the shape (T depends on t only, X and U have jet
/// order <= 1), T_t != 0 and the rank-2 condition on the Jacobian of (X,U)
/// with respect to (x,u,u_x) at generic points, and certifies the contact
/// condition (U_x + U_u u_x) X_{u_x} = (X_x + X_u u_x) U_{u_x}. Throws
/// DegenerateTransformation otherwise.
class ContactTransformation {
public:
    enum class Kind { Point, Contact };

    ContactTransformation(JetExpr T, JetExpr X, JetExpr U);

    const JetExpr& T() const { return T_; }
    const JetExpr& X() const { return X_; }
    const JetExpr& U() const { return U_; }
    /// First prolongation: u~_x~ = V(t,x,u,u_x).
    const JetExpr& V() const { return V_; }

    Kind kind() const { return kind_; }
    bool is_point() const { return kind_ == Kind::Point; }

private:
    JetExpr T_, X_, U_, V_;
    Kind kind_ = Kind::Point;
};

/// Right-hand side of the transformed equation,
///   H~ = ((U_u - X_u V) H + U_t - X_t V) / T_t,
/// re-expressed in the new chart (point transformations go through the
/// equivalent Jacobian form with Delta = X_x U_u - X_u U_x). The change of
/// variables is inverted within the expression class and the result is
/// certified by a substitution round trip; InversionFailure when either step
/// fails.
EvolutionEquation apply_transformation(const ContactTransformation& tr,
                                       const EvolutionEquation& eq);

/// Conserved-vector transport along tr:
///   F~ = F / D_xX,  G~ = G / T_t + (D_tX / D_xX)(F / T_t),
/// with D_t taken along solutions of eq, re-expressed in the new chart.
ConservedVector transform_conserved_vector(const ContactTransformation& tr,
                                           const ConservedVector& cv,
                                           const EvolutionEquation& eq);

/// Peel a u_x-linear density part: for F with F_{u_x u_x} = 0 and
/// Phi = int F_{u_x} du, returns the equivalent vector
/// (F - D_x Phi, G + D_t Phi) whose density depends on (t,x,u) only.
ConservedVector strip_ux_linear(const ConservedVector& cv,
                                const EvolutionEquation& eq,
                                Declarations& decls);

/// A PDE system handed back unsolved when no normalization pattern applies:
/// each expression in `equations` has to vanish identically in the listed
/// unknown functions.
struct EmittedSystem {
    std::vector<std::string> unknowns;
    std::vector<JetExpr> equations;
    std::string note;
};

using NormalizationOutcome = std::variant<ContactTransformation, EmittedSystem>;

/// Transformation sending the conservation law of cv to characteristic 1.
/// Densities linear in u_x reduce through a point transformation
/// (T,X,U) = (t, x, F); genuinely u_x-quadratic densities are matched
/// against a small pattern library (Legendre type), otherwise the
/// characteristic system for (X, U, Phi) is returned unsolved. Throws
/// TrivialInput when cv reduces to a null divergence.
NormalizationOutcome normalize_char1(const ConservedVector& cv,
                                     const EvolutionEquation& eq,
                                     Declarations& decls);

/// Point transformation sending an independent pair of conservation laws,
/// the first with characteristic 1 and the second with density F2(t,x,u), to
/// the characteristics (1, x~): X = F2_u, and U solves X_x U_u - X_u U_x = 1
/// by quadrature when X depends on only one of (x,u). A pair whose
/// characteristics both depend only on (t,x) is handled by the ratio
/// shortcut X = l2/l1, U = l1 u / X_x. Throws DependentLaws when
/// (F2_{xu}, F2_{uu}) = (0,0).
NormalizationOutcome normalize_pair(const ConservedVector& cv1,
                                    const ConservedVector& cv2,
                                    const EvolutionEquation& eq,
                                    Declarations& decls);

// ---------------------------------------------------------------------------
// Decision procedure
// ---------------------------------------------------------------------------

enum class VerdictKind { Exact, AtLeast, Infinite, Undecided };

struct Verdict {
    VerdictKind kind = VerdictKind::Undecided;
    int count = 0;  // number of laws (exact or lower bound); 0 for Infinite
};

struct TransformationRecord {
    ContactTransformation tr;
    std::string provenance;
};

struct ClassificationReport {
    Verdict verdict;
    std::vector<std::pair<ConservedVector, Characteristic>> basis;
    std::optional<JetExpr> hat_H;    // H = D_x hat_H in the given chart
    std::optional<JetExpr> check_H;  // H = D_x^2 check_H, check_H = check_H(t,x,u)
    std::vector<TransformationRecord> transformations;
    std::vector<LawFamily> families;
    std::vector<std::string> side_conditions;
    std::string chart_caveat;
    std::vector<std::string> notes;
};

/// Chart-level classification of the space of conservation laws:
///   (i)  H not fractionally linear in u_xx        -> Exact(0)
///   (ii) H affine in (u,u_x,u_xx) over (t,x)      -> Infinite, adjoint family
///   (iii) certified divergence structure: H = D_x hat_H, and when also
///         x H is a divergence, H = D_x^2 check_H; check_H_{uu} != 0 gives
///         Exact(2) with characteristics {1, x}, check_H_{uu} = 0 gives the
///         linear family; a sole hat_H with hat_H not fractionally linear in
///         u_x gives Exact(1)
///   (iv) otherwise the determining system is solved over the reduced
///        ansatz. Quasi-linear equations with a certified flux potential
///        admit a u_x-free density for every law, so a function-level
///        closure with no residual families or side conditions is Exact(k);
///        any other closure is AtLeast(k) and heuristic leftovers give
///        Undecided(k), with counts read as lower bounds in the given
///        coordinates.
ClassificationReport decide(const EvolutionEquation& eq,
                            const SolveOptions& options, Declarations& decls);

// ---------------------------------------------------------------------------
// Potential systems
// ---------------------------------------------------------------------------

struct PotentialSystem {
    std::string name;
    std::vector<std::pair<std::string, std::string>> equations;  // lhs = rhs
    std::string note;
};

/// First-level potential system {v_x = u, v_t = hat_H}, and for reports with
/// two laws in divergence position also the second-level system
/// {v1_x = u, w_x = v1, w_t = check_H}. Throws NoDivergenceForm when the
/// report carries no divergence form in the given chart.
std::vector<PotentialSystem> emit_potential_system(const ClassificationReport& report,
                                                   const EvolutionEquation& eq);

}  // namespace jetcl
