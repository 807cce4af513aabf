#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "jetcl/classify.hpp"
#include "jetcl/claws.hpp"
#include "jetcl/expr.hpp"
#include "jetcl/jet.hpp"

namespace jetcl {

struct UnknownEntry : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct BadBinding : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A built-in equation instance bundled with everything the regression and
/// acceptance suites expect the classifier and the verifier to reproduce.
/// Expectations are mathematical facts about the instance, independent of
/// how decide happens to find them.
struct CatalogEntry {
    std::string name;
    std::string description;
    EvolutionEquation eq;

    /// Symbols the instance introduced (coefficients, antiderivatives,
    /// constrained family parameters). Pass this to decide/verify calls.
    Declarations decls;

    /// Expected classification; empty for generator-only entries.
    std::optional<Verdict> verdict;
    /// Expected basis with characteristics, up to equivalence.
    std::vector<std::pair<ConservedVector, Characteristic>> basis;
    /// Function-parametrized families carried by the instance.
    std::vector<LawFamily> families;
    /// Concrete family members (polynomial parameter solutions), ready for
    /// certification.
    std::vector<std::pair<ConservedVector, Characteristic>> family_samples;

    /// First- and second-level potentials in the given chart, when they
    /// exist: eq.rhs = D_x hat_H and eq.rhs = D_x^2 check_H.
    std::optional<JetExpr> hat_H;
    std::optional<JetExpr> check_H;

    /// Chart reaching the entry's normal form, when one is on record,
    /// together with the equation the chart produces.
    std::optional<ContactTransformation> normalizer;
    std::optional<EvolutionEquation> normal_form;
};

/// Names accepted by instantiate, in presentation order.
std::vector<std::string> catalog_names();

/// Build the named instance. Bindings supply coefficient expressions where
/// the entry is parameterized:
///
///   dc           u_t = (A(u) u_x)_x + B(u) u_x
///                A required (u-only, nonzero), B optional (u-only, default
///                0). Expectations follow the drift/diffusion shape: constant
///                A and B give the linear row, B = 0 the two-law row with
///                characteristics {1, x}, B = c A (c constant nonzero) the
///                two-law row with characteristics {1, e^{cx}} plus the
///                normalizing chart (c^2 t, e^{cx}, e^{-cx} u), anything else
///                the mass law alone. Counts are exact for concrete
///                coefficients and lower bounds when opaque declared symbols
///                are present.
///   dc_variable  f(x) u_t = (g(x) A(u) u_x)_x + h(x) B(u) u_x
///                A, B required (u-only); f, g, h optional (x-only, default
///                1, f and g nonzero). Generator only: no expectations.
///   heat         u_t = u_xx with the adjoint family h(t,x) u.
///   L1           u_t = u_x^-2 u_xx, the gradient-interchange instance.
///   L2           u_t = -u_xx^-1, the contact-linearizable instance.
///   nfl1..nfl10  fixed equations outside the fractionally-linear class;
///                expected verdict Exact(0).
///
/// Throws UnknownEntry for other names, BadBinding for missing, superfluous,
/// or malformed bindings. Coefficients whose decisive combinations vanish
/// numerically but not canonically are rejected rather than misclassified.
CatalogEntry instantiate(const std::string& name,
                         const std::map<std::string, JetExpr>& bindings = {});

/// The first five polynomial solutions of s_t + s_ww = 0 as expressions in
/// t and the given w: 1, w, w^2 - 2t, w^3 - 6tw, w^4 - 12tw^2 + 12t^2.
std::vector<JetExpr> backward_heat_polynomials(const JetExpr& w);

}  // namespace jetcl
