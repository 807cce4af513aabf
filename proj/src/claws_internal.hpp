#pragma once

// Helpers shared between the determining-system builder and its solver.

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "jetcl/claws.hpp"

namespace jetcl::detail {

/// A declared symbol with a name not used before: base, base2, base3, ...
FunctionSymbolPtr fresh_symbol(Declarations& decls, const std::string& base, int arity,
                               std::optional<SecondOrderConstraint> con = {});

/// Number of antiderivative layers from a's symbol down to a symbol named
/// `name` (0 for a direct match); -1 when the chain never reaches it.
int antiderivative_depth(const Atom& a, const std::string& name);

struct SplitGroup {
    Monomial free_mono;
    std::string label;  // printed free monomial, "1" for the constant group
    JetExpr eq;         // polynomial coefficient, leading sign positive
};

/// Split the numerator of `condition` by monomials in everything outside
/// `sig_codes`: plain variables with codes not in the set, and fixed atoms
/// whose arguments involve such variables. Atoms of symbols named in
/// `unknown_names` always stay in the coefficient part. Fixed atoms in the
/// free part are allowed only with allow_atom_split (recording a linear
/// independence assumption in `sides`), otherwise SplitFailure is thrown.
/// Groups come back ordered by descending free monomial.
std::vector<SplitGroup> split_by_free(const JetExpr& condition,
                                      const std::set<int>& sig_codes,
                                      const std::set<std::string>& unknown_names,
                                      bool allow_atom_split,
                                      std::vector<std::string>* sides);

/// All distinct roots with multiplicity of sum_k coeffs[k] r^k when the
/// polynomial factors completely over Q; nullopt otherwise (or when the
/// integer bounds for the divisor search are exceeded).
std::optional<std::vector<std::pair<Rational, int>>> rational_roots(
    const std::vector<Rational>& coeffs);

}  // namespace jetcl::detail
