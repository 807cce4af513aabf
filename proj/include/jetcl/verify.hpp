#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "jetcl/classify.hpp"

namespace jetcl {

// ---------------------------------------------------------------------------
// Certificates: independent confirmation that a produced conserved vector,
// characteristic, or transformed equation satisfies its defining identity.
// The strong outcome is a canonical-zero residual; when canonicalization
// cannot close the identity (e.g. trigonometric relations outside the
// normal form), verification falls back to seeded numeric sampling and the
// certificate records every accepted sample point.
// ---------------------------------------------------------------------------

enum class CertificateKind { SymbolicZero, NumericSampled };

/// One accepted evaluation: the full assignment (variable names and atom
/// keys, as printed) together with the residual value there.
struct ResidualSample {
    std::map<std::string, double> point;
    double value = 0.0;
};

struct Certificate {
    CertificateKind kind = CertificateKind::SymbolicZero;
    JetExpr residual;                      // the expression certified to vanish
    unsigned seed = 0;                     // sampling seed (numeric kind)
    int sample_count = 0;                  // accepted samples (numeric kind)
    double max_abs_residual = 0.0;
    std::vector<ResidualSample> samples;   // every accepted sample, in order
    std::vector<std::string> constraints;  // symbol rewrites in effect

    bool symbolic() const { return kind == CertificateKind::SymbolicZero; }
};

/// Conservation failed: carries the sample at which the divergence residual
/// exceeded the tolerance (empty point for constant residuals).
struct Refuted : std::runtime_error {
    Refuted(const std::string& msg, ResidualSample w)
        : std::runtime_error(msg), witness(std::move(w)) {}
    ResidualSample witness;
};

/// An identity between produced expressions failed (characteristic equality,
/// off-shell multiplier identity, or transformed right-hand side). Carries
/// the nonzero residual expression.
struct Mismatch : std::runtime_error {
    Mismatch(const std::string& msg, JetExpr r)
        : std::runtime_error(msg), residual(std::move(r)) {}
    JetExpr residual;
};

struct VerifyOptions {
    unsigned seed = 0x5eed;
    int samples = 200;
    double tolerance = 1e-9;
};

/// Certify D_t F + D_x G = 0 on solutions of eq. Canonical-zero residual
/// yields a symbolic certificate; otherwise the residual is sampled at
/// opts.samples points with jet values drawn uniformly from
/// [-3,-1/3] u [1/3,3]. Throws Refuted with the witness sample.
Certificate verify_conserved(const ConservedVector& cv,
                             const EvolutionEquation& eq,
                             const VerifyOptions& opts = {});

/// Certify that lambda is the multiplier of the reduced vector cv: both the
/// off-shell identity
///   D_t^off F + D_x G - lambda (u_t - H) - D_x(F_{u_x} (u_t - H)) = 0
/// (u_t-jets independent) and agreement with the recomputed characteristic
/// F_u - D_x F_{u_x} must hold. Throws Mismatch if either route fails,
/// std::invalid_argument if cv is not in reduced form.
Certificate verify_characteristic(const ConservedVector& cv,
                                  const Characteristic& lambda,
                                  const EvolutionEquation& eq,
                                  const VerifyOptions& opts = {});

/// Certify that applying tr to eq yields the expected right-hand side.
/// Throws Mismatch with the residual; transformation errors propagate.
Certificate verify_transformation(const ContactTransformation& tr,
                                  const EvolutionEquation& eq,
                                  const EvolutionEquation& expected,
                                  const VerifyOptions& opts = {});

}  // namespace jetcl
