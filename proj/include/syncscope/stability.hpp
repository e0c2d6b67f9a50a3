#pragma once

// ============================================================================
// Small-gain synchronization certificate.
//
// In the modal basis the angle path contributes per-mode dynamics
// phi_m(s) = (xi_m + s/T(s))/s while the frequency path is bounded by the
// largest singular value of Gamma_H_Phi.  The certificate compares
//     zeta_m = inf over Re(s) > 0 of |phi_m(s)|
// against sigma_max; zeta_m > sigma_max for every mode certifies the
// operating point.  The infimum is evaluated on the boundary s = j*omega
// (valid when xi_m + s/T(s) has no zero strictly inside the right half
// plane, which is checked by an argument-principle winding count); when a
// zero lies strictly inside, the infimum is 0.
//
// The criterion is sufficient only: failing it certifies nothing.
// ============================================================================

#include <string>
#include <utility>
#include <vector>

#include "syncscope/network.hpp"
#include "syncscope/phase_locking.hpp"
#include "syncscope/types.hpp"

namespace syncscope {

/// Log-spaced boundary sweep, refined by golden-section search.
struct FrequencyGrid {
    Real omega_min = 1e-4;
    Real omega_max = 1e6;
    int points = 2000;
    Real refine_rel_tol = 1e-6;
};

/// Result of one modal infimum evaluation.
struct ZetaResult {
    Real zeta = 0.0;            ///< the reported infimum
    Complex argmin{0.0, 0.0};   ///< boundary minimizer, or the interior zero
    Real boundary_min = 0.0;    ///< minimum over the sampled boundary
    bool interior_zero = false; ///< a zero of xi + s/T(s) lies in Re(s) > 0
    bool winding_uncertain = false; ///< contour refinement hit its depth cap
};

/// zeta_m for one modal eigenvalue.  Throws UnsupportedDynamicsError if the
/// inertia dynamics have a right-half-plane pole (negative damping).
[[nodiscard]] ZetaResult zeta(Complex xi, const InertiaDynamics& dynamics,
                              const FrequencyGrid& grid = {});

/// Largest singular value.
[[nodiscard]] Real sigma_max(const CMat& m);

enum class Verdict { CertifiedStable, NotCertified };

struct ModeResult {
    Complex xi;
    Real zeta = 0.0;
    Complex argmin{0.0, 0.0};
    bool pass = false;
    bool interior_zero = false;
    bool winding_uncertain = false;
    /// Decimated boundary sweep (omega, |phi|), populated on request.
    std::vector<std::pair<Real, Real>> sweep;
};

struct StabilityReport {
    std::vector<ModeResult> modes;
    Real sigma_max_value = 0.0;
    Real min_zeta = 0.0;
    Real max_zeta = 0.0;
    Real margin = 0.0;     ///< min_m zeta_m - sigma_max (conservative reading)
    Real margin_max = 0.0; ///< max_m zeta_m - sigma_max (also reported)
    Verdict verdict = Verdict::NotCertified;
    Real phi_cond = 0.0;
    Real damping = 0.0;    ///< shared D of the inertia dynamics
    /// Boundary samples (omega, -s/T(s) at s = j*omega) of the forbidden
    /// region the mode stiffnesses must avoid, for plotting.  Positive
    /// frequencies only; the omega < 0 branch is the complex conjugate.
    std::vector<std::pair<Real, Complex>> forbidden_region;
    std::vector<std::string> notes;
};

struct CriterionOptions {
    FrequencyGrid grid{};
    int threads = 1;          ///< parallel zeta evaluations; results identical
    bool record_sweeps = false;
    int sweep_samples = 257;
    int forbidden_samples = 257;
};

/// Evaluate the full certificate for a synchronization model.
[[nodiscard]] StabilityReport evaluate_criterion(const SynchronizationModel& model,
                                                 const InertiaDynamics& dynamics,
                                                 const CriterionOptions& options = {});

/// Modal loop-gain matrix  Gamma_H_Phi * (1/T(s) I + diag(xi)/s)^{-1}.
/// Throws ResonanceError naming the mode if evaluated at a modal resonance.
[[nodiscard]] CMat loop_gain(const SynchronizationModel& model,
                             const InertiaDynamics& dynamics, Complex s);

} // namespace syncscope
