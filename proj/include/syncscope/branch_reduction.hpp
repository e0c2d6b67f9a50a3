#pragma once

// ============================================================================
// Reduction of R-L branch networks to mixed hybrid parameters.
//
// Passive interior nodes are Kron-eliminated (Schur complement of the nodal
// admittance matrix) and the remaining active nodes are partitioned by kind
// into a hybrid-parameter matrix G(s) with
//     received_m = sum_n G_mn(s) * transmitted_n,
// where voltage nodes transmit voltage / receive current flowing into the
// apparatus, and current nodes transmit injected current / receive voltage.
// The reduction is exact in s: G(s) and dG/ds are evaluated on demand from
// fresh admittance assemblies, never from a fitted approximation.
// ============================================================================

#include <string>
#include <utility>
#include <vector>

#include "syncscope/errors.hpp"
#include "syncscope/node.hpp"
#include "syncscope/types.hpp"

namespace syncscope {

/// Series R-L branch between two node ids.  The ids "0", "gnd", "GND" and
/// "ground" denote the reference node.
struct Branch {
    std::string from;
    std::string to;
    Real resistance = 0.0; ///< ohm, >= 0
    Real inductance = 0.0; ///< henry, >= 0; R and L must not both be zero
};

[[nodiscard]] bool is_ground_id(const std::string& id);

/// Evaluation closure over the reduced network: holds the branch list with
/// resolved indices and produces G(s) (and its s-derivative) at any complex s.
class ReducedBranchNetwork {
public:
    /// active: ordered (id, kind) pairs fixing the row/column order of G.
    /// Endpoints that are neither active nor ground become passive interior
    /// nodes and are eliminated.  Throws ConnectivityError unless all modeled
    /// nodes form one branch-connected component (ground does not connect).
    ReducedBranchNetwork(std::vector<Branch> branches,
                         std::vector<std::pair<std::string, NodeKind>> active);

    [[nodiscard]] int active_count() const { return static_cast<int>(kinds_.size()); }
    [[nodiscard]] int passive_count() const { return passive_count_; }

    /// G(s).  Throws PoleProximityError naming s if the reduction hits a
    /// singular passive or current-node block (a natural resonance of the
    /// eliminated subnetwork).
    [[nodiscard]] CMat hybrid(Complex s) const;

    /// {G(s), dG/ds} with the derivative propagated analytically through the
    /// Schur complement and the hybrid partition.
    [[nodiscard]] std::pair<CMat, CMat> hybrid_with_derivative(Complex s) const;

private:
    struct ResolvedBranch {
        int i; // -1 for ground
        int j;
        Real resistance;
        Real inductance;
    };

    void assemble(Complex s, CMat& Y, CMat& dY) const;
    [[nodiscard]] std::pair<CMat, CMat> reduce(Complex s) const;

    std::vector<ResolvedBranch> branches_;
    std::vector<NodeKind> kinds_;
    std::vector<int> voltage_idx_;
    std::vector<int> current_idx_;
    int passive_count_ = 0;
};

} // namespace syncscope
