#pragma once

// ============================================================================
// Power-communication network model.
//
// Nodes exchange carrier-synchronous signals over rational channels; each
// received signal is demodulated against the receiver's own transmission.
// From a configured operating point the model assembles the two coupling
// matrices of the linearized synchronization loop:
//   K:     hybrid-power sensitivity to transmitter angles (static path)
//   Gamma: hybrid-power sensitivity to transmitter frequencies (the
//          channel-frequency shift, built from dG/ds at the carrier)
// and diagonalizes H^{-1} K into synchronization modes.
// ============================================================================

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "syncscope/branch_reduction.hpp"
#include "syncscope/channel.hpp"
#include "syncscope/node.hpp"
#include "syncscope/types.hpp"

namespace syncscope {

/// Undirected channel between two node ids; both directions share the same
/// transfer function (reciprocity), each direction has its own gain state.
struct ExplicitEdge {
    std::string from;
    std::string to;
    RationalChannel channel;
};

/// Eigenvector condition number above which the modal basis is rejected.
inline constexpr Real defectiveness_guard = 1e8;

class NetworkGraph {
public:
    /// Explicit factored channels; all channels usable for dynamic simulation.
    static NetworkGraph from_channels(std::vector<Node> nodes, std::vector<ExplicitEdge> edges);

    /// R-L branch data reduced to dense hybrid parameters; analysis-grade
    /// (evaluation closures), quasi-static simulation only.
    static NetworkGraph from_branches(std::vector<Node> nodes, std::vector<Branch> branches);

    [[nodiscard]] int size() const { return static_cast<int>(nodes_.size()); }
    [[nodiscard]] const std::vector<Node>& nodes() const { return nodes_; }
    [[nodiscard]] const Node& node(int i) const { return nodes_.at(static_cast<std::size_t>(i)); }
    [[nodiscard]] int index_of(std::string_view id) const;

    /// True if the (receiver m, transmitter n) pair is coupled, including
    /// m == n for self-channels (always true in branch form).
    [[nodiscard]] bool coupled(int m, int n) const;

    /// G_mn(s): gain from transmitter n to receiver m.  Zero for uncoupled
    /// pairs.  Pole guards apply.
    [[nodiscard]] Complex gain(int m, int n, Complex s) const;
    [[nodiscard]] Complex gain_derivative(int m, int n, Complex s) const;

    /// Column n of G(s): every node's received gain from transmitter n.
    [[nodiscard]] CVec gains_from_transmitter(int n, Complex s) const;

    /// True when every coupled pair carries a factored RationalChannel
    /// (required for dynamic gain simulation).
    [[nodiscard]] bool factored() const { return reduced_ == nullptr; }

    /// Factored channel of the pair, or nullptr (branch form / uncoupled).
    [[nodiscard]] const RationalChannel* channel(int m, int n) const;

    /// Receiver <- transmitter pairs, in deterministic order: explicit edges
    /// both ways in declaration order, then self-channels in node order;
    /// branch form enumerates all ordered pairs.
    struct DirectedChannel {
        int to;   ///< receiver
        int from; ///< transmitter
    };
    [[nodiscard]] const std::vector<DirectedChannel>& directed_channels() const {
        return directed_;
    }

    [[nodiscard]] const ReducedBranchNetwork* reduced() const { return reduced_.get(); }

private:
    NetworkGraph() = default;
    void validate_nodes() const;

    std::vector<Node> nodes_;
    std::vector<ExplicitEdge> edges_;
    std::vector<std::vector<int>> edge_of_pair_; // N*N -> edge index or -1 (explicit form)
    std::vector<DirectedChannel> directed_;
    std::shared_ptr<const ReducedBranchNetwork> reduced_;
};

/// Operating point: per-pair carrier gains and demodulated powers, per-node
/// totals, and the back-computed hybrid-power setpoints.
struct Equilibrium {
    Real omega0 = default_omega0;
    std::vector<ComplexAngle> angle0; ///< per-node complex angles
    CMat g0;         ///< G_mn(j w0); zero where uncoupled
    CMat gprime0;    ///< dG_mn/ds at j w0; zero where uncoupled
    CMat S0;         ///< S_mn0 = e^{v_n} e^{v_m*} for coupled pairs
    CMat Shat0_edge; ///< g0 .* S0
    CVec Shat0;      ///< per-node total received power
    Vec W0;          ///< hybrid power at the operating point (= setpoints)
};

/// Evaluate the operating point of a graph at carrier frequency omega0.
[[nodiscard]] Equilibrium compute_equilibrium(const NetworkGraph& graph, Real omega0);

/// Angle-coupling matrix K: K_mn = -|S_mn0| |G_mn(j w0)| sin(kappa_mn) for
/// n != m with kappa_mn = eps_m - arg S_mn0 - arg G_mn(j w0); each diagonal
/// entry is the negated sum of its row (a uniform angle shift is neutral).
[[nodiscard]] Mat loaded_channel_matrix(const Equilibrium& eq, std::span<const Node> nodes);

/// Frequency-coupling matrix Gamma: same form with dG/ds in place of G and
/// no row-sum rule; the diagonal comes from self-channels where present.
[[nodiscard]] Mat frequency_shift_matrix(const Equilibrium& eq, std::span<const Node> nodes);

/// Modal decomposition of the synchronization loop.
struct SynchronizationModel {
    Mat K;
    Mat Gamma;
    Vec H;            ///< per-node inertia
    Mat K_H;          ///< H^{-1} K
    CVec xi;          ///< eigenvalues of K_H, ascending |xi| (rigid mode first)
    CMat Phi;         ///< unit-norm eigenvector columns matching xi
    Real phi_cond;    ///< 2-norm condition number of Phi
    CMat Gamma_H_Phi; ///< Phi^{-1} H^{-1} Gamma Phi
};

/// Diagonalize H^{-1}K and carry Gamma into the modal basis.  Throws
/// NearDefectiveError if cond(Phi) exceeds defectiveness_guard.
[[nodiscard]] SynchronizationModel modal_decomposition(const Mat& K, const Vec& H,
                                                       const Mat& Gamma);

/// Convenience: equilibrium + K + Gamma + modal decomposition in one call.
[[nodiscard]] SynchronizationModel build_synchronization_model(const NetworkGraph& graph,
                                                               const Equilibrium& eq);

} // namespace syncscope
