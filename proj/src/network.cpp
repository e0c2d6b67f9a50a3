#include "syncscope/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "syncscope/phase_locking.hpp"

namespace syncscope {

namespace {

void check_node(const Node& n) {
    if (n.id.empty()) {
        throw ConfigError("node with empty id");
    }
    if (!(n.inertia > 0.0) || !std::isfinite(n.inertia)) {
        throw ConfigError("node '" + n.id + "': inertia must be positive and finite");
    }
    if (!(n.damping >= 0.0) || !std::isfinite(n.damping)) {
        throw ConfigError("node '" + n.id + "': damping must be non-negative and finite");
    }
    if (!(n.epsilon >= 0.0) || !(n.epsilon < 2.0 * pi)) {
        throw ConfigError("node '" + n.id + "': epsilon must lie in [0, 2*pi)");
    }
    if (!std::isfinite(n.equilibrium.ln_amplitude) || !std::isfinite(n.equilibrium.angle)) {
        throw ConfigError("node '" + n.id + "': non-finite equilibrium angle");
    }
}

} // namespace

void NetworkGraph::validate_nodes() const {
    std::unordered_set<std::string> seen;
    for (const Node& n : nodes_) {
        check_node(n);
        if (!seen.insert(n.id).second) {
            throw ConfigError("duplicate node id '" + n.id + "'");
        }
    }
}

NetworkGraph NetworkGraph::from_channels(std::vector<Node> nodes,
                                         std::vector<ExplicitEdge> edges) {
    NetworkGraph g;
    g.nodes_ = std::move(nodes);
    g.edges_ = std::move(edges);
    g.validate_nodes();

    const int n = g.size();
    g.edge_of_pair_.assign(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(n), -1));

    std::unordered_map<std::string, int> index;
    for (int i = 0; i < n; ++i) index.emplace(g.nodes_[static_cast<std::size_t>(i)].id, i);

    for (std::size_t e = 0; e < g.edges_.size(); ++e) {
        const auto& edge = g.edges_[e];
        auto a = index.find(edge.from);
        auto b = index.find(edge.to);
        if (a == index.end() || b == index.end()) {
            throw ConfigError("channel endpoint '" + (a == index.end() ? edge.from : edge.to) +
                              "' is not a declared node");
        }
        if (a->second == b->second) {
            throw ConfigError("channel '" + edge.from +
                              "'-'" + edge.to + "': self-channels are a node attribute, not an edge");
        }
        auto& slot_ab = g.edge_of_pair_[static_cast<std::size_t>(a->second)][static_cast<std::size_t>(b->second)];
        auto& slot_ba = g.edge_of_pair_[static_cast<std::size_t>(b->second)][static_cast<std::size_t>(a->second)];
        if (slot_ab != -1) {
            throw ConfigError("duplicate channel between '" + edge.from + "' and '" + edge.to + "'");
        }
        slot_ab = slot_ba = static_cast<int>(e);
        g.directed_.push_back({a->second, b->second});
        g.directed_.push_back({b->second, a->second});
    }
    for (int i = 0; i < n; ++i) {
        if (g.nodes_[static_cast<std::size_t>(i)].self_channel) {
            g.directed_.push_back({i, i});
        }
    }

    // Isolated pieces cannot synchronize against each other.
    if (n > 1) {
        std::vector<int> component(static_cast<std::size_t>(n), -1);
        std::vector<int> stack{0};
        component[0] = 0;
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            for (int w = 0; w < n; ++w) {
                if (component[static_cast<std::size_t>(w)] == -1 &&
                    g.edge_of_pair_[static_cast<std::size_t>(v)][static_cast<std::size_t>(w)] != -1) {
                    component[static_cast<std::size_t>(w)] = 0;
                    stack.push_back(w);
                }
            }
        }
        for (int v = 0; v < n; ++v) {
            if (component[static_cast<std::size_t>(v)] == -1) {
                throw ConnectivityError("node '" + g.nodes_[static_cast<std::size_t>(v)].id +
                                        "' has no channel path to node '" +
                                        g.nodes_[0].id + "'");
            }
        }
    }
    return g;
}

NetworkGraph NetworkGraph::from_branches(std::vector<Node> nodes, std::vector<Branch> branches) {
    NetworkGraph g;
    g.nodes_ = std::move(nodes);
    g.validate_nodes();
    for (const Node& n : g.nodes_) {
        if (n.self_channel) {
            throw ConfigError("node '" + n.id +
                              "': explicit self-channels cannot be combined with branch networks "
                              "(the reduction already produces the diagonal)");
        }
    }
    std::vector<std::pair<std::string, NodeKind>> active;
    active.reserve(g.nodes_.size());
    for (const Node& n : g.nodes_) active.emplace_back(n.id, n.kind);
    g.reduced_ = std::make_shared<ReducedBranchNetwork>(std::move(branches), std::move(active));

    const int n = g.size();
    for (int to = 0; to < n; ++to) {
        for (int from = 0; from < n; ++from) {
            g.directed_.push_back({to, from});
        }
    }
    return g;
}

int NetworkGraph::index_of(std::string_view id) const {
    for (int i = 0; i < size(); ++i) {
        if (nodes_[static_cast<std::size_t>(i)].id == id) return i;
    }
    throw ConfigError("unknown node id '" + std::string(id) + "'");
}

bool NetworkGraph::coupled(int m, int n) const {
    if (reduced_) return true;
    if (m == n) return nodes_.at(static_cast<std::size_t>(m)).self_channel.has_value();
    return edge_of_pair_.at(static_cast<std::size_t>(m)).at(static_cast<std::size_t>(n)) != -1;
}

const RationalChannel* NetworkGraph::channel(int m, int n) const {
    if (reduced_) return nullptr;
    if (m == n) {
        const auto& sc = nodes_.at(static_cast<std::size_t>(m)).self_channel;
        return sc ? &*sc : nullptr;
    }
    const int e = edge_of_pair_.at(static_cast<std::size_t>(m)).at(static_cast<std::size_t>(n));
    return e == -1 ? nullptr : &edges_[static_cast<std::size_t>(e)].channel;
}

Complex NetworkGraph::gain(int m, int n, Complex s) const {
    if (reduced_) return reduced_->hybrid(s)(m, n);
    const RationalChannel* ch = channel(m, n);
    return ch ? ch->evaluate(s) : Complex{0.0, 0.0};
}

Complex NetworkGraph::gain_derivative(int m, int n, Complex s) const {
    if (reduced_) return reduced_->hybrid_with_derivative(s).second(m, n);
    const RationalChannel* ch = channel(m, n);
    return ch ? ch->derivative(s) : Complex{0.0, 0.0};
}

CVec NetworkGraph::gains_from_transmitter(int n, Complex s) const {
    if (reduced_) return reduced_->hybrid(s).col(n);
    CVec col = CVec::Zero(size());
    for (int m = 0; m < size(); ++m) {
        if (const RationalChannel* ch = channel(m, n)) {
            col(m) = ch->evaluate(s);
        }
    }
    return col;
}

Equilibrium compute_equilibrium(const NetworkGraph& graph, Real omega0) {
    if (!(omega0 > 0.0) || !std::isfinite(omega0)) {
        throw ConfigError("compute_equilibrium: omega0 must be positive and finite");
    }
    const int n = graph.size();
    const Complex s0{0.0, omega0};

    Equilibrium eq;
    eq.omega0 = omega0;
    eq.angle0.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) eq.angle0.push_back(graph.node(i).equilibrium);
    eq.g0 = CMat::Zero(n, n);
    eq.gprime0 = CMat::Zero(n, n);
    eq.S0 = CMat::Zero(n, n);

    if (const ReducedBranchNetwork* red = graph.reduced()) {
        auto [G, dG] = red->hybrid_with_derivative(s0);
        eq.g0 = G;
        eq.gprime0 = dG;
    } else {
        for (int m = 0; m < n; ++m) {
            for (int t = 0; t < n; ++t) {
                if (const RationalChannel* ch = graph.channel(m, t)) {
                    try {
                        eq.g0(m, t) = ch->evaluate(s0);
                        eq.gprime0(m, t) = ch->derivative(s0);
                    } catch (const PoleProximityError& e) {
                        throw PoleProximityError("channel '" + graph.node(t).id + "' -> '" +
                                                 graph.node(m).id + "': " + e.what());
                    }
                }
            }
        }
    }

    for (int m = 0; m < n; ++m) {
        for (int t = 0; t < n; ++t) {
            if (graph.coupled(m, t)) {
                eq.S0(m, t) = complex_power(eq.angle0[static_cast<std::size_t>(t)],
                                            eq.angle0[static_cast<std::size_t>(m)]);
            }
        }
    }
    eq.Shat0_edge = eq.g0.cwiseProduct(eq.S0);
    // Accumulate per-node totals in directed-channel order — the same order
    // the simulator uses — so the configured point is a bitwise fixed point.
    eq.Shat0 = CVec::Zero(n);
    for (const auto& dir : graph.directed_channels()) {
        eq.Shat0(dir.to) += eq.Shat0_edge(dir.to, dir.from);
    }
    eq.W0 = Vec::Zero(n);
    for (int m = 0; m < n; ++m) {
        eq.W0(m) = hybrid_power(eq.Shat0(m), graph.node(m).epsilon);
    }
    return eq;
}

namespace {

Real coupling_entry(const Complex& S, const Complex& g, Real epsilon) {
    const Real mag = std::abs(S) * std::abs(g);
    if (mag == 0.0) return 0.0;
    const Real angle = epsilon - std::arg(S) - std::arg(g);
    return -mag * std::sin(angle);
}

} // namespace

Mat loaded_channel_matrix(const Equilibrium& eq, std::span<const Node> nodes) {
    const int n = static_cast<int>(nodes.size());
    if (eq.S0.rows() != n) {
        throw ConfigError("loaded_channel_matrix: equilibrium and node list disagree on size");
    }
    Mat K = Mat::Zero(n, n);
    for (int m = 0; m < n; ++m) {
        Real row_sum = 0.0;
        for (int t = 0; t < n; ++t) {
            if (t == m) continue;
            const Real k = coupling_entry(eq.S0(m, t), eq.g0(m, t),
                                          nodes[static_cast<std::size_t>(m)].epsilon);
            K(m, t) = k;
            row_sum += k;
        }
        K(m, m) = -row_sum;
    }
    return K;
}

Mat frequency_shift_matrix(const Equilibrium& eq, std::span<const Node> nodes) {
    const int n = static_cast<int>(nodes.size());
    if (eq.S0.rows() != n) {
        throw ConfigError("frequency_shift_matrix: equilibrium and node list disagree on size");
    }
    Mat Gamma = Mat::Zero(n, n);
    for (int m = 0; m < n; ++m) {
        for (int t = 0; t < n; ++t) {
            Gamma(m, t) = coupling_entry(eq.S0(m, t), eq.gprime0(m, t),
                                         nodes[static_cast<std::size_t>(m)].epsilon);
        }
    }
    return Gamma;
}

SynchronizationModel modal_decomposition(const Mat& K, const Vec& H, const Mat& Gamma) {
    const int n = static_cast<int>(K.rows());
    if (K.cols() != n || Gamma.rows() != n || Gamma.cols() != n || H.size() != n) {
        throw ConfigError("modal_decomposition: dimension mismatch");
    }
    for (int i = 0; i < n; ++i) {
        if (!(H(i) > 0.0) || !std::isfinite(H(i))) {
            throw ConfigError("modal_decomposition: inertia entries must be positive");
        }
    }

    SynchronizationModel model;
    model.K = K;
    model.Gamma = Gamma;
    model.H = H;
    model.K_H = H.cwiseInverse().asDiagonal() * K;

    Eigen::EigenSolver<Mat> eig(model.K_H);
    if (eig.info() != Eigen::Success) {
        throw NearDefectiveError("modal_decomposition: eigensolver failed to converge");
    }
    const CVec values = eig.eigenvalues();
    const CMat vectors = eig.eigenvectors();

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        const Real ma = std::abs(values(a));
        const Real mb = std::abs(values(b));
        if (ma != mb) return ma < mb;
        if (values(a).imag() != values(b).imag()) return values(a).imag() < values(b).imag();
        return values(a).real() < values(b).real();
    });

    model.xi = CVec(n);
    model.Phi = CMat(n, n);
    for (int c = 0; c < n; ++c) {
        model.xi(c) = values(order[static_cast<std::size_t>(c)]);
        CVec col = vectors.col(order[static_cast<std::size_t>(c)]);
        // Deterministic scaling: unit norm, largest entry rotated real-positive.
        col.normalize();
        int pivot = 0;
        for (int r = 1; r < n; ++r) {
            if (std::abs(col(r)) > std::abs(col(pivot))) pivot = r;
        }
        if (std::abs(col(pivot)) > 0.0) {
            col *= std::conj(col(pivot)) / std::abs(col(pivot));
        }
        model.Phi.col(c) = col;
    }

    Eigen::JacobiSVD<CMat> svd(model.Phi);
    const Real smin = svd.singularValues()(n - 1);
    const Real smax = svd.singularValues()(0);
    model.phi_cond = smin > 0.0 ? smax / smin : std::numeric_limits<Real>::infinity();
    if (!(model.phi_cond <= defectiveness_guard)) {
        throw NearDefectiveError(
            "modal_decomposition: eigenvector condition number " + std::to_string(model.phi_cond) +
            " exceeds " + std::to_string(defectiveness_guard) +
            "; the coupling matrix is near-defective - perturb the operating point or inertias");
    }

    const CMat rhs = H.cwiseInverse().asDiagonal().toDenseMatrix().cast<Complex>() *
                     Gamma.cast<Complex>() * model.Phi;
    model.Gamma_H_Phi = Eigen::PartialPivLU<CMat>(model.Phi).solve(rhs);
    return model;
}

SynchronizationModel build_synchronization_model(const NetworkGraph& graph,
                                                 const Equilibrium& eq) {
    const Mat K = loaded_channel_matrix(eq, graph.nodes());
    const Mat Gamma = frequency_shift_matrix(eq, graph.nodes());
    Vec H(graph.size());
    for (int i = 0; i < graph.size(); ++i) H(i) = graph.node(i).inertia;
    return modal_decomposition(K, H, Gamma);
}

} // namespace syncscope
