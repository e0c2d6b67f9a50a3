#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>
#include <string>
#include <vector>

#include "syncscope/network.hpp"
#include "syncscope/phase_locking.hpp"

using namespace syncscope;

namespace {

Node make_node(std::string id, NodeKind kind = NodeKind::Voltage, Real angle = 0.0,
               Real ln_amp = 0.0, Real inertia = 1.0, Real damping = 0.0) {
    Node n;
    n.id = std::move(id);
    n.kind = kind;
    n.inertia = inertia;
    n.damping = damping;
    n.epsilon = default_epsilon(kind);
    n.equilibrium = {ln_amp, angle};
    return n;
}

RationalChannel simple_channel(Complex pole, Complex residue) {
    return RationalChannel({FirstOrderFactor{pole, residue}});
}

// First-principles hybrid-parameter solve used as an oracle: assemble the
// full (unreduced) nodal admittance matrix, impose the transmitted quantity
// of one active node at a time, solve for every unknown potential, and read
// off the received quantities.  No Schur complement, no partitioned algebra.
struct OracleBranch {
    int i; // -1 = ground
    int j;
    Real resistance;
    Real inductance;
};

CMat oracle_hybrid(int n_total, const std::vector<OracleBranch>& branches,
                   const std::vector<NodeKind>& kinds, Complex s) {
    const int na = static_cast<int>(kinds.size());
    CMat Y = CMat::Zero(n_total, n_total);
    for (const auto& b : branches) {
        const Complex y = 1.0 / (b.resistance + s * b.inductance);
        if (b.i >= 0) Y(b.i, b.i) += y;
        if (b.j >= 0) Y(b.j, b.j) += y;
        if (b.i >= 0 && b.j >= 0) {
            Y(b.i, b.j) -= y;
            Y(b.j, b.i) -= y;
        }
    }

    std::vector<int> unknown; // current-kind actives, then every passive node
    for (int i = 0; i < na; ++i) {
        if (kinds[static_cast<std::size_t>(i)] == NodeKind::Current) unknown.push_back(i);
    }
    for (int i = na; i < n_total; ++i) unknown.push_back(i);

    CMat G = CMat::Zero(na, na);
    for (int t = 0; t < na; ++t) {
        CVec volt = CVec::Zero(n_total);   // imposed voltages (voltage actives)
        CVec inject = CVec::Zero(n_total); // imposed injections (current actives)
        if (kinds[static_cast<std::size_t>(t)] == NodeKind::Voltage) {
            volt(t) = 1.0;
        } else {
            inject(t) = 1.0;
        }

        // Solve KCL at every node with an unknown potential.
        const auto nu = static_cast<Eigen::Index>(unknown.size());
        CMat A(nu, nu);
        CVec rhs(nu);
        for (Eigen::Index r = 0; r < nu; ++r) {
            const int row = unknown[static_cast<std::size_t>(r)];
            Complex acc = inject(row);
            for (int c = 0; c < n_total; ++c) acc -= Y(row, c) * volt(c);
            rhs(r) = acc;
            for (Eigen::Index c = 0; c < nu; ++c) {
                A(r, c) = Y(row, unknown[static_cast<std::size_t>(c)]);
            }
        }
        const CVec x = A.partialPivLu().solve(rhs);

        CVec potential = volt;
        for (Eigen::Index r = 0; r < nu; ++r) {
            potential(unknown[static_cast<std::size_t>(r)]) = x(r);
        }
        for (int m = 0; m < na; ++m) {
            if (kinds[static_cast<std::size_t>(m)] == NodeKind::Voltage) {
                G(m, t) = -(Y.row(m) * potential)(0); // current into the apparatus
            } else {
                G(m, t) = potential(m); // voltage seen by the apparatus
            }
        }
    }
    return G;
}

} // namespace

// ---------------------------------------------------------------------------
// Hybrid parameters of branch networks
// ---------------------------------------------------------------------------

TEST_CASE("a single inductor between two voltage nodes transfers 1/s") {
    const std::vector<Branch> branches{{"g1", "g2", 0.0, 1.0}};
    const std::vector<std::pair<std::string, NodeKind>> active{
        {"g1", NodeKind::Voltage}, {"g2", NodeKind::Voltage}};
    const ReducedBranchNetwork red(branches, active);
    CHECK(red.active_count() == 2);
    CHECK(red.passive_count() == 0);

    const CMat G1 = red.hybrid({0.0, 1.0});
    CHECK(std::abs(G1(0, 1) - Complex(0.0, -1.0)) < 1e-14);
    CHECK(std::abs(G1(1, 0) - Complex(0.0, -1.0)) < 1e-14);
    CHECK(std::abs(G1(0, 0) - Complex(0.0, 1.0)) < 1e-14);

    const CMat G2 = red.hybrid({2.0, 0.0});
    CHECK(std::abs(G2(0, 1) - Complex(0.5, 0.0)) < 1e-14);
}

TEST_CASE("a directly connected voltage/current pair has unit cross gain") {
    const std::vector<Branch> branches{{"v", "c", 1.0, 0.5}};
    const std::vector<std::pair<std::string, NodeKind>> active{
        {"v", NodeKind::Voltage}, {"c", NodeKind::Current}};
    const ReducedBranchNetwork red(branches, active);

    const Complex s{0.0, 3.0};
    const Complex y = 1.0 / (1.0 + s * 0.5);
    const CMat G = red.hybrid(s);
    // The transmitted voltage reappears at the current node and vice versa;
    // the voltage node sees no net current, the current node sees 1/y.
    CHECK(std::abs(G(0, 0)) < 1e-14);
    CHECK(std::abs(G(0, 1) - Complex(1.0, 0.0)) < 1e-14);
    CHECK(std::abs(G(1, 0) - Complex(1.0, 0.0)) < 1e-14);
    CHECK(std::abs(G(1, 1) - 1.0 / y) < 1e-13);
}

TEST_CASE("eliminating the centre of a star matches the analytic reduction") {
    const std::vector<Branch> branches{
        {"a", "p", 1.0, 0.5}, {"b", "p", 1.0, 0.5}, {"c", "p", 1.0, 0.5}};
    const std::vector<std::pair<std::string, NodeKind>> active{
        {"a", NodeKind::Voltage}, {"b", NodeKind::Voltage}, {"c", NodeKind::Voltage}};
    const ReducedBranchNetwork red(branches, active);
    CHECK(red.passive_count() == 1);

    const Complex s{0.0, 3.0};
    const Complex y = 1.0 / (1.0 + s * 0.5);
    const CMat G = red.hybrid(s);
    for (int m = 0; m < 3; ++m) {
        for (int t = 0; t < 3; ++t) {
            const Complex want = (m == t) ? -2.0 * y / 3.0 : y / 3.0;
            CHECK(std::abs(G(m, t) - want) <= 1e-12 * std::abs(y));
        }
    }
}

TEST_CASE("random reductions agree with a first-principles nodal solve") {
    std::mt19937 rng(20240817u);
    std::uniform_real_distribution<Real> r_dist(0.05, 2.0);
    std::uniform_real_distribution<Real> l_dist(0.01, 1.5);
    std::uniform_real_distribution<Real> unit(0.0, 1.0);

    for (int topo = 0; topo < 10; ++topo) {
        const int na = 2 + static_cast<int>(rng() % 5u); // 2..6 active
        const int np = static_cast<int>(rng() % 7u);     // 0..6 passive
        const int n = na + np;

        std::vector<NodeKind> kinds;
        std::vector<std::pair<std::string, NodeKind>> active;
        for (int i = 0; i < na; ++i) {
            const NodeKind k = unit(rng) < 0.5 ? NodeKind::Voltage : NodeKind::Current;
            kinds.push_back(k);
            active.emplace_back("n" + std::to_string(i), k);
        }
        auto id_of = [&](int i) { return "n" + std::to_string(i); };

        std::vector<OracleBranch> ob;
        std::vector<Branch> branches;
        auto add = [&](int i, int j) {
            const Real r = r_dist(rng);
            const Real l = l_dist(rng);
            ob.push_back({i, j, r, l});
            branches.push_back({i < 0 ? "gnd" : id_of(i), j < 0 ? "gnd" : id_of(j), r, l});
        };
        // Spanning tree over all modeled nodes keeps the graph connected.
        for (int i = 1; i < n; ++i) {
            add(i, static_cast<int>(rng() % static_cast<unsigned>(i)));
        }
        for (int e = 0; e < na; ++e) { // extra meshing
            const int i = static_cast<int>(rng() % static_cast<unsigned>(n));
            const int j = static_cast<int>(rng() % static_cast<unsigned>(n));
            if (i != j) add(i, j);
        }
        if (unit(rng) < 0.5) { // occasionally tie one node to ground
            add(static_cast<int>(rng() % static_cast<unsigned>(n)), -1);
        }

        const ReducedBranchNetwork red(branches, active);
        REQUIRE(red.active_count() == na);
        REQUIRE(red.passive_count() == np);

        for (int f = 0; f < 20; ++f) {
            const Real w = 0.1 * std::pow(1e5, static_cast<Real>(f) / 19.0);
            const Complex s{0.0, w};
            const CMat got = red.hybrid(s);
            const CMat want = oracle_hybrid(n, ob, kinds, s);
            const Real scale = std::max<Real>(want.cwiseAbs().maxCoeff(), 1.0);
            CHECK((got - want).cwiseAbs().maxCoeff() <= 1e-10 * scale);
            // Reciprocal branch networks reduce to symmetric hybrid matrices.
            CHECK((got - got.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale);
        }

        // The analytic s-derivative tracks a finite difference.
        const Complex s0{0.3, 2.0};
        const auto [G0, dG0] = red.hybrid_with_derivative(s0);
        const Real h = 1e-5;
        const CMat fd = (red.hybrid(s0 + h) - red.hybrid(s0 - h)) / (2.0 * h);
        const Real dscale = std::max<Real>(fd.cwiseAbs().maxCoeff(), 1e-12);
        CHECK((dG0 - fd).cwiseAbs().maxCoeff() <= 1e-6 * dscale);
        CHECK((G0 - red.hybrid(s0)).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("branch network validation") {
    using Active = std::vector<std::pair<std::string, NodeKind>>;
    // R and L must not both vanish.
    CHECK_THROWS_AS(ReducedBranchNetwork({{"a", "b", 0.0, 0.0}},
                                         Active{{"a", NodeKind::Voltage},
                                                {"b", NodeKind::Voltage}}),
                    ConfigError);
    // Negative parameters are rejected.
    CHECK_THROWS_AS(ReducedBranchNetwork({{"a", "b", -1.0, 0.0}},
                                         Active{{"a", NodeKind::Voltage},
                                                {"b", NodeKind::Voltage}}),
                    ConfigError);
    // Two active islands cannot synchronize: the reduction refuses them.
    CHECK_THROWS_AS(ReducedBranchNetwork({{"a", "b", 1.0, 0.0}, {"c", "d", 1.0, 0.0}},
                                         Active{{"a", NodeKind::Voltage},
                                                {"b", NodeKind::Voltage},
                                                {"c", NodeKind::Voltage},
                                                {"d", NodeKind::Voltage}}),
                    ConnectivityError);
    // Ground does not connect components.
    CHECK_THROWS_AS(ReducedBranchNetwork({{"a", "gnd", 1.0, 0.0}, {"b", "gnd", 1.0, 0.0}},
                                         Active{{"a", NodeKind::Voltage},
                                                {"b", NodeKind::Voltage}}),
                    ConnectivityError);
    CHECK(is_ground_id("0"));
    CHECK(is_ground_id("gnd"));
    CHECK(is_ground_id("GND"));
    CHECK(is_ground_id("ground"));
    CHECK(!is_ground_id("g1"));
}

// ---------------------------------------------------------------------------
// Graph assembly and equilibrium
// ---------------------------------------------------------------------------

TEST_CASE("explicit graphs expose channels symmetrically") {
    std::vector<Node> nodes{make_node("g1", NodeKind::Voltage, 0.1),
                            make_node("g2", NodeKind::Voltage, 0.0)};
    std::vector<ExplicitEdge> edges;
    edges.push_back({"g1", "g2", simple_channel({-5.0, 0.0}, {10.0, 0.0})});
    const auto graph = NetworkGraph::from_channels(nodes, edges);

    CHECK(graph.size() == 2);
    CHECK(graph.factored());
    CHECK(graph.index_of("g2") == 1);
    CHECK(graph.coupled(0, 1));
    CHECK(graph.coupled(1, 0));
    CHECK(!graph.coupled(0, 0));
    REQUIRE(graph.channel(0, 1) != nullptr);
    CHECK(graph.channel(0, 1) == graph.channel(1, 0)); // shared transfer function

    const Complex s{0.0, 2.0};
    CHECK(graph.gain(0, 1, s) == graph.channel(0, 1)->evaluate(s));
    CHECK(graph.gain(0, 0, s) == Complex(0.0, 0.0)); // uncoupled
    const CVec col = graph.gains_from_transmitter(1, s);
    CHECK(col(0) == graph.gain(0, 1, s));
    CHECK(col(1) == graph.gain(1, 1, s));
}

TEST_CASE("the equilibrium records gains, powers, and setpoints coherently") {
    std::vector<Node> nodes{make_node("g1", NodeKind::Voltage, 0.25, 0.1),
                            make_node("g2", NodeKind::Current, -0.15, -0.2)};
    std::vector<ExplicitEdge> edges;
    edges.push_back({"g1", "g2", simple_channel({-5.0, 2.0}, {10.0, -1.0})});
    const auto graph = NetworkGraph::from_channels(nodes, edges);

    const Real w0 = default_omega0;
    const Equilibrium eq = compute_equilibrium(graph, w0);
    CHECK(eq.omega0 == w0);
    REQUIRE(eq.angle0.size() == 2);
    CHECK(eq.angle0[0].angle == 0.25);
    CHECK(eq.angle0[1].ln_amplitude == -0.2);

    const Complex g01 = graph.channel(0, 1)->evaluate({0.0, w0});
    CHECK(eq.g0(0, 1) == g01);
    CHECK(eq.g0(1, 0) == g01); // reciprocity at the operating point
    CHECK(eq.g0(0, 0) == Complex(0.0, 0.0));

    const Complex s01 = complex_power(eq.angle0[1], eq.angle0[0]);
    CHECK(eq.S0(0, 1) == s01);
    CHECK(eq.Shat0_edge(0, 1) == g01 * s01);
    CHECK(eq.Shat0(0) == eq.Shat0_edge(0, 1)); // single incoming channel
    CHECK(eq.W0(0) == hybrid_power(eq.Shat0(0), nodes[0].epsilon));
    CHECK(eq.W0(1) == hybrid_power(eq.Shat0(1), nodes[1].epsilon));
}

TEST_CASE("graph construction rejects malformed inputs") {
    auto ch = [&] { return simple_channel({-1.0, 0.0}, {1.0, 0.0}); };
    using Edges = std::vector<ExplicitEdge>;

    // Duplicate node ids.
    CHECK_THROWS_AS(NetworkGraph::from_channels({make_node("a"), make_node("a")}, {}),
                    ConfigError);
    // Edge endpoints must be declared nodes.
    CHECK_THROWS_AS(NetworkGraph::from_channels({make_node("a"), make_node("b")},
                                                Edges{{"a", "zz", ch()}}),
                    ConfigError);
    // Loop edges are not channels.
    CHECK_THROWS_AS(NetworkGraph::from_channels({make_node("a"), make_node("b")},
                                                Edges{{"a", "a", ch()}}),
                    ConfigError);
    // One channel per unordered pair.
    CHECK_THROWS_AS(NetworkGraph::from_channels({make_node("a"), make_node("b")},
                                                Edges{{"a", "b", ch()}, {"b", "a", ch()}}),
                    ConfigError);
    // Disconnected graphs cannot synchronize.
    CHECK_THROWS_AS(NetworkGraph::from_channels(
                        {make_node("a"), make_node("b"), make_node("c"), make_node("d")},
                        Edges{{"a", "b", ch()}, {"c", "d", ch()}}),
                    ConnectivityError);
    // Node parameter ranges.
    {
        Node bad = make_node("a");
        bad.inertia = 0.0;
        CHECK_THROWS_AS(NetworkGraph::from_channels({bad}, {}), ConfigError);
    }
    {
        Node bad = make_node("a");
        bad.damping = -0.5;
        CHECK_THROWS_AS(NetworkGraph::from_channels({bad}, {}), ConfigError);
    }
    {
        Node bad = make_node("a");
        bad.epsilon = -0.1;
        CHECK_THROWS_AS(NetworkGraph::from_channels({bad}, {}), ConfigError);
    }
    // Self-channels are incompatible with the branch form (the reduction
    // already produces every self term).
    {
        Node s = make_node("a");
        s.self_channel = simple_channel({-1.0, 0.0}, {1.0, 0.0});
        CHECK_THROWS_AS(NetworkGraph::from_branches({s, make_node("b")},
                                                    {{"a", "b", 1.0, 0.0}}),
                        ConfigError);
    }
}

TEST_CASE("branch-form graphs answer gain queries through the reduction") {
    std::vector<Node> nodes{make_node("g1", NodeKind::Voltage, 0.1),
                            make_node("g2", NodeKind::Voltage, 0.0)};
    const auto graph = NetworkGraph::from_branches(nodes, {{"g1", "g2", 0.1, 1e-3}});
    CHECK(!graph.factored());
    CHECK(graph.channel(0, 1) == nullptr);
    CHECK(graph.coupled(0, 0)); // reduction produces self terms

    const Complex s{0.0, 50.0};
    const CMat G = graph.reduced()->hybrid(s);
    CHECK(graph.gain(0, 1, s) == G(0, 1));
    CHECK(graph.gain(1, 1, s) == G(1, 1));
    const auto [G2, dG] = graph.reduced()->hybrid_with_derivative(s);
    CHECK(graph.gain_derivative(0, 1, s) == dG(0, 1));
    const CVec col = graph.gains_from_transmitter(0, s);
    CHECK(col(1) == G(1, 0));
}

// ---------------------------------------------------------------------------
// Coupling matrices
// ---------------------------------------------------------------------------

TEST_CASE("angle coupling with a quarter-turn loop phase is unit strength") {
    // Mock operating point: |S| = |g| = 1 and eps - arg S - arg g = pi/2.
    const std::vector<Node> nodes{make_node("a"), make_node("b")};
    Equilibrium eq;
    eq.angle0 = {{0.0, 0.0}, {0.0, 0.0}};
    eq.S0 = CMat::Zero(2, 2);
    eq.g0 = CMat::Zero(2, 2);
    eq.S0(0, 1) = eq.S0(1, 0) = Complex(1.0, 0.0);
    eq.g0(0, 1) = eq.g0(1, 0) = Complex(0.0, -1.0); // arg g = -pi/2

    const Mat K = loaded_channel_matrix(eq, nodes);
    CHECK(K(0, 1) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(K(1, 0) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(K(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(K(1, 1) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("zero power flow produces zero angle coupling") {
    const std::vector<Node> nodes{make_node("a"), make_node("b")};
    Equilibrium eq;
    eq.angle0 = {{0.0, 0.0}, {0.0, 0.0}};
    eq.S0 = CMat::Zero(2, 2);
    eq.g0 = CMat::Zero(2, 2);
    const Mat K = loaded_channel_matrix(eq, nodes);
    CHECK(K.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("coupling rows sum to zero: a uniform angle shift is neutral") {
    std::mt19937 rng(7u);
    std::uniform_real_distribution<Real> angle(-0.7, 0.7);
    std::uniform_real_distribution<Real> lnamp(-0.5, 0.5);
    std::uniform_real_distribution<Real> unit(0.0, 1.0);

    for (int trial = 0; trial < 25; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 5u);
        std::vector<Node> nodes;
        for (int i = 0; i < n; ++i) {
            Node nd = make_node("n" + std::to_string(i),
                                unit(rng) < 0.3 ? NodeKind::Current : NodeKind::Voltage,
                                angle(rng), lnamp(rng));
            if (unit(rng) < 0.3) nd.epsilon = 2.0 * pi * unit(rng);
            nodes.push_back(nd);
        }
        std::vector<ExplicitEdge> edges;
        for (int i = 1; i < n; ++i) {
            const int j = static_cast<int>(rng() % static_cast<unsigned>(i));
            edges.push_back({nodes[static_cast<std::size_t>(i)].id,
                             nodes[static_cast<std::size_t>(j)].id,
                             simple_channel({-1.0 - 4.0 * unit(rng), 3.0 * angle(rng)},
                                            {5.0 + 10.0 * unit(rng), 2.0 * angle(rng)})});
        }
        const auto graph = NetworkGraph::from_channels(nodes, edges);
        const Equilibrium eq = compute_equilibrium(graph, default_omega0);
        const Mat K = loaded_channel_matrix(eq, graph.nodes());

        const Real scale = std::max<Real>(K.cwiseAbs().maxCoeff(), 1.0);
        for (int m = 0; m < n; ++m) {
            CHECK(std::abs(K.row(m).sum()) <= 1e-12 * scale);
        }
    }
}

TEST_CASE("frequency coupling through 1/(s+1) at unit carrier is +1/2") {
    std::vector<Node> nodes{make_node("a"), make_node("b")};
    std::vector<ExplicitEdge> edges;
    edges.push_back({"a", "b", simple_channel({-1.0, 0.0}, {1.0, 0.0})});
    const auto graph = NetworkGraph::from_channels(nodes, edges);
    const Equilibrium eq = compute_equilibrium(graph, 1.0);

    // dG/ds at s = j is j/2: magnitude 1/2, phase pi/2, so the loaded entry
    // -|S||G'| sin(0 - 0 - pi/2) comes out at +1/2.
    const Mat Gamma = frequency_shift_matrix(eq, graph.nodes());
    CHECK(Gamma(0, 1) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(Gamma(1, 0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(Gamma(0, 0) == 0.0); // no self-channel
    CHECK(Gamma(1, 1) == 0.0);

    // And the angle coupling of the same point: G(j) = (1-j)/2, so
    // K_ab = -|S||G| sin(pi/4) = -1/2.
    const Mat K = loaded_channel_matrix(eq, graph.nodes());
    CHECK(K(0, 1) == doctest::Approx(-0.5).epsilon(1e-14));
    CHECK(K(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("coupling strengths scale linearly with the channel residue") {
    auto build = [&](Real scale) {
        std::vector<Node> nodes{make_node("a", NodeKind::Voltage, 0.2),
                                make_node("b", NodeKind::Voltage, -0.1)};
        std::vector<ExplicitEdge> edges;
        edges.push_back({"a", "b", simple_channel({-2.0, 1.0}, {scale * 3.0, scale * 1.0})});
        const auto graph = NetworkGraph::from_channels(nodes, edges);
        const Equilibrium eq = compute_equilibrium(graph, 10.0);
        return std::pair{loaded_channel_matrix(eq, graph.nodes()),
                         frequency_shift_matrix(eq, graph.nodes())};
    };
    const auto [K1, G1] = build(1.0);
    const auto [K3, G3] = build(3.0);
    CHECK((K3 - 3.0 * K1).cwiseAbs().maxCoeff() <= 1e-12 * K3.cwiseAbs().maxCoeff());
    CHECK((G3 - 3.0 * G1).cwiseAbs().maxCoeff() <= 1e-12 * G3.cwiseAbs().maxCoeff());
}

TEST_CASE("self-channels feed the frequency-coupling diagonal only") {
    std::vector<Node> nodes{make_node("a", NodeKind::Voltage, 0.0, 0.3),
                            make_node("b", NodeKind::Voltage, 0.1)};
    std::vector<ExplicitEdge> edges;
    edges.push_back({"a", "b", simple_channel({-1.0, 0.0}, {1.0, 0.0})});

    const auto plain = NetworkGraph::from_channels(nodes, edges);
    nodes[0].self_channel = simple_channel({-2.0, 0.0}, {1.5, 0.0});
    const auto with_self = NetworkGraph::from_channels(nodes, edges);

    const Real w0 = 1.0;
    const Equilibrium eq_plain = compute_equilibrium(plain, w0);
    const Equilibrium eq_self = compute_equilibrium(with_self, w0);

    const Mat K_plain = loaded_channel_matrix(eq_plain, plain.nodes());
    const Mat K_self = loaded_channel_matrix(eq_self, with_self.nodes());
    // The angle-coupling row-sum rule ignores the diagonal self term.
    CHECK((K_plain - K_self).cwiseAbs().maxCoeff() < 1e-15);

    const Mat G_self = frequency_shift_matrix(eq_self, with_self.nodes());
    const Complex gp = with_self.node(0).self_channel->derivative({0.0, w0});
    const Real a2 = std::exp(2.0 * 0.3); // |S_aa| = A^2
    const Real want = -a2 * std::abs(gp) * std::sin(0.0 - 0.0 - std::arg(gp));
    CHECK(G_self(0, 0) == doctest::Approx(want).epsilon(1e-13));
    CHECK(frequency_shift_matrix(eq_plain, plain.nodes())(0, 0) == 0.0);
}

// ---------------------------------------------------------------------------
// Modal decomposition
// ---------------------------------------------------------------------------

TEST_CASE("a symmetric two-node coupling splits into rigid and swing modes") {
    const Real k = 0.7;
    Mat K(2, 2);
    K << k, -k, -k, k;
    const Vec H = Vec::Ones(2);
    const Mat Gamma = Mat::Zero(2, 2);

    const auto model = modal_decomposition(K, H, Gamma);
    REQUIRE(model.xi.size() == 2);
    CHECK(std::abs(model.xi(0)) < 1e-14);                    // rigid mode first
    CHECK(std::abs(model.xi(1) - Complex(2.0 * k, 0.0)) < 1e-12);

    const Real r = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(model.Phi(0, 0) - Complex(r, 0.0)) < 1e-10);
    CHECK(std::abs(model.Phi(1, 0) - Complex(r, 0.0)) < 1e-10);
    CHECK(std::abs(model.Phi(0, 1) - Complex(r, 0.0)) < 1e-10);
    CHECK(std::abs(model.Phi(1, 1) - Complex(-r, 0.0)) < 1e-10);
    CHECK(model.phi_cond == doctest::Approx(1.0).epsilon(1e-10));

    // Unequal inertias shift the swing eigenvalue to k/H1 + k/H2.
    Vec H2(2);
    H2 << 2.0, 1.0;
    const auto model2 = modal_decomposition(K, H2, Gamma);
    CHECK(std::abs(model2.xi(1) - Complex(1.5 * k, 0.0)) < 1e-12);
}

TEST_CASE("eigen pairs satisfy the defining residual") {
    std::mt19937 rng(99u);
    std::uniform_real_distribution<Real> val(0.1, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 5u);
        Mat K = Mat::Zero(n, n);
        for (int m = 0; m < n; ++m) {
            for (int t = 0; t < n; ++t) {
                if (t != m) K(m, t) = -val(rng);
            }
            K(m, m) = -K.row(m).sum();
        }
        Vec H(n);
        for (int i = 0; i < n; ++i) H(i) = val(rng);
        Mat Gamma = Mat::Zero(n, n);
        for (int m = 0; m < n; ++m) {
            for (int t = 0; t < n; ++t) Gamma(m, t) = 0.2 * val(rng);
        }

        const auto model = modal_decomposition(K, H, Gamma);
        const CMat resid = model.K_H.cast<Complex>() * model.Phi -
                           model.Phi * model.xi.asDiagonal().toDenseMatrix();
        const Real scale = std::max<Real>(model.K_H.cwiseAbs().maxCoeff(), 1.0);
        CHECK(resid.cwiseAbs().maxCoeff() <= 1e-10 * scale);

        // Columns are unit length and the rigid mode is present.
        for (int c = 0; c < n; ++c) {
            CHECK(model.Phi.col(c).norm() == doctest::Approx(1.0).epsilon(1e-12));
        }
        CHECK(std::abs(model.xi(0)) <= 1e-10 * scale);

        // Gamma_H_Phi solves Phi * X = H^{-1} Gamma Phi.
        const CMat lhs = model.Phi * model.Gamma_H_Phi;
        const CMat rhs = (H.cwiseInverse().asDiagonal() * Gamma).cast<Complex>() * model.Phi;
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-10 * std::max<Real>(1.0, rhs.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("a defective coupling matrix is rejected, not silently diagonalized") {
    Mat K(2, 2);
    K << 1.0, 1.0, 0.0, 1.0; // Jordan block
    CHECK_THROWS_AS((void)modal_decomposition(K, Vec::Ones(2), Mat::Zero(2, 2)),
                    NearDefectiveError);
}

TEST_CASE("modal decomposition validates shapes and inertias") {
    const Mat K = Mat::Zero(2, 2);
    CHECK_THROWS_AS((void)modal_decomposition(K, Vec::Ones(3), Mat::Zero(2, 2)), ConfigError);
    CHECK_THROWS_AS((void)modal_decomposition(K, Vec::Ones(2), Mat::Zero(3, 3)), ConfigError);
    Vec H(2);
    H << 1.0, 0.0;
    CHECK_THROWS_AS((void)modal_decomposition(K, H, Mat::Zero(2, 2)), ConfigError);
}

TEST_CASE("the convenience builder matches manual assembly") {
    std::vector<Node> nodes{make_node("a", NodeKind::Voltage, 0.15, 0.0, 2.0, 0.3),
                            make_node("b", NodeKind::Voltage, 0.0, 0.1, 1.0, 0.4)};
    std::vector<ExplicitEdge> edges;
    edges.push_back({"a", "b", simple_channel({-5.0, 0.0}, {10.0, 0.0})});
    const auto graph = NetworkGraph::from_channels(nodes, edges);
    const Equilibrium eq = compute_equilibrium(graph, default_omega0);

    const auto model = build_synchronization_model(graph, eq);
    CHECK((model.K - loaded_channel_matrix(eq, graph.nodes())).cwiseAbs().maxCoeff() == 0.0);
    CHECK((model.Gamma - frequency_shift_matrix(eq, graph.nodes())).cwiseAbs().maxCoeff() == 0.0);
    CHECK(model.H(0) == 2.0);
    CHECK(model.H(1) == 1.0);
}
