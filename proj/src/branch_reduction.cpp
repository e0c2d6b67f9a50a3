#include "syncscope/branch_reduction.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace syncscope {

namespace {

std::string format_s(Complex s) {
    std::ostringstream os;
    os << s.real() << (s.imag() < 0 ? " - " : " + ") << std::abs(s.imag()) << "j";
    return os.str();
}

// Union-find over node indices; ground (-1) is excluded so that coupling
// through the reference node alone does not count as connectivity.
struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

} // namespace

bool is_ground_id(const std::string& id) {
    return id == "0" || id == "gnd" || id == "GND" || id == "ground";
}

ReducedBranchNetwork::ReducedBranchNetwork(
    std::vector<Branch> branches, std::vector<std::pair<std::string, NodeKind>> active) {
    if (active.empty()) {
        throw ConfigError("reduce_branch_network: no active nodes");
    }
    std::unordered_map<std::string, int> index;
    std::vector<std::string> names;
    for (const auto& [id, kind] : active) {
        if (is_ground_id(id)) {
            throw ConfigError("reduce_branch_network: active node '" + id +
                              "' uses a reserved ground id");
        }
        if (!index.emplace(id, static_cast<int>(names.size())).second) {
            throw ConfigError("reduce_branch_network: duplicate active node '" + id + "'");
        }
        names.push_back(id);
        kinds_.push_back(kind);
        if (kind == NodeKind::Voltage) {
            voltage_idx_.push_back(static_cast<int>(kinds_.size()) - 1);
        } else {
            current_idx_.push_back(static_cast<int>(kinds_.size()) - 1);
        }
    }

    if (branches.empty()) {
        throw ConfigError("reduce_branch_network: no branches");
    }
    for (std::size_t b = 0; b < branches.size(); ++b) {
        const Branch& br = branches[b];
        if (!(br.resistance >= 0.0) || !(br.inductance >= 0.0) ||
            !std::isfinite(br.resistance) || !std::isfinite(br.inductance)) {
            throw ConfigError("branch " + std::to_string(b) + " ('" + br.from + "'-'" + br.to +
                              "'): R and L must be finite and non-negative");
        }
        if (br.resistance == 0.0 && br.inductance == 0.0) {
            throw ConfigError("branch " + std::to_string(b) + " ('" + br.from + "'-'" + br.to +
                              "'): zero impedance");
        }
        auto resolve = [&](const std::string& id) -> int {
            if (is_ground_id(id)) return -1;
            auto it = index.find(id);
            if (it != index.end()) return it->second;
            const int idx = static_cast<int>(names.size());
            index.emplace(id, idx);
            names.push_back(id);
            ++passive_count_;
            return idx;
        };
        const int i = resolve(br.from);
        const int j = resolve(br.to);
        if (i == j) {
            throw ConfigError("branch " + std::to_string(b) + " ('" + br.from + "'-'" + br.to +
                              "'): both endpoints are the same node");
        }
        branches_.push_back({i, j, br.resistance, br.inductance});
    }

    // All modeled (non-ground) nodes must form one branch-connected component.
    const int total = static_cast<int>(names.size());
    UnionFind uf(total);
    for (const auto& rb : branches_) {
        if (rb.i >= 0 && rb.j >= 0) uf.unite(rb.i, rb.j);
    }
    const int root = uf.find(0);
    for (int v = 1; v < total; ++v) {
        if (uf.find(v) != root) {
            throw ConnectivityError("reduce_branch_network: node '" + names[v] +
                                    "' is not branch-connected to node '" + names[0] + "'");
        }
    }
}

void ReducedBranchNetwork::assemble(Complex s, CMat& Y, CMat& dY) const {
    const int total = active_count() + passive_count_;
    Y = CMat::Zero(total, total);
    dY = CMat::Zero(total, total);
    for (const auto& rb : branches_) {
        const Complex z = rb.resistance + rb.inductance * s;
        if (std::abs(z) < 1e-12 * (1.0 + std::abs(rb.inductance * s))) {
            throw PoleProximityError("reduce_branch_network: branch impedance vanishes at s = " +
                                     format_s(s));
        }
        const Complex y = 1.0 / z;
        const Complex dy = -rb.inductance / (z * z);
        if (rb.i >= 0) { Y(rb.i, rb.i) += y; dY(rb.i, rb.i) += dy; }
        if (rb.j >= 0) { Y(rb.j, rb.j) += y; dY(rb.j, rb.j) += dy; }
        if (rb.i >= 0 && rb.j >= 0) {
            Y(rb.i, rb.j) -= y; Y(rb.j, rb.i) -= y;
            dY(rb.i, rb.j) -= dy; dY(rb.j, rb.i) -= dy;
        }
    }
}

std::pair<CMat, CMat> ReducedBranchNetwork::reduce(Complex s) const {
    CMat Y, dY;
    assemble(s, Y, dY);
    const int na = active_count();
    if (passive_count_ == 0) {
        return {Y, dY};
    }
    const int np = passive_count_;
    const CMat Yaa = Y.topLeftCorner(na, na);
    const CMat Yap = Y.topRightCorner(na, np);
    const CMat Ypa = Y.bottomLeftCorner(np, na);
    const CMat Ypp = Y.bottomRightCorner(np, np);
    const CMat dYaa = dY.topLeftCorner(na, na);
    const CMat dYap = dY.topRightCorner(na, np);
    const CMat dYpa = dY.bottomLeftCorner(np, na);
    const CMat dYpp = dY.bottomRightCorner(np, np);

    Eigen::PartialPivLU<CMat> lu(Ypp);
    if (lu.rcond() < 1e-12) {
        throw PoleProximityError(
            "reduce_branch_network: passive subnetwork resonates (singular elimination) at s = " +
            format_s(s));
    }
    const CMat X = lu.solve(Ypa);
    const CMat dX = lu.solve(dYpa - dYpp * X);
    CMat Yr = Yaa - Yap * X;
    CMat dYr = dYaa - dYap * X - Yap * dX;
    return {std::move(Yr), std::move(dYr)};
}

std::pair<CMat, CMat> ReducedBranchNetwork::hybrid_with_derivative(Complex s) const {
    auto [Yr, dYr] = reduce(s);
    const int na = active_count();
    CMat G = CMat::Zero(na, na);
    CMat dG = CMat::Zero(na, na);
    const auto& vi = voltage_idx_;
    const auto& ci = current_idx_;

    if (ci.empty()) {
        G = -Yr;
        dG = -dYr;
        return {std::move(G), std::move(dG)};
    }

    const CMat Ycc = Yr(ci, ci);
    Eigen::PartialPivLU<CMat> lu(Ycc);
    if (lu.rcond() < 1e-12) {
        throw PoleProximityError(
            "reduce_branch_network: current-node block is singular (no voltage reference) at s = " +
            format_s(s));
    }
    const CMat M = lu.solve(CMat::Identity(static_cast<int>(ci.size()), static_cast<int>(ci.size())));
    const CMat dM = -M * dYr(ci, ci) * M;

    G(ci, ci) = M;
    dG(ci, ci) = dM;

    if (!vi.empty()) {
        const CMat Yvv = Yr(vi, vi);
        const CMat Yvc = Yr(vi, ci);
        const CMat Ycv = Yr(ci, vi);
        const CMat dYvv = dYr(vi, vi);
        const CMat dYvc = dYr(vi, ci);
        const CMat dYcv = dYr(ci, vi);

        G(ci, vi) = -M * Ycv;
        dG(ci, vi) = -dM * Ycv - M * dYcv;
        G(vi, ci) = -Yvc * M;
        dG(vi, ci) = -dYvc * M - Yvc * dM;
        G(vi, vi) = -Yvv + Yvc * M * Ycv;
        dG(vi, vi) = -dYvv + dYvc * M * Ycv + Yvc * dM * Ycv + Yvc * M * dYcv;
    }
    return {std::move(G), std::move(dG)};
}

CMat ReducedBranchNetwork::hybrid(Complex s) const {
    return hybrid_with_derivative(s).first;
}

} // namespace syncscope
