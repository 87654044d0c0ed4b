#pragma once

#include <complex>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace gridse {

using Complex = std::complex<double>;
using SparseComplex = Eigen::SparseMatrix<Complex>;

enum class BusType { slack, pv, pq };

/// One bus of the network, quantities in per-unit on the system MVA base.
struct BusRecord {
    int id = 0;  // original (external) bus number
    BusType type = BusType::pq;
    double Pd = 0.0;
    double Qd = 0.0;
    double Gs = 0.0;
    double Bs = 0.0;
    double base_kv = 0.0;
};

struct GenRecord {
    int bus = 0;  // internal bus index
    double Pg = 0.0;
    double Qg = 0.0;
    double Vg = 1.0;
    bool in_service = true;
};

/// One in-service branch; endpoints are internal bus indices.
struct BranchRecord {
    int from = 0;
    int to = 0;
    double r = 0.0;
    double x = 0.0;
    double b_c = 0.0;   // total line charging susceptance
    double k_t = 1.0;   // transformer turns ratio, 1 for plain lines
    bool in_service = true;
};

struct GridCase {
    std::string name;
    double base_mva = 100.0;
    std::vector<BusRecord> buses;       // internal index = position
    std::vector<BranchRecord> branches;
    std::vector<GenRecord> gens;
    int slack = 0;  // internal index of the slack bus

    int n_buses() const { return static_cast<int>(buses.size()); }
    int n_branches() const { return static_cast<int>(branches.size()); }
};

/// Per-branch admittance quantities entering the measurement equations.
/// Mutual terms are identical for both directions; shunt terms are per side.
struct DerivedBranchParams {
    double g = 0.0;       // mutual conductance g_ij
    double b = 0.0;       // mutual susceptance b_ij
    double g_sh_from = 0.0;
    double b_sh_from = 0.0;
    double g_sh_to = 0.0;
    double b_sh_to = 0.0;

    double g_hat_from() const { return g_sh_from + g; }
    double b_hat_from() const { return b_sh_from + b; }
    double g_hat_to() const { return g_sh_to + g; }
    double b_hat_to() const { return b_sh_to + b; }
    double G() const { return -g; }
    double B() const { return -b; }
};

inline DerivedBranchParams derive_branch_params(const BranchRecord& br) {
    if (br.k_t <= 0.0) throw std::domain_error("derive_branch_params: turns ratio must be positive");
    if (br.r < 0.0) throw std::domain_error("derive_branch_params: negative series resistance");
    if (br.r == 0.0 && br.x == 0.0)
        throw std::domain_error("derive_branch_params: zero series impedance");
    const Complex y_s = 1.0 / Complex(br.r, br.x);
    const double g_s = y_s.real();
    const double b_s = y_s.imag();
    const double k = br.k_t;
    DerivedBranchParams p;
    p.g = g_s / k;
    p.b = b_s / k;
    p.g_sh_from = (1.0 - k) * g_s / (k * k);
    p.b_sh_from = (1.0 - k) * b_s / (k * k) + br.b_c / 2.0;
    // mirrored pi-model shunt on the to side
    p.g_sh_to = (k - 1.0) * g_s / k;
    p.b_sh_to = (k - 1.0) * b_s / k + br.b_c / 2.0;
    return p;
}

/// Nodal admittance matrix plus the per-branch quantities it was built from.
struct AdmittanceModel {
    GridCase grid;
    SparseComplex Y;
    std::vector<DerivedBranchParams> branch_params;  // parallel to grid.branches
    std::vector<std::vector<int>> neighbors;         // adjacent buses, sorted, self excluded

    int n_buses() const { return grid.n_buses(); }
};

inline AdmittanceModel build_admittance(const GridCase& grid) {
    const int n = grid.n_buses();
    AdmittanceModel model;
    model.grid = grid;
    model.branch_params.reserve(grid.branches.size());

    std::vector<Eigen::Triplet<Complex>> trip;
    trip.reserve(4 * grid.branches.size() + n);
    for (const auto& br : grid.branches) {
        const auto p = derive_branch_params(br);
        model.branch_params.push_back(p);
        const Complex y_mut(p.g, p.b);
        trip.emplace_back(br.from, br.from, Complex(p.g_hat_from(), p.b_hat_from()));
        trip.emplace_back(br.to, br.to, Complex(p.g_hat_to(), p.b_hat_to()));
        trip.emplace_back(br.from, br.to, -y_mut);
        trip.emplace_back(br.to, br.from, -y_mut);
    }
    for (int i = 0; i < n; ++i) {
        if (grid.buses[i].Gs != 0.0 || grid.buses[i].Bs != 0.0)
            trip.emplace_back(i, i, Complex(grid.buses[i].Gs, grid.buses[i].Bs));
    }
    model.Y.resize(n, n);
    model.Y.setFromTriplets(trip.begin(), trip.end());
    model.Y.prune([](Eigen::Index, Eigen::Index, const Complex&) { return true; });

    model.neighbors.assign(n, {});
    for (const auto& br : grid.branches) {
        model.neighbors[br.from].push_back(br.to);
        model.neighbors[br.to].push_back(br.from);
    }
    for (auto& nb : model.neighbors) {
        std::sort(nb.begin(), nb.end());
        nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    }
    return model;
}

/// Reorder buses by `perm`, where perm[new_index] = old_index.
/// Applying a permutation and its inverse restores the original case exactly.
inline GridCase renumber_buses(const GridCase& grid, const std::vector<int>& perm) {
    const int n = grid.n_buses();
    if (static_cast<int>(perm.size()) != n)
        throw std::invalid_argument("renumber_buses: permutation size mismatch");
    std::vector<int> old_to_new(n, -1);
    for (int i = 0; i < n; ++i) {
        if (perm[i] < 0 || perm[i] >= n || old_to_new[perm[i]] != -1)
            throw std::invalid_argument("renumber_buses: not a permutation");
        old_to_new[perm[i]] = i;
    }
    GridCase out = grid;
    for (int i = 0; i < n; ++i) out.buses[i] = grid.buses[perm[i]];
    for (auto& br : out.branches) {
        br.from = old_to_new[br.from];
        br.to = old_to_new[br.to];
    }
    for (auto& g : out.gens) g.bus = old_to_new[g.bus];
    out.slack = old_to_new[grid.slack];
    return out;
}

inline std::vector<int> inverse_permutation(const std::vector<int>& perm) {
    std::vector<int> inv(perm.size());
    for (size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = static_cast<int>(i);
    return inv;
}

}  // namespace gridse
