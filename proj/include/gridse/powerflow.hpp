#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "gridse/measurement.hpp"

namespace gridse {

class ConvergenceError : public std::runtime_error {
  public:
    ConvergenceError(const std::string& what, double final_mismatch, int iterations)
        : std::runtime_error(what), final_mismatch(final_mismatch), iterations(iterations) {}
    double final_mismatch;
    int iterations;
};

/// Scheduled injections and voltage setpoints for a power-flow solve.
struct PowerFlowSpec {
    VectorXd P;      // net active injection per bus (generation minus load)
    VectorXd Q;      // net reactive injection per bus (used at PQ buses)
    VectorXd V_set;  // magnitude setpoints (used at slack and PV buses)
};

/// Builds the base-case injection spec from the parsed grid, with loads
/// optionally scaled per bus.
inline PowerFlowSpec make_pf_spec(const GridCase& grid, const VectorXd* load_scale = nullptr) {
    const int n = grid.n_buses();
    PowerFlowSpec spec;
    spec.P = VectorXd::Zero(n);
    spec.Q = VectorXd::Zero(n);
    spec.V_set = VectorXd::Ones(n);
    for (int i = 0; i < n; ++i) {
        const double sc = load_scale ? (*load_scale)[i] : 1.0;
        spec.P[i] -= sc * grid.buses[i].Pd;
        spec.Q[i] -= sc * grid.buses[i].Qd;
    }
    for (const auto& g : grid.gens) {
        if (!g.in_service) continue;
        spec.P[g.bus] += g.Pg;
        spec.Q[g.bus] += g.Qg;
        spec.V_set[g.bus] = g.Vg;
    }
    return spec;
}

struct PowerFlowOptions {
    double tol = 1e-8;  // max absolute P/Q mismatch, per-unit
    int max_iter = 50;
};

/// Full Newton-Raphson AC power flow in polar coordinates, flat start.
/// Returns the state with the slack angle at zero.
inline StateVector solve_power_flow(const AdmittanceModel& model, const PowerFlowSpec& spec,
                                    const PowerFlowOptions& opt = {}) {
    const int n = model.n_buses();
    const auto& buses = model.grid.buses;
    const int slack = model.grid.slack;

    std::vector<int> ang_idx;  // buses with free angle (PV + PQ)
    std::vector<int> mag_idx;  // buses with free magnitude (PQ)
    for (int i = 0; i < n; ++i) {
        if (i == slack) continue;
        ang_idx.push_back(i);
        if (buses[i].type == BusType::pq) mag_idx.push_back(i);
    }
    const int na = static_cast<int>(ang_idx.size());
    const int nm = static_cast<int>(mag_idx.size());

    StateVector state;
    state.V = VectorXd::Ones(n);
    state.theta = VectorXd::Zero(n);
    state.V[slack] = spec.V_set[slack];
    for (int i = 0; i < n; ++i)
        if (buses[i].type == BusType::pv) state.V[i] = spec.V_set[i];

    double max_mismatch = 0.0;
    for (int iter = 0; iter < opt.max_iter; ++iter) {
        const Eigen::VectorXcd S = bus_injections(model, state);
        VectorXd mis(na + nm);
        for (int k = 0; k < na; ++k) mis[k] = spec.P[ang_idx[k]] - S[ang_idx[k]].real();
        for (int k = 0; k < nm; ++k) mis[na + k] = spec.Q[mag_idx[k]] - S[mag_idx[k]].imag();
        max_mismatch = mis.size() ? mis.cwiseAbs().maxCoeff() : 0.0;
        if (max_mismatch < opt.tol) return state;

        // Jacobian of the scheduled mismatches w.r.t. (theta, V) at free buses,
        // assembled from the injection measurement Jacobian rows.
        std::vector<MeasurementMeta> rows;
        rows.reserve(na + nm);
        for (int k = 0; k < na; ++k) rows.push_back({MeasKind::pinj, ang_idx[k], -1, -1, 1.0, false});
        for (int k = 0; k < nm; ++k) rows.push_back({MeasKind::qinj, mag_idx[k], -1, -1, 1.0, false});
        const MatrixXd Jfull = measurement_jacobian(model, state, rows);
        MatrixXd J(na + nm, na + nm);
        for (int c = 0; c < na; ++c) J.col(c) = Jfull.col(ang_idx[c]);
        for (int c = 0; c < nm; ++c) J.col(na + c) = Jfull.col(n + mag_idx[c]);

        const VectorXd step = J.partialPivLu().solve(mis);
        if (!step.allFinite())
            throw ConvergenceError("power flow: singular Jacobian", max_mismatch, iter);
        for (int k = 0; k < na; ++k) state.theta[ang_idx[k]] += step[k];
        for (int k = 0; k < nm; ++k) state.V[mag_idx[k]] += step[na + k];
        if ((state.V.array() <= 0.0).any())
            throw ConvergenceError("power flow: voltage collapsed below zero", max_mismatch, iter);
    }
    throw ConvergenceError("power flow: no convergence after " + std::to_string(opt.max_iter) +
                               " iterations, max mismatch " + std::to_string(max_mismatch),
                           max_mismatch, opt.max_iter);
}

}  // namespace gridse
