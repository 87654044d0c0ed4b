#pragma once

#include "gridse/learn.hpp"

namespace gridse::learn {

/// Small three-bus chain used for end-to-end derivative verification.
inline GridCase toy3_case() {
    GridCase grid;
    grid.name = "toy3";
    grid.base_mva = 100.0;
    grid.buses = {
        {1, BusType::slack, 0.0, 0.0, 0.0, 0.0, 115.0},
        {2, BusType::pq, 0.30, 0.10, 0.0, 0.0, 115.0},
        {3, BusType::pq, 0.25, 0.08, 0.0, 0.0, 115.0},
    };
    grid.branches = {
        {0, 1, 0.02, 0.10, 0.02, 1.0, true},
        {1, 2, 0.025, 0.09, 0.016, 1.0, true},
    };
    grid.gens = {{0, 0.0, 0.0, 1.0, true}};
    grid.slack = 0;
    return grid;
}

/// Measurement set for the toy system: all magnitudes plus a spanning set of
/// active flows, five readings in total.
inline std::vector<MeasurementMeta> toy3_measurements(double sigma) {
    return {
        {MeasKind::vmag, 0, -1, -1, sigma, false},
        {MeasKind::vmag, 1, -1, -1, sigma, false},
        {MeasKind::vmag, 2, -1, -1, sigma, false},
        {MeasKind::pflow, 0, 1, 0, sigma, false},
        {MeasKind::pflow, 1, 2, 1, sigma, false},
    };
}

inline MeasurementSample toy3_sample(const AdmittanceModel& model, double sigma,
                                     std::uint64_t seed) {
    MeasurementSample sample;
    sample.true_state = solve_power_flow(model, make_pf_spec(model.grid));
    sample.meta = toy3_measurements(sigma);
    sample.z_clean = eval_measurements(model, sample.true_state, sample.meta);
    sample.z = sample.z_clean;
    std::mt19937_64 rng(detail::splitmix64(seed ^ 0x703eULL));
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (Eigen::Index m = 0; m < sample.z.size(); ++m) sample.z[m] += sigma * gauss(rng);
    return sample;
}

struct GradCheckReport {
    int n_params = 0;
    double max_rel_err = 0.0;
    int worst_param = -1;
    VectorXd analytic;
    VectorXd finite_diff;
};

/// Central-difference check of every learnable parameter (measurement
/// weights and dense layers) through the full forward pass, resolves
/// included.
inline GradCheckReport run_gradient_check(std::uint64_t seed = 7, double step = 1e-4,
                                          double solver_tol = 1e-11) {
    const GridCase grid = toy3_case();
    const AdmittanceModel model = build_admittance(grid);
    const MeasurementSample sample = toy3_sample(model, 1e-3, seed);

    TrainConfig cfg;
    cfg.seed = seed;
    cfg.rho = 1.0;
    cfg.solver_tol = solver_tol;
    OptLayerModel m(model, sample.meta, cfg);

    ForwardResult fr = m.forward(sample);
    if (!fr.ok) throw TrainingError("gradient check: forward solve failed");
    GradCheckReport rep;
    rep.analytic = m.backward(fr, sample);
    rep.n_params = static_cast<int>(rep.analytic.size());
    rep.finite_diff.resize(rep.n_params);

    VectorXd flat = flatten(m.params());
    auto loss_at = [&](const VectorXd& v) {
        unflatten(v, m.params());
        ForwardResult f = m.forward(sample);
        if (!f.ok) throw TrainingError("gradient check: perturbed solve failed");
        return f.losses.hybrid;
    };
    for (int k = 0; k < rep.n_params; ++k) {
        VectorXd v = flat;
        v[k] = flat[k] + step;
        const double up = loss_at(v);
        v[k] = flat[k] - step;
        const double dn = loss_at(v);
        rep.finite_diff[k] = (up - dn) / (2.0 * step);
    }
    unflatten(flat, m.params());

    const double gmax = std::max(rep.analytic.cwiseAbs().maxCoeff(),
                                 rep.finite_diff.cwiseAbs().maxCoeff());
    for (int k = 0; k < rep.n_params; ++k) {
        const double denom = std::max({std::abs(rep.analytic[k]), std::abs(rep.finite_diff[k]),
                                       1e-4 * gmax});
        const double err = std::abs(rep.analytic[k] - rep.finite_diff[k]) / denom;
        if (err > rep.max_rel_err) {
            rep.max_rel_err = err;
            rep.worst_param = k;
        }
    }
    return rep;
}

}  // namespace gridse::learn
