#pragma once

#include <functional>
#include <map>
#include <numbers>
#include <numeric>
#include <utility>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "gridse/conic.hpp"
#include "gridse/measurement.hpp"

namespace gridse {

class EstimationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Weighted least-absolute-value objective sum |z - h| / sigma.
inline double wlav_objective(const VectorXd& z, const VectorXd& h, const VectorXd& sigma) {
    if (z.size() != h.size() || z.size() != sigma.size())
        throw std::invalid_argument("wlav_objective: size mismatch");
    if ((sigma.array() <= 0.0).any())
        throw std::invalid_argument("wlav_objective: sigma must be positive");
    return ((z - h).cwiseAbs().cwiseQuotient(sigma)).sum();
}

/// Placement of the stored entries of the Hermitian matrix variable: one
/// real slot per bus for X_ii, then (Re, Im) slots per stored bus pair.
struct SparsityMap {
    int n_buses = 0;
    std::vector<std::pair<int, int>> pairs;        // ordered (i < j)
    std::map<std::pair<int, int>, int> pair_index;

    int n_pairs() const { return static_cast<int>(pairs.size()); }
    int x_dim() const { return n_buses + 2 * n_pairs(); }
    int diag_slot(int bus) const { return bus; }
    int re_slot(int pair) const { return n_buses + 2 * pair; }
    int im_slot(int pair) const { return n_buses + 2 * pair + 1; }

    /// Slots for the directed entry X_ij; `im_sign` is -1 when (i, j) is the
    /// conjugate of the stored orientation.
    struct DirectedSlot {
        int re, im;
        double im_sign;
    };
    DirectedSlot directed(int i, int j) const {
        const bool flip = i > j;
        auto it = pair_index.find(flip ? std::make_pair(j, i) : std::make_pair(i, j));
        if (it == pair_index.end())
            throw EstimationError("sparsity map holds no entry for bus pair (" +
                                  std::to_string(i) + ", " + std::to_string(j) + ")");
        return {re_slot(it->second), im_slot(it->second), flip ? -1.0 : 1.0};
    }
};

/// Pairs connected by the network (sparsified) or, when `dense`, all pairs.
inline SparsityMap build_sparsity_map(const AdmittanceModel& model, bool dense = false) {
    SparsityMap map;
    map.n_buses = model.n_buses();
    if (dense) {
        for (int i = 0; i < map.n_buses; ++i)
            for (int j = i + 1; j < map.n_buses; ++j) map.pairs.emplace_back(i, j);
    } else {
        for (int i = 0; i < map.n_buses; ++i)
            for (int j : model.neighbors[i])
                if (j > i) map.pairs.emplace_back(i, j);
        std::sort(map.pairs.begin(), map.pairs.end());
    }
    for (int k = 0; k < map.n_pairs(); ++k) map.pair_index[map.pairs[k]] = k;
    return map;
}

/// Total active power loss Re(sum Y_ij^* X_ij) over the stored entries of X.
inline double power_loss(const AdmittanceModel& model, const SparsityMap& map,
                         const VectorXd& x_entries) {
    double loss = 0.0;
    for (int i = 0; i < map.n_buses; ++i)
        loss += model.Y.coeff(i, i).real() * x_entries[map.diag_slot(i)];
    for (int k = 0; k < map.n_pairs(); ++k) {
        const auto [i, j] = map.pairs[k];
        const Complex Xij(x_entries[map.re_slot(k)], x_entries[map.im_slot(k)]);
        loss += (std::conj(model.Y.coeff(i, j)) * Xij).real();
        loss += (std::conj(model.Y.coeff(j, i)) * std::conj(Xij)).real();
    }
    return loss;
}

/// The relaxed estimation problem in conic form. Primal variables are the
/// stored X entries, then one residual and one epigraph variable per
/// measurement; equality rows carry the linearized measurement equations,
/// nonnegative rows the absolute-value epigraph, and one 4-dimensional
/// second-order cone block per stored pair ties the 2x2 principal minor.
struct RelaxedProblem {
    ConicProgram prog;
    SparsityMap map;
    std::vector<MeasurementMeta> metas;
    std::vector<int> meas_rows;     // measurement -> equality row
    std::vector<int> weight_slots;  // measurement -> position in c of its epigraph variable
    double rho_r = 1.0;

    int n_meas() const { return static_cast<int>(metas.size()); }
    int eps_slot(int m) const { return map.x_dim() + m; }
    int u_slot(int m) const { return map.x_dim() + n_meas() + m; }
};

/// Rewrites the measurement right-hand sides for a new sample; voltage
/// magnitude readings enter squared.
inline void set_measurements(RelaxedProblem& rp, const VectorXd& z) {
    if (z.size() != rp.n_meas()) throw std::invalid_argument("set_measurements: size mismatch");
    for (int m = 0; m < rp.n_meas(); ++m) {
        const double zm = z[m];
        rp.prog.b[rp.meas_rows[m]] = rp.metas[m].kind == MeasKind::vmag ? zm * zm : zm;
    }
}

/// Installs per-measurement objective weights (rho_r * w_m on the epigraphs).
inline void set_weights(RelaxedProblem& rp, const VectorXd& w) {
    if (w.size() != rp.n_meas()) throw std::invalid_argument("set_weights: size mismatch");
    if ((w.array() <= 0.0).any()) throw std::invalid_argument("set_weights: weights must be positive");
    for (int m = 0; m < rp.n_meas(); ++m) rp.prog.c[rp.weight_slots[m]] = rp.rho_r * w[m];
}

struct RelaxOptions {
    bool dense = false;  // keep every bus pair instead of the network pattern
};

inline RelaxedProblem build_relaxed(const AdmittanceModel& model,
                                    std::vector<MeasurementMeta> metas, const VectorXd& z,
                                    const VectorXd& weights, double rho_r = 1.0,
                                    const RelaxOptions& opt = {}) {
    RelaxedProblem rp;
    rp.map = build_sparsity_map(model, opt.dense);
    rp.metas = std::move(metas);
    rp.rho_r = rho_r;
    const int M = rp.n_meas();
    const int n = model.n_buses();
    const Eigen::Index p = rp.map.x_dim() + 2 * M;
    const Eigen::Index d_zero = M;
    const Eigen::Index d_nonneg = 2 * M;
    const Eigen::Index d_soc = 4 * rp.map.n_pairs();

    rp.prog.cones.zero_dim = d_zero;
    rp.prog.cones.nonneg_dim = d_nonneg;
    rp.prog.cones.soc_dims.assign(rp.map.n_pairs(), 4);
    rp.prog.b = VectorXd::Zero(d_zero + d_nonneg + d_soc);
    rp.prog.c = VectorXd::Zero(p);

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(16 * M);
    rp.meas_rows.resize(M);
    rp.weight_slots.resize(M);

    for (int m = 0; m < M; ++m) {
        const auto& meta = rp.metas[m];
        const int row = m;
        rp.meas_rows[m] = row;
        rp.weight_slots[m] = rp.u_slot(m);
        trip.emplace_back(row, rp.eps_slot(m), 1.0);
        switch (meta.kind) {
            case MeasKind::vmag:
                trip.emplace_back(row, rp.map.diag_slot(meta.bus), 1.0);
                break;
            case MeasKind::pflow: {
                const auto sp = detail::side_params(model, meta);
                const auto sl = rp.map.directed(meta.bus, meta.other);
                trip.emplace_back(row, rp.map.diag_slot(meta.bus), sp.g_hat);
                trip.emplace_back(row, sl.re, -sp.g);
                trip.emplace_back(row, sl.im, -sp.b * sl.im_sign);
                break;
            }
            case MeasKind::qflow: {
                const auto sp = detail::side_params(model, meta);
                const auto sl = rp.map.directed(meta.bus, meta.other);
                trip.emplace_back(row, rp.map.diag_slot(meta.bus), -sp.b_hat);
                trip.emplace_back(row, sl.re, sp.b);
                trip.emplace_back(row, sl.im, -sp.g * sl.im_sign);
                break;
            }
            case MeasKind::pinj:
            case MeasKind::qinj: {
                const int i = meta.bus;
                for (SparseComplex::InnerIterator it(model.Y, i); it; ++it) {
                    const int j = static_cast<int>(it.row());
                    const double G = it.value().real();
                    const double B = it.value().imag();
                    if (j == i) {
                        trip.emplace_back(row, rp.map.diag_slot(i),
                                          meta.kind == MeasKind::pinj ? G : -B);
                        continue;
                    }
                    const auto sl = rp.map.directed(i, j);
                    if (meta.kind == MeasKind::pinj) {
                        trip.emplace_back(row, sl.re, G);
                        trip.emplace_back(row, sl.im, B * sl.im_sign);
                    } else {
                        trip.emplace_back(row, sl.re, -B);
                        trip.emplace_back(row, sl.im, G * sl.im_sign);
                    }
                }
                break;
            }
        }
    }

    // |eps| <= u as two nonnegative rows per measurement
    for (int m = 0; m < M; ++m) {
        trip.emplace_back(d_zero + 2 * m, rp.eps_slot(m), 1.0);
        trip.emplace_back(d_zero + 2 * m, rp.u_slot(m), -1.0);
        trip.emplace_back(d_zero + 2 * m + 1, rp.eps_slot(m), -1.0);
        trip.emplace_back(d_zero + 2 * m + 1, rp.u_slot(m), -1.0);
    }

    // per-pair principal-minor cone: ||(2 Re X, 2 Im X, X_ii - X_jj)|| <= X_ii + X_jj
    for (int k = 0; k < rp.map.n_pairs(); ++k) {
        const auto [i, j] = rp.map.pairs[k];
        const Eigen::Index base = d_zero + d_nonneg + 4 * k;
        trip.emplace_back(base, rp.map.diag_slot(i), -1.0);
        trip.emplace_back(base, rp.map.diag_slot(j), -1.0);
        trip.emplace_back(base + 1, rp.map.re_slot(k), -2.0);
        trip.emplace_back(base + 2, rp.map.im_slot(k), -2.0);
        trip.emplace_back(base + 3, rp.map.diag_slot(i), -1.0);
        trip.emplace_back(base + 3, rp.map.diag_slot(j), 1.0);
    }

    rp.prog.A.resize(d_zero + d_nonneg + d_soc, p);
    rp.prog.A.setFromTriplets(trip.begin(), trip.end());

    // objective: weighted epigraphs plus the power-loss regularizer
    for (int i = 0; i < n; ++i) rp.prog.c[rp.map.diag_slot(i)] += model.Y.coeff(i, i).real();
    for (int k = 0; k < rp.map.n_pairs(); ++k) {
        const auto [i, j] = rp.map.pairs[k];
        rp.prog.c[rp.map.re_slot(k)] += 2.0 * model.Y.coeff(i, j).real();
    }
    set_weights(rp, weights);
    set_measurements(rp, z);
    rp.prog.validate();
    return rp;
}

// ---------------------------------------------------------------------------
// Solution recovery

struct RecoveredState {
    StateVector state;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double exactness_ratio = 0.0;  // lambda2 / lambda1
};

inline Eigen::MatrixXcd assemble_hermitian(const SparsityMap& map, const VectorXd& x_entries) {
    Eigen::MatrixXcd X = Eigen::MatrixXcd::Zero(map.n_buses, map.n_buses);
    for (int i = 0; i < map.n_buses; ++i) X(i, i) = x_entries[map.diag_slot(i)];
    for (int k = 0; k < map.n_pairs(); ++k) {
        const auto [i, j] = map.pairs[k];
        const Complex v(x_entries[map.re_slot(k)], x_entries[map.im_slot(k)]);
        X(i, j) = v;
        X(j, i) = std::conj(v);
    }
    return X;
}

/// Extracts the dominant eigenpair of the assembled X and reads the state
/// off sqrt(lambda) u, rotated so the slack-bus angle is zero.
inline RecoveredState recover_state(const SparsityMap& map, const VectorXd& x_entries,
                                    int slack_bus) {
    const Eigen::MatrixXcd X = assemble_hermitian(map, x_entries);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(X);
    const int n = map.n_buses;
    RecoveredState rec;
    rec.lambda1 = eig.eigenvalues()[n - 1];
    rec.lambda2 = n > 1 ? eig.eigenvalues()[n - 2] : 0.0;
    if (rec.lambda1 <= 0.0)
        throw EstimationError("recovery failed: leading eigenvalue is not positive");
    rec.exactness_ratio = rec.lambda2 / rec.lambda1;
    Eigen::VectorXcd v = std::sqrt(rec.lambda1) * eig.eigenvectors().col(n - 1);
    const Complex ref = v[slack_bus];
    if (std::abs(ref) > 0.0) v *= std::conj(ref) / std::abs(ref);
    rec.state.V = v.cwiseAbs();
    rec.state.theta.resize(n);
    for (int i = 0; i < n; ++i) rec.state.theta[i] = std::arg(v[i]);
    rec.state.theta[slack_bus] = 0.0;
    return rec;
}

struct WlavEstimate {
    ConicSolution solution;
    RecoveredState recovered;
    double objective = 0.0;
    double residual_l1 = 0.0;
    double loss_value = 0.0;  // power loss at the solution
};

inline WlavEstimate estimate_wlav(const AdmittanceModel& model, const RelaxedProblem& rp,
                                  ConicSolver& solver) {
    WlavEstimate est;
    est.solution = solver.solve(rp.prog);
    if (est.solution.status != SolveStatus::optimal)
        throw EstimationError(std::string("relaxed estimation not optimal: ") +
                              to_string(est.solution.status));
    est.recovered = recover_state(rp.map, est.solution.x, model.grid.slack);
    est.objective = rp.prog.c.dot(est.solution.x);
    for (int m = 0; m < rp.n_meas(); ++m) est.residual_l1 += std::abs(est.solution.x[rp.eps_slot(m)]);
    est.loss_value = power_loss(model, rp.map, est.solution.x);
    return est;
}

inline nlohmann::json estimate_to_json(const WlavEstimate& est) {
    nlohmann::json j;
    j["V"] = std::vector<double>(est.recovered.state.V.begin(), est.recovered.state.V.end());
    j["theta"] =
        std::vector<double>(est.recovered.state.theta.begin(), est.recovered.state.theta.end());
    j["lambda_ratio"] = est.recovered.exactness_ratio;
    j["objective"] = est.objective;
    j["residual_l1"] = est.residual_l1;
    j["power_loss"] = est.loss_value;
    return j;
}

// ---------------------------------------------------------------------------
// Gauss-Newton weighted least squares baseline

struct WlsOptions {
    double grad_tol = 1e-8;
    int max_iter = 50;
    int max_halvings = 30;
};

inline StateVector estimate_wls(const AdmittanceModel& model, const VectorXd& z,
                                std::span<const MeasurementMeta> metas,
                                const StateVector* init = nullptr, const WlsOptions& opt = {}) {
    const int n = model.n_buses();
    const int slack = model.grid.slack;
    StateVector state;
    if (init) {
        state = *init;
    } else {
        state.V = VectorXd::Ones(n);
        state.theta = VectorXd::Zero(n);
    }
    VectorXd inv_sigma(metas.size());
    for (size_t m = 0; m < metas.size(); ++m) {
        if (metas[m].sigma <= 0.0) throw std::invalid_argument("estimate_wls: sigma must be positive");
        inv_sigma[m] = 1.0 / metas[m].sigma;
    }

    std::vector<int> cols;  // free columns: all theta except slack, then all V
    for (int i = 0; i < n; ++i)
        if (i != slack) cols.push_back(i);
    for (int i = 0; i < n; ++i) cols.push_back(n + i);

    auto cost = [&](const StateVector& st) {
        const VectorXd r = (z - eval_measurements(model, st, metas)).cwiseProduct(inv_sigma);
        return 0.5 * r.squaredNorm();
    };

    double f = cost(state);
    for (int iter = 0; iter < opt.max_iter; ++iter) {
        const VectorXd r = (z - eval_measurements(model, state, metas)).cwiseProduct(inv_sigma);
        const MatrixXd Jfull = measurement_jacobian(model, state, metas);
        MatrixXd J(static_cast<Eigen::Index>(metas.size()), cols.size());
        for (size_t c = 0; c < cols.size(); ++c)
            J.col(c) = Jfull.col(cols[c]).cwiseProduct(inv_sigma);
        const VectorXd grad = J.transpose() * r;
        if (grad.lpNorm<Eigen::Infinity>() < opt.grad_tol) return state;

        VectorXd step = J.colPivHouseholderQr().solve(r);
        double scale = 1.0;
        for (int h = 0; h <= opt.max_halvings; ++h) {
            StateVector trial = state;
            for (size_t c = 0; c < cols.size(); ++c) {
                const int col = cols[c];
                if (col < n)
                    trial.theta[col] += scale * step[c];
                else
                    trial.V[col - n] += scale * step[c];
            }
            if ((trial.V.array() > 0.0).all()) {
                const double ft = cost(trial);
                if (ft <= f) {
                    state = trial;
                    f = ft;
                    break;
                }
            }
            if (h == opt.max_halvings)
                throw ConvergenceError("WLS: line search failed, gradient norm " +
                                           std::to_string(grad.lpNorm<Eigen::Infinity>()),
                                       grad.lpNorm<Eigen::Infinity>(), iter);
            scale *= 0.5;
        }
    }
    throw ConvergenceError("WLS: no convergence after " + std::to_string(opt.max_iter) +
                               " iterations",
                           0.0, opt.max_iter);
}

// ---------------------------------------------------------------------------
// Relaxation-exactness conditions

struct ExactnessReport {
    bool vmag_complete = false;        // voltage magnitude metered at every bus
    bool flow_spanning_tree = false;   // P-flow metered branches connect the grid
    bool angles_in_range = false;      // every branch angle difference inside (-90, 90) deg
    double worst_angle_deg = 0.0;

    bool all_pass() const { return vmag_complete && flow_spanning_tree && angles_in_range; }
};

inline ExactnessReport check_exactness(const AdmittanceModel& model,
                                       std::span<const MeasurementMeta> metas,
                                       const StateVector& state) {
    const int n = model.n_buses();
    ExactnessReport rep;

    std::vector<bool> vmag(n, false);
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    };
    for (const auto& m : metas) {
        if (m.kind == MeasKind::vmag) vmag[m.bus] = true;
        if (m.kind == MeasKind::pflow) parent[find(m.bus)] = find(m.other);
    }
    rep.vmag_complete = std::all_of(vmag.begin(), vmag.end(), [](bool b) { return b; });
    rep.flow_spanning_tree = true;
    for (int i = 1; i < n && rep.flow_spanning_tree; ++i)
        rep.flow_spanning_tree = find(i) == find(0);

    rep.angles_in_range = true;
    for (const auto& br : model.grid.branches) {
        const double deg =
            std::abs(state.theta[br.from] - state.theta[br.to]) * 180.0 / std::numbers::pi;
        rep.worst_angle_deg = std::max(rep.worst_angle_deg, deg);
        if (deg >= 90.0) rep.angles_in_range = false;
    }
    return rep;
}

}  // namespace gridse
