#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridse/grid.hpp"

namespace gridse {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Bus voltage state in polar form.
struct StateVector {
    VectorXd V;      // magnitudes, per-unit
    VectorXd theta;  // angles, radians

    int size() const { return static_cast<int>(V.size()); }
};

enum class MeasKind { vmag, pflow, qflow, pinj, qinj };

inline const char* to_string(MeasKind k) {
    switch (k) {
        case MeasKind::vmag: return "Vmag";
        case MeasKind::pflow: return "Pflow";
        case MeasKind::qflow: return "Qflow";
        case MeasKind::pinj: return "Pinj";
        case MeasKind::qinj: return "Qinj";
    }
    return "?";
}

inline MeasKind meas_kind_from_string(const std::string& s) {
    if (s == "Vmag") return MeasKind::vmag;
    if (s == "Pflow") return MeasKind::pflow;
    if (s == "Qflow") return MeasKind::qflow;
    if (s == "Pinj") return MeasKind::pinj;
    if (s == "Qinj") return MeasKind::qinj;
    throw std::invalid_argument("unknown measurement kind: " + s);
}

/// Where and how one measurement was taken. For flows, `bus` is the metered
/// side of branch `branch` and `other` the far end; for bus quantities
/// `other` and `branch` are -1.
struct MeasurementMeta {
    MeasKind kind = MeasKind::vmag;
    int bus = 0;
    int other = -1;
    int branch = -1;
    double sigma = 1.0;
    bool is_outlier = false;
};

/// The complete measurement set: every bus voltage magnitude, both-end active
/// and reactive flows on every branch, and every bus P/Q injection.
inline std::vector<MeasurementMeta> full_measurement_set(const AdmittanceModel& model,
                                                         double sigma) {
    const int n = model.n_buses();
    std::vector<MeasurementMeta> metas;
    metas.reserve(3 * n + 4 * model.grid.n_branches());
    for (int i = 0; i < n; ++i) metas.push_back({MeasKind::vmag, i, -1, -1, sigma, false});
    for (int b = 0; b < model.grid.n_branches(); ++b) {
        const auto& br = model.grid.branches[b];
        metas.push_back({MeasKind::pflow, br.from, br.to, b, sigma, false});
        metas.push_back({MeasKind::pflow, br.to, br.from, b, sigma, false});
        metas.push_back({MeasKind::qflow, br.from, br.to, b, sigma, false});
        metas.push_back({MeasKind::qflow, br.to, br.from, b, sigma, false});
    }
    for (int i = 0; i < n; ++i) metas.push_back({MeasKind::pinj, i, -1, -1, sigma, false});
    for (int i = 0; i < n; ++i) metas.push_back({MeasKind::qinj, i, -1, -1, sigma, false});
    return metas;
}

namespace detail {

/// Branch-side admittance view: series and shunt-augmented terms seen from
/// the metered side.
struct SideParams {
    double g, b, g_hat, b_hat;
};

inline SideParams side_params(const AdmittanceModel& model, const MeasurementMeta& m) {
    if (m.branch < 0 || m.branch >= static_cast<int>(model.branch_params.size()))
        throw std::invalid_argument("measurement references unknown branch");
    const auto& br = model.grid.branches[m.branch];
    const auto& p = model.branch_params[m.branch];
    if (m.bus == br.from && m.other == br.to)
        return {p.g, p.b, p.g_hat_from(), p.b_hat_from()};
    if (m.bus == br.to && m.other == br.from)
        return {p.g, p.b, p.g_hat_to(), p.b_hat_to()};
    throw std::invalid_argument("measurement endpoints do not match branch");
}

}  // namespace detail

/// Evaluates the nonlinear measurement functions h(state).
inline VectorXd eval_measurements(const AdmittanceModel& model, const StateVector& state,
                                  std::span<const MeasurementMeta> metas) {
    const int n = model.n_buses();
    VectorXd h(static_cast<Eigen::Index>(metas.size()));
    for (size_t m = 0; m < metas.size(); ++m) {
        const auto& meta = metas[m];
        if (meta.bus < 0 || meta.bus >= n)
            throw std::invalid_argument("measurement references unknown bus");
        const double Vi = state.V[meta.bus];
        switch (meta.kind) {
            case MeasKind::vmag:
                h[m] = Vi;
                break;
            case MeasKind::pflow: {
                const auto sp = detail::side_params(model, meta);
                const double Vj = state.V[meta.other];
                const double th = state.theta[meta.bus] - state.theta[meta.other];
                h[m] = Vi * Vi * sp.g_hat - Vi * Vj * sp.g * std::cos(th) -
                       Vi * Vj * sp.b * std::sin(th);
                break;
            }
            case MeasKind::qflow: {
                const auto sp = detail::side_params(model, meta);
                const double Vj = state.V[meta.other];
                const double th = state.theta[meta.bus] - state.theta[meta.other];
                h[m] = -Vi * Vi * sp.b_hat + Vi * Vj * sp.b * std::cos(th) -
                       Vi * Vj * sp.g * std::sin(th);
                break;
            }
            case MeasKind::pinj:
            case MeasKind::qinj: {
                double acc = 0.0;
                for (SparseComplex::InnerIterator it(model.Y, meta.bus); it; ++it) {
                    // Y is value-symmetric for this branch model, so iterating
                    // the column yields the row entries Y_ij
                    const int j = static_cast<int>(it.row());
                    const double G = it.value().real();
                    const double B = it.value().imag();
                    const double th = state.theta[meta.bus] - state.theta[j];
                    if (meta.kind == MeasKind::pinj)
                        acc += state.V[j] * (G * std::cos(th) + B * std::sin(th));
                    else
                        acc += state.V[j] * (G * std::sin(th) - B * std::cos(th));
                }
                h[m] = Vi * acc;
                break;
            }
        }
    }
    return h;
}

/// Jacobian of h with respect to (theta_0..theta_{n-1}, V_0..V_{n-1}).
inline MatrixXd measurement_jacobian(const AdmittanceModel& model, const StateVector& state,
                                     std::span<const MeasurementMeta> metas) {
    const int n = model.n_buses();
    MatrixXd J = MatrixXd::Zero(static_cast<Eigen::Index>(metas.size()), 2 * n);
    for (size_t m = 0; m < metas.size(); ++m) {
        const auto& meta = metas[m];
        const int i = meta.bus;
        const double Vi = state.V[i];
        switch (meta.kind) {
            case MeasKind::vmag:
                J(m, n + i) = 1.0;
                break;
            case MeasKind::pflow: {
                const auto sp = detail::side_params(model, meta);
                const int j = meta.other;
                const double Vj = state.V[j];
                const double th = state.theta[i] - state.theta[j];
                const double c = std::cos(th), s = std::sin(th);
                J(m, i) = Vi * Vj * (sp.g * s - sp.b * c);
                J(m, j) = -J(m, i);
                J(m, n + i) = 2.0 * Vi * sp.g_hat - Vj * (sp.g * c + sp.b * s);
                J(m, n + j) = -Vi * (sp.g * c + sp.b * s);
                break;
            }
            case MeasKind::qflow: {
                const auto sp = detail::side_params(model, meta);
                const int j = meta.other;
                const double Vj = state.V[j];
                const double th = state.theta[i] - state.theta[j];
                const double c = std::cos(th), s = std::sin(th);
                J(m, i) = -Vi * Vj * (sp.b * s + sp.g * c);
                J(m, j) = -J(m, i);
                J(m, n + i) = -2.0 * Vi * sp.b_hat + Vj * (sp.b * c - sp.g * s);
                J(m, n + j) = Vi * (sp.b * c - sp.g * s);
                break;
            }
            case MeasKind::pinj:
            case MeasKind::qinj: {
                double P = 0.0, Q = 0.0;
                double Gii = 0.0, Bii = 0.0;
                for (SparseComplex::InnerIterator it(model.Y, i); it; ++it) {
                    const int j = static_cast<int>(it.row());
                    const double G = it.value().real();
                    const double B = it.value().imag();
                    const double th = state.theta[i] - state.theta[j];
                    const double c = std::cos(th), s = std::sin(th);
                    P += Vi * state.V[j] * (G * c + B * s);
                    Q += Vi * state.V[j] * (G * s - B * c);
                    if (j == i) {
                        Gii = G;
                        Bii = B;
                        continue;
                    }
                    if (meta.kind == MeasKind::pinj) {
                        J(m, j) = Vi * state.V[j] * (G * s - B * c);
                        J(m, n + j) = Vi * (G * c + B * s);
                    } else {
                        J(m, j) = -Vi * state.V[j] * (G * c + B * s);
                        J(m, n + j) = Vi * (G * s - B * c);
                    }
                }
                if (meta.kind == MeasKind::pinj) {
                    J(m, i) = -Q - Bii * Vi * Vi;
                    J(m, n + i) = P / Vi + Gii * Vi;
                } else {
                    J(m, i) = P - Gii * Vi * Vi;
                    J(m, n + i) = Q / Vi - Bii * Vi;
                }
                break;
            }
        }
    }
    return J;
}

/// Complex bus injections S = V .* conj(Y V) at a state.
inline Eigen::VectorXcd bus_injections(const AdmittanceModel& model, const StateVector& state) {
    const int n = model.n_buses();
    Eigen::VectorXcd v(n);
    for (int i = 0; i < n; ++i) v[i] = std::polar(state.V[i], state.theta[i]);
    Eigen::VectorXcd current = model.Y * v;
    return v.cwiseProduct(current.conjugate());
}

}  // namespace gridse
