#pragma once

// Test-only power flow oracle: plain Gauss-Seidel sweeps on the complex
// voltage vector, independent of the Newton-Raphson implementation.

#include <complex>

#include "gridse/powerflow.hpp"

namespace gridse::testing {

inline StateVector gauss_seidel_power_flow(const AdmittanceModel& model,
                                           const PowerFlowSpec& spec, double tol = 1e-12,
                                           int max_iter = 200000) {
    const int n = model.n_buses();
    const int slack = model.grid.slack;
    Eigen::VectorXcd V = Eigen::VectorXcd::Ones(n);
    V[slack] = spec.V_set[slack];
    for (int i = 0; i < n; ++i)
        if (model.grid.buses[i].type == BusType::pv) V[i] = spec.V_set[i];

    for (int iter = 0; iter < max_iter; ++iter) {
        double max_delta = 0.0;
        for (int i = 0; i < n; ++i) {
            if (i == slack) continue;
            Complex sum(0, 0);
            for (SparseComplex::InnerIterator it(model.Y, i); it; ++it) {
                const int j = static_cast<int>(it.row());
                if (j != i) sum += it.value() * V[j];
            }
            const Complex Yii = model.Y.coeff(i, i);
            Complex S(spec.P[i], spec.Q[i]);
            if (model.grid.buses[i].type == BusType::pv) {
                // reactive power follows from the current balance at a PV bus
                const Complex I = sum + Yii * V[i];
                S = Complex(spec.P[i], (V[i] * std::conj(I)).imag());
            }
            Complex Vnew = (std::conj(S / V[i]) - sum) / Yii;
            if (model.grid.buses[i].type == BusType::pv)
                Vnew *= spec.V_set[i] / std::abs(Vnew);
            max_delta = std::max(max_delta, std::abs(Vnew - V[i]));
            V[i] = Vnew;
        }
        if (max_delta < tol) break;
    }
    StateVector st;
    st.V.resize(n);
    st.theta.resize(n);
    for (int i = 0; i < n; ++i) {
        st.V[i] = std::abs(V[i]);
        st.theta[i] = std::arg(V[i]);
    }
    const double ref = st.theta[slack];
    for (int i = 0; i < n; ++i) st.theta[i] -= ref;
    return st;
}

}  // namespace gridse::testing
