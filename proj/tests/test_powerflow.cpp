#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "gridse/cases.hpp"
#include "gridse/powerflow.hpp"
#include "support/gauss_seidel.hpp"

using namespace gridse;
using Catch::Matchers::WithinAbs;

TEST_CASE("zero loads and shunts give the flat state") {
    GridCase grid;
    grid.base_mva = 100.0;
    grid.buses = {{1, BusType::slack, 0, 0, 0, 0, 115.0},
                  {2, BusType::pq, 0, 0, 0, 0, 115.0},
                  {3, BusType::pq, 0, 0, 0, 0, 115.0}};
    grid.branches = {{0, 1, 0.01, 0.1, 0.0, 1.0, true}, {1, 2, 0.02, 0.09, 0.0, 1.0, true}};
    grid.gens = {{0, 0, 0, 1.0, true}};
    grid.slack = 0;
    const auto model = build_admittance(grid);
    const auto st = solve_power_flow(model, make_pf_spec(grid));
    for (int i = 0; i < 3; ++i) {
        CHECK_THAT(st.V[i], WithinAbs(1.0, 1e-12));
        CHECK_THAT(st.theta[i], WithinAbs(0.0, 1e-12));
    }
}

TEST_CASE("IEEE-9 matches the Gauss-Seidel oracle") {
    const auto model = build_admittance(cases::load_bundled("ieee9"));
    const auto spec = make_pf_spec(model.grid);
    const auto nr = solve_power_flow(model, spec);
    const auto gs = testing::gauss_seidel_power_flow(model, spec);
    for (int i = 0; i < model.n_buses(); ++i) {
        CHECK_THAT(nr.V[i], WithinAbs(gs.V[i], 1e-6));
        CHECK_THAT(nr.theta[i], WithinAbs(gs.theta[i], 1e-6));
    }
    CHECK_THAT(nr.theta[model.grid.slack], WithinAbs(0.0, 1e-15));
}

TEST_CASE("IEEE-14 and IEEE-33 converge with small mismatch") {
    for (const char* id : {"ieee14", "ieee33"}) {
        const auto model = build_admittance(cases::load_bundled(id));
        const auto spec = make_pf_spec(model.grid);
        const auto st = solve_power_flow(model, spec);
        const auto S = bus_injections(model, st);
        for (int i = 0; i < model.n_buses(); ++i) {
            if (i == model.grid.slack) continue;
            CHECK_THAT(S[i].real(), WithinAbs(spec.P[i], 1e-8));
            if (model.grid.buses[i].type == BusType::pq)
                CHECK_THAT(S[i].imag(), WithinAbs(spec.Q[i], 1e-8));
            else
                CHECK_THAT(st.V[i], WithinAbs(spec.V_set[i], 1e-12));
        }
    }
}

TEST_CASE("extreme loading fails with a convergence error") {
    const auto model = build_admittance(cases::load_bundled("ieee9"));
    auto spec = make_pf_spec(model.grid);
    spec.P *= 50.0;
    spec.Q *= 50.0;
    CHECK_THROWS_AS(solve_power_flow(model, spec), ConvergenceError);
}

TEST_CASE("converged injections match the schedule") {
    const auto model = build_admittance(cases::load_bundled("ieee9"));
    const auto spec = make_pf_spec(model.grid);
    const auto st = solve_power_flow(model, spec);
    std::vector<MeasurementMeta> metas;
    for (int i = 0; i < model.n_buses(); ++i)
        metas.push_back({MeasKind::pinj, i, -1, -1, 1.0, false});
    const VectorXd h = eval_measurements(model, st, metas);
    for (int i = 0; i < model.n_buses(); ++i) {
        if (i == model.grid.slack) continue;
        CHECK_THAT(h[i], WithinAbs(spec.P[i], 1e-8));
    }
}

TEST_CASE("two-bus flow formula") {
    GridCase grid;
    grid.base_mva = 100.0;
    grid.buses = {{1, BusType::slack, 0, 0, 0, 0, 115.0}, {2, BusType::pq, 0, 0, 0, 0, 115.0}};
    grid.branches = {{0, 1, 0.0, 0.1, 0.0, 1.0, true}};
    grid.gens = {{0, 0, 0, 1.0, true}};
    grid.slack = 0;
    const auto model = build_admittance(grid);
    StateVector st;
    st.V = VectorXd::Ones(2);
    st.theta.resize(2);
    st.theta << 0.0, -0.1;
    std::vector<MeasurementMeta> metas{{MeasKind::pflow, 0, 1, 0, 1.0, false},
                                       {MeasKind::qflow, 0, 1, 0, 1.0, false}};
    const VectorXd h = eval_measurements(model, st, metas);
    CHECK_THAT(h[0], WithinAbs(10.0 * std::sin(0.1), 1e-12));
    // flat state on a shunt-free line carries no flow
    st.theta[1] = 0.0;
    const VectorXd h0 = eval_measurements(model, st, metas);
    CHECK_THAT(h0[0], WithinAbs(0.0, 1e-14));
    CHECK_THAT(h0[1], WithinAbs(0.0, 1e-14));
}

TEST_CASE("measurement jacobian matches finite differences") {
    const auto model = build_admittance(cases::load_bundled("ieee9"));
    const int n = model.n_buses();
    auto metas = full_measurement_set(model, 1e-3);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> uV(0.96, 1.04), uT(-0.25, 0.25);
    StateVector st;
    st.V.resize(n);
    st.theta.resize(n);
    for (int i = 0; i < n; ++i) {
        st.V[i] = uV(rng);
        st.theta[i] = uT(rng);
    }
    const MatrixXd J = measurement_jacobian(model, st, metas);
    const double h = 1e-7;
    for (int col = 0; col < 2 * n; ++col) {
        StateVector up = st, dn = st;
        if (col < n) {
            up.theta[col] += h;
            dn.theta[col] -= h;
        } else {
            up.V[col - n] += h;
            dn.V[col - n] -= h;
        }
        const VectorXd fd =
            (eval_measurements(model, up, metas) - eval_measurements(model, dn, metas)) /
            (2.0 * h);
        for (Eigen::Index m = 0; m < fd.size(); ++m)
            CHECK_THAT(J(m, col), WithinAbs(fd[m], 5e-6));
    }
}

TEST_CASE("unknown measurement location is rejected") {
    const auto model = build_admittance(cases::load_bundled("ieee9"));
    StateVector st;
    st.V = VectorXd::Ones(9);
    st.theta = VectorXd::Zero(9);
    std::vector<MeasurementMeta> bad{{MeasKind::pflow, 0, 5, 0, 1.0, false}};
    CHECK_THROWS_AS(eval_measurements(model, st, bad), std::invalid_argument);
    std::vector<MeasurementMeta> bad_bus{{MeasKind::vmag, 42, -1, -1, 1.0, false}};
    CHECK_THROWS_AS(eval_measurements(model, st, bad_bus), std::invalid_argument);
}
