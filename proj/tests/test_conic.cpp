#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "gridse/conic.hpp"

using namespace gridse;
using Catch::Matchers::WithinAbs;

namespace {

SpMat dense_to_sparse(const Eigen::MatrixXd& A) {
    SpMat out(A.rows(), A.cols());
    std::vector<Eigen::Triplet<double>> trip;
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            if (A(i, j) != 0.0) trip.emplace_back(i, j, A(i, j));
    out.setFromTriplets(trip.begin(), trip.end());
    return out;
}

// brute-force second-order cone projection oracle: the projection keeps the
// direction of the off-axis part, so search the (t, r) plane
VectorXd brute_force_soc_projection(const VectorXd& v) {
    const Eigen::Index q = v.size();
    const double t0 = v[0];
    const VectorXd u = v.tail(q - 1);
    const double r0 = u.norm();
    VectorXd dir = r0 > 0 ? VectorXd(u / r0) : VectorXd::Zero(q - 1);
    auto dist2 = [&](double t, double r) {
        return (t - t0) * (t - t0) + (r - r0) * (r - r0);
    };
    double best_t = 0, best = dist2(0, 0);
    double lo_t = 0, hi_t = std::abs(t0) + r0 + 1;
    for (int refine = 0; refine < 30; ++refine) {
        const double step = (hi_t - lo_t) / 200.0;
        double loc_t = best_t;
        for (double t = std::max(0.0, lo_t); t <= hi_t; t += step) {
            const double r = std::min(t, std::max(0.0, r0));
            if (dist2(t, r) < best) {
                best = dist2(t, r);
                loc_t = t;
            }
        }
        best_t = loc_t;
        lo_t = best_t - step;
        hi_t = best_t + step;
    }
    VectorXd out(q);
    out[0] = best_t;
    out.tail(q - 1) = std::min(best_t, std::max(0.0, r0)) * dir;
    return out;
}

}  // namespace

TEST_CASE("cone projections, blockwise") {
    ConeSpec cones;
    cones.nonneg_dim = 2;
    VectorXd v(2);
    v << -1.0, 2.0;
    const VectorXd pv = project_cone(v, cones);
    CHECK(pv[0] == 0.0);
    CHECK(pv[1] == 2.0);

    ConeSpec soc;
    soc.soc_dims = {3};
    VectorXd w(3);
    w << 5.0, 3.0, 4.0;  // already on the boundary
    CHECK((project_cone(w, soc) - w).norm() == 0.0);

    w << 0.0, 3.0, 4.0;
    const VectorXd pw = project_cone(w, soc);
    CHECK_THAT(pw[0], WithinAbs(2.5, 1e-12));
    CHECK_THAT(pw[1], WithinAbs(1.5, 1e-12));
    CHECK_THAT(pw[2], WithinAbs(2.0, 1e-12));
    const VectorXd oracle = brute_force_soc_projection(w);
    CHECK((pw - oracle).norm() < 1e-6);
}

TEST_CASE("SOC projection matches the brute-force oracle on random points") {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> g(0.0, 2.0);
    ConeSpec soc;
    soc.soc_dims = {4};
    for (int trial = 0; trial < 25; ++trial) {
        VectorXd v(4);
        for (int i = 0; i < 4; ++i) v[i] = g(rng);
        const VectorXd p = project_cone(v, soc);
        const VectorXd oracle = brute_force_soc_projection(v);
        CHECK((p - oracle).norm() < 1e-6);
    }
}

TEST_CASE("Moreau decomposition holds blockwise") {
    ConeSpec cones;
    cones.zero_dim = 3;
    cones.nonneg_dim = 4;
    cones.soc_dims = {3, 5};
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g(0.0, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        VectorXd v(cones.dim());
        for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = g(rng);
        const VectorXd pk = project_cone(v, cones, false);
        const VectorXd pkstar_neg = project_cone(-v, cones, true);
        CHECK((v - (pk - pkstar_neg)).lpNorm<Eigen::Infinity>() < 1e-12);
        CHECK(std::abs(pk.dot(pkstar_neg)) < 1e-12);
    }
}

TEST_CASE("scalar LP solves to the bound") {
    // min x  s.t.  x >= 1, as the nonnegative cone on b - Ax
    ConicProgram prog;
    prog.A = dense_to_sparse(Eigen::MatrixXd::Constant(1, 1, -1.0));
    prog.b = VectorXd::Constant(1, -1.0);
    prog.c = VectorXd::Constant(1, 1.0);
    prog.cones.nonneg_dim = 1;
    ConicSolver solver;
    const auto sol = solver.solve(prog);
    REQUIRE(sol.status == SolveStatus::optimal);
    CHECK_THAT(sol.x[0], WithinAbs(1.0, 1e-6));
    CHECK(sol.tau > 0.0);
    CHECK(std::abs(sol.s.dot(sol.y)) <= 1e-6 * (1 + sol.s.norm() * sol.y.norm()));
}

TEST_CASE("min t over the second-order cone") {
    // min t  s.t.  ||(3,4)|| <= t
    ConicProgram prog;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(3, 1);
    A(0, 0) = -1.0;
    prog.A = dense_to_sparse(A);
    prog.b.resize(3);
    prog.b << 0.0, 3.0, 4.0;
    prog.c = VectorXd::Constant(1, 1.0);
    prog.cones.soc_dims = {3};
    ConicSolver solver;
    const auto sol = solver.solve(prog);
    REQUIRE(sol.status == SolveStatus::optimal);
    CHECK_THAT(sol.x[0], WithinAbs(5.0, 1e-6));

    SECTION("residuals of the exact analytic point are tiny") {
        ConicSolution exact = sol;
        exact.x[0] = 5.0;
        exact.s.resize(3);
        exact.s << 5.0, 3.0, 4.0;
        exact.y.resize(3);
        exact.y << 1.0, -0.6, -0.8;
        exact.tau = 1.0;
        const auto r = kkt_residuals(prog, exact);
        CHECK(r.primal < 1e-9);
        CHECK(r.dual < 1e-9);
        CHECK(r.gap < 1e-9);
    }
    SECTION("perturbed x raises the primal residual by the column norm") {
        ConicSolution pert = sol;
        pert.x[0] += 0.1;
        const auto r = kkt_residuals(prog, pert);
        CHECK_THAT(r.primal, WithinAbs(0.1, 1e-5));
    }
    SECTION("interior feasible point has positive gap") {
        ConicSolution inner = sol;
        inner.x[0] = 9.0;
        inner.s.resize(3);
        inner.s << 9.0, 3.0, 4.0;
        inner.y.resize(3);
        inner.y << 1.0, -0.6, -0.8;
        const auto r = kkt_residuals(prog, inner);
        CHECK(r.gap > 1.0);
    }
    SECTION("tau = 0 is rejected") {
        ConicSolution bad = sol;
        bad.tau = 0.0;
        CHECK_THROWS_AS(kkt_residuals(prog, bad), std::invalid_argument);
    }
}

TEST_CASE("contradictory equalities produce a primal infeasibility certificate") {
    Eigen::MatrixXd A(2, 1);
    A << 1.0, 1.0;
    ConicProgram prog;
    prog.A = dense_to_sparse(A);
    prog.b.resize(2);
    prog.b << 1.0, 2.0;
    prog.c = VectorXd::Constant(1, 1.0);
    prog.cones.zero_dim = 2;
    ConicSolver solver;
    const auto sol = solver.solve(prog);
    REQUIRE(sol.status == SolveStatus::primal_infeasible);
    CHECK(sol.tau == 0.0);
    CHECK(sol.kappa > 0.0);
    CHECK(std::abs((prog.A.transpose() * sol.y)(0)) < 1e-6);
    CHECK(prog.b.dot(sol.y) < 0.0);
}

TEST_CASE("unbounded problem yields a dual infeasibility certificate") {
    // min -x s.t. x >= 0
    ConicProgram prog;
    prog.A = dense_to_sparse(Eigen::MatrixXd::Constant(1, 1, -1.0));
    prog.b = VectorXd::Zero(1);
    prog.c = VectorXd::Constant(1, -1.0);
    prog.cones.nonneg_dim = 1;
    ConicSolver solver;
    const auto sol = solver.solve(prog);
    REQUIRE(sol.status == SolveStatus::dual_infeasible);
    CHECK(prog.c.dot(sol.x) < 0.0);
}

TEST_CASE("mixed-cone program satisfies every relative residual at the tolerance") {
    // min x1 + x2 s.t. x1 + x2 = 2, x1 >= 0.5, ||(x1 - x2, 0.3)|| <= x1 + x2
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(5, 2);
    VectorXd b = VectorXd::Zero(5);
    A(0, 0) = 1;
    A(0, 1) = 1;
    b[0] = 2.0;
    A(1, 0) = -1;
    b[1] = -0.5;
    A(2, 0) = -1;
    A(2, 1) = -1;  // t = x1 + x2
    A(3, 0) = -1;
    A(3, 1) = 1;   // u1 = x1 - x2
    b[4] = 0.3;    // u2 = 0.3
    ConicProgram prog;
    prog.A = dense_to_sparse(A);
    prog.b = b;
    prog.c.resize(2);
    prog.c << 1.0, 1.0;
    prog.cones.zero_dim = 1;
    prog.cones.nonneg_dim = 1;
    prog.cones.soc_dims = {3};
    ConicSolver solver;
    const auto sol = solver.solve(prog);
    REQUIRE(sol.status == SolveStatus::optimal);
    CHECK_THAT(sol.x[0] + sol.x[1], WithinAbs(2.0, 1e-6));
    CHECK(sol.x[0] >= 0.5 - 1e-6);
    CHECK(sol.residuals.primal <= solver.options().tol);
    CHECK(sol.residuals.dual <= solver.options().tol);
    CHECK(sol.residuals.gap <= solver.options().tol);
    CHECK(std::abs(sol.s.dot(sol.y)) <= 1e-6 * (1 + sol.s.norm() * sol.y.norm()));
}

TEST_CASE("solving twice is bit-reproducible") {
    Eigen::MatrixXd A(3, 2);
    A << 1, 1, -1, 0, 0, -1;
    ConicProgram prog;
    prog.A = dense_to_sparse(A);
    prog.b.resize(3);
    prog.b << 1.5, 0, 0;
    prog.c.resize(2);
    prog.c << 1.0, 2.0;
    prog.cones.zero_dim = 1;
    prog.cones.nonneg_dim = 2;
    ConicSolver s1, s2;
    const auto a = s1.solve(prog);
    const auto bsol = s2.solve(prog);
    REQUIRE(a.status == SolveStatus::optimal);
    CHECK(a.x == bsol.x);
    CHECK(a.y == bsol.y);
    CHECK(a.s == bsol.s);
    CHECK(a.iterations == bsol.iterations);
    const auto c = s1.solve(prog);  // cached factorization path
    CHECK(a.x == c.x);
}

TEST_CASE("program validation rejects inconsistent data") {
    ConicProgram prog;
    Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(2, 2);
    Z(0, 0) = 1.0;  // second column empty
    prog.A = dense_to_sparse(Z);
    prog.b = VectorXd::Zero(2);
    prog.c = VectorXd::Zero(2);
    prog.cones.nonneg_dim = 2;
    CHECK_THROWS_AS(prog.validate(), std::invalid_argument);

    Eigen::MatrixXd A(2, 1);
    A << 1, 1;
    prog.A = dense_to_sparse(A);
    prog.b = VectorXd::Zero(2);
    prog.c = VectorXd::Zero(1);
    prog.cones.nonneg_dim = 1;  // cone dim != rows
    CHECK_THROWS_AS(prog.validate(), std::invalid_argument);
}

TEST_CASE("triplet dump round-trips") {
    Eigen::MatrixXd A(3, 2);
    A << 1.25, 0, -0.5, 2.0, 0, -1e-3;
    ConicProgram prog;
    prog.A = dense_to_sparse(A);
    prog.b.resize(3);
    prog.b << 0.1, -2.0, 3.5;
    prog.c.resize(2);
    prog.c << -1.0, 0.25;
    prog.cones.zero_dim = 1;
    prog.cones.nonneg_dim = 2;
    std::stringstream ss;
    dump_program(prog, ss);
    const ConicProgram back = parse_program(ss);
    CHECK(back.p() == prog.p());
    CHECK(back.d() == prog.d());
    CHECK(back.cones.zero_dim == prog.cones.zero_dim);
    CHECK((Eigen::MatrixXd(back.A) - Eigen::MatrixXd(prog.A)).norm() == 0.0);
    CHECK(back.b == prog.b);
    CHECK(back.c == prog.c);
}
