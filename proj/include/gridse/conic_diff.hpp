#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseLU>

#include "gridse/conic.hpp"

namespace gridse {

/// Point of the homogeneous self-dual system, (x, y, s, tau, kappa).
struct HsdePoint {
    VectorXd x, y, s;
    double tau = 1.0;
    double kappa = 0.0;
};

/// Recovers the tau-scaled optimal triple from an HSDE point.
inline HsdePoint phi_map(const HsdePoint& h) {
    if (h.tau <= 0.0) throw std::domain_error("phi_map: no finite solution to recover (tau <= 0)");
    HsdePoint out;
    out.x = h.x / h.tau;
    out.y = h.y / h.tau;
    out.s = h.s / h.tau;
    out.tau = 1.0;
    out.kappa = 0.0;
    return out;
}

/// Jacobian of the recovery map, a (p+2d) x (p+2d+2) block matrix whose tau
/// column carries -x/tau^2, -y/tau^2, -s/tau^2 and whose kappa column is zero.
inline Eigen::MatrixXd phi_jacobian(const HsdePoint& h) {
    if (h.tau <= 0.0) throw std::domain_error("phi_jacobian: no finite solution to recover (tau <= 0)");
    const Eigen::Index p = h.x.size(), d = h.y.size();
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(p + 2 * d, p + 2 * d + 2);
    const double inv_tau = 1.0 / h.tau;
    J.block(0, 0, p, p) = inv_tau * Eigen::MatrixXd::Identity(p, p);
    J.block(p, p, d, d) = inv_tau * Eigen::MatrixXd::Identity(d, d);
    J.block(p + d, p + d, d, d) = inv_tau * Eigen::MatrixXd::Identity(d, d);
    J.block(0, p + 2 * d, p, 1) = -h.x / (h.tau * h.tau);
    J.block(p, p + 2 * d, d, 1) = -h.y / (h.tau * h.tau);
    J.block(p + d, p + 2 * d, d, 1) = -h.s / (h.tau * h.tau);
    return J;
}

/// The (p+d+1) x (p+2d+2) auxiliary matrix packing the problem data,
/// with block rows [0 A' 0 c 0; -A 0 I b 0; -c' -b' 0 0 I].
inline SpMat build_omega(const ConicProgram& prog) {
    const Eigen::Index p = prog.p(), d = prog.d();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(2 * prog.A.nonZeros() + 2 * (p + d) + d + 1);
    for (Eigen::Index j = 0; j < prog.A.outerSize(); ++j)
        for (SpMat::InnerIterator it(prog.A, j); it; ++it) {
            trip.emplace_back(j, p + it.row(), it.value());       // A'
            trip.emplace_back(p + it.row(), j, -it.value());      // -A
        }
    for (Eigen::Index j = 0; j < p; ++j) {
        if (prog.c[j] != 0.0) {
            trip.emplace_back(j, p + 2 * d, prog.c[j]);           // c column
            trip.emplace_back(p + d, j, -prog.c[j]);              // -c'
        }
    }
    for (Eigen::Index i = 0; i < d; ++i) {
        trip.emplace_back(p + i, p + d + i, 1.0);                 // I on the s block
        if (prog.b[i] != 0.0) {
            trip.emplace_back(p + i, p + 2 * d, prog.b[i]);       // b column
            trip.emplace_back(p + d, p + i, -prog.b[i]);          // -b'
        }
    }
    trip.emplace_back(p + d, p + 2 * d + 1, 1.0);                 // I on kappa
    SpMat omega(p + d + 1, p + 2 * d + 2);
    omega.setFromTriplets(trip.begin(), trip.end());
    return omega;
}

struct ForwardDerivative {
    VectorXd dx, dy, ds;
    bool degenerate = false;
};

struct AdjointDerivative {
    SpMat dA;  // gradient restricted to the sparsity pattern of A
    VectorXd db, dc;
    bool degenerate = false;
};

/// Differentiates the solution map of a cone program at an optimal point.
///
/// The optimum is re-parametrized through the cone projections: with
/// z = (x, y - s, 1) the embedded residual Q*Pi(z) - Pi(z) + z vanishes, and
/// the implicit function theorem on that residual yields the derivative of
/// the tau-scaled solution with respect to (A, b, c). The linear systems are
/// bordered with the solution ray (which the recovery map annihilates) so a
/// single factorization serves every forward and adjoint call.
class OmegaSystem {
  public:
    OmegaSystem(const ConicProgram& prog, const ConicSolution& sol)
        : A_(prog.A), b_(prog.b), c_(prog.c), cones_(prog.cones) {
        if (sol.status != SolveStatus::optimal)
            throw std::invalid_argument("OmegaSystem: requires an optimal solution");
        if (sol.tau <= 0.0) throw std::invalid_argument("OmegaSystem: tau <= 0");
        omega_ = build_omega(prog);
        x_ = sol.x;
        y_ = sol.y;
        s_ = sol.s;
        const Eigen::Index p = prog.p(), d = prog.d();
        N_ = p + d + 1;

        VectorXd z(N_);
        z << x_, y_ - s_, 1.0;

        // Q = [0 A' c; -A 0 b; -c' -b' 0]
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(2 * A_.nonZeros() + 2 * (p + d));
        for (Eigen::Index j = 0; j < A_.outerSize(); ++j)
            for (SpMat::InnerIterator it(A_, j); it; ++it) {
                trip.emplace_back(j, p + it.row(), it.value());
                trip.emplace_back(p + it.row(), j, -it.value());
            }
        for (Eigen::Index j = 0; j < p; ++j)
            if (c_[j] != 0.0) {
                trip.emplace_back(j, N_ - 1, c_[j]);
                trip.emplace_back(N_ - 1, j, -c_[j]);
            }
        for (Eigen::Index i = 0; i < d; ++i)
            if (b_[i] != 0.0) {
                trip.emplace_back(p + i, N_ - 1, b_[i]);
                trip.emplace_back(N_ - 1, p + i, -b_[i]);
            }
        SpMat Q(N_, N_);
        Q.setFromTriplets(trip.begin(), trip.end());

        proj_jac_ = cone_projection_jacobian(z.segment(p, d), cones_, /*dual=*/true);
        SpMat dpi(N_, N_);
        {
            std::vector<Eigen::Triplet<double>> dt;
            dt.reserve(p + proj_jac_.nonZeros() + 1);
            for (Eigen::Index i = 0; i < p; ++i) dt.emplace_back(i, i, 1.0);
            for (Eigen::Index j = 0; j < proj_jac_.outerSize(); ++j)
                for (SpMat::InnerIterator it(proj_jac_, j); it; ++it)
                    dt.emplace_back(p + it.row(), p + j, it.value());
            dt.emplace_back(N_ - 1, N_ - 1, 1.0);
            dpi.setFromTriplets(dt.begin(), dt.end());
        }

        SpMat I(N_, N_);
        I.setIdentity();
        SpMat M = (Q - I) * dpi;
        M += I;

        // border with the normalized ray direction
        const VectorXd zh = z / z.norm();
        std::vector<Eigen::Triplet<double>> bt;
        bt.reserve(M.nonZeros() + 2 * N_);
        for (Eigen::Index j = 0; j < M.outerSize(); ++j)
            for (SpMat::InnerIterator it(M, j); it; ++it) bt.emplace_back(it.row(), j, it.value());
        for (Eigen::Index i = 0; i < N_; ++i) {
            bt.emplace_back(i, N_, zh[i]);
            bt.emplace_back(N_, i, zh[i]);
        }
        bordered_.resize(N_ + 1, N_ + 1);
        bordered_.setFromTriplets(bt.begin(), bt.end());

        lu_.compute(bordered_);
        if (lu_.info() != Eigen::Success) {
            degenerate_ = true;
            cond_estimate_ = std::numeric_limits<double>::infinity();
            dense_fallback_ = Eigen::MatrixXd(bordered_);
            cod_.compute(dense_fallback_);
            cod_t_.compute(dense_fallback_.transpose());
        } else {
            // cheap condition proxy: ||B||_inf * ||B^-1 e||_inf
            VectorXd e = VectorXd::Ones(N_ + 1);
            const VectorXd w = lu_.solve(e);
            double bnorm = 0.0;
            for (Eigen::Index j = 0; j < bordered_.outerSize(); ++j)
                for (SpMat::InnerIterator it(bordered_, j); it; ++it)
                    bnorm = std::max(bnorm, std::abs(it.value()));
            cond_estimate_ = bnorm * w.cwiseAbs().maxCoeff();
            if (!w.allFinite() || cond_estimate_ > 1e14) {
                degenerate_ = true;
                dense_fallback_ = Eigen::MatrixXd(bordered_);
                cod_.compute(dense_fallback_);
                cod_t_.compute(dense_fallback_.transpose());
            }
        }
    }

    const SpMat& omega() const { return omega_; }
    bool degenerate() const { return degenerate_; }
    double cond_estimate() const { return cond_estimate_; }
    const VectorXd& x() const { return x_; }
    const VectorXd& y() const { return y_; }
    const VectorXd& s() const { return s_; }

    /// Directional derivative of the tau-scaled solution.
    ForwardDerivative forward(const SpMat& dA, const VectorXd& db, const VectorXd& dc) const {
        const Eigen::Index p = x_.size(), d = y_.size();
        VectorXd g(N_ + 1);
        g.head(p) = dA.transpose() * y_ + dc;
        g.segment(p, d) = -(dA * x_) + db;
        g[N_ - 1] = -(dc.dot(x_) + db.dot(y_));
        g[N_] = 0.0;
        const VectorXd dz = solve(-g, /*transposed=*/false);

        ForwardDerivative out;
        out.degenerate = degenerate_;
        const double dw = dz[N_ - 1];
        out.dx = dz.head(p) - x_ * dw;
        const VectorXd pdz = proj_jac_ * dz.segment(p, d);
        out.dy = pdz - y_ * dw;
        out.ds = pdz - dz.segment(p, d) - s_ * dw;
        return out;
    }

    /// Adjoint derivative: loss gradients on (x, y, s) pulled back to the
    /// problem data; dA respects the sparsity pattern of A.
    AdjointDerivative adjoint(const VectorXd& dLx, const VectorXd& dLy, const VectorXd& dLs) const {
        const Eigen::Index p = x_.size(), d = y_.size();
        VectorXd zeta(N_ + 1);
        zeta.head(p) = dLx;
        zeta.segment(p, d) = proj_jac_.transpose() * (dLy + dLs) - dLs;
        zeta[N_ - 1] = -(x_.dot(dLx) + y_.dot(dLy) + s_.dot(dLs));
        zeta[N_] = 0.0;
        const VectorXd r = solve(zeta, /*transposed=*/true);

        AdjointDerivative out;
        out.degenerate = degenerate_;
        const VectorXd r1 = r.head(p);
        const VectorXd r2 = r.segment(p, d);
        const double r3 = r[N_ - 1];
        out.dA = A_;
        for (Eigen::Index j = 0; j < out.dA.outerSize(); ++j)
            for (SpMat::InnerIterator it(out.dA, j); it; ++it)
                it.valueRef() = r2[it.row()] * x_[j] - y_[it.row()] * r1[j];
        out.db = r3 * y_ - r2;
        out.dc = r3 * x_ - r1;
        return out;
    }

  private:
    VectorXd solve(const VectorXd& rhs, bool transposed) const {
        if (!degenerate_) return transposed ? lu_.transpose().solve(rhs) : lu_.solve(rhs);
        return transposed ? cod_t_.solve(rhs) : cod_.solve(rhs);
    }

    SpMat A_;
    VectorXd b_, c_;
    ConeSpec cones_;
    SpMat omega_;
    VectorXd x_, y_, s_;
    Eigen::Index N_ = 0;
    SpMat proj_jac_;  // d(Pi_{K*}) at y - s
    SpMat bordered_;
    Eigen::SparseLU<SpMat> lu_;
    Eigen::MatrixXd dense_fallback_;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod_;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod_t_;
    bool degenerate_ = false;
    double cond_estimate_ = 0.0;
};

}  // namespace gridse
