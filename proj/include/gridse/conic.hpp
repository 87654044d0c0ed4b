#pragma once

#include <cmath>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "gridse/cones.hpp"

namespace gridse {

/// Cone program in compact primal form:
///   min c'x   s.t.  Ax + s = b,  s in K,
/// with the dual  min b'y  s.t.  A'y + c = 0,  y in K*.
struct ConicProgram {
    SpMat A;  // d x p
    VectorXd b;
    VectorXd c;
    ConeSpec cones;

    Eigen::Index p() const { return A.cols(); }
    Eigen::Index d() const { return A.rows(); }

    void validate() const {
        cones.validate();
        if (cones.dim() != d()) throw std::invalid_argument("ConicProgram: cone dims != rows of A");
        if (b.size() != d() || c.size() != p())
            throw std::invalid_argument("ConicProgram: b/c dimension mismatch");
        for (Eigen::Index j = 0; j < A.outerSize(); ++j)
            if (!SpMat::InnerIterator(A, j))
                throw std::invalid_argument("ConicProgram: variable " + std::to_string(j) +
                                            " appears in no constraint");
    }
};

enum class SolveStatus { optimal, primal_infeasible, dual_infeasible, max_iter };

inline const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::primal_infeasible: return "primal_infeasible";
        case SolveStatus::dual_infeasible: return "dual_infeasible";
        case SolveStatus::max_iter: return "max_iter";
    }
    return "?";
}

struct KktResiduals {
    double primal = 0.0;  // ||Ax + s - b||
    double dual = 0.0;    // ||A'y + c||
    double gap = 0.0;     // |c'x + b'y|
};

/// Solution of the embedded problem. For status optimal, (x, y, s) is the
/// tau-scaled KKT point of the original data; for infeasible statuses the
/// certificate lives in y (primal) or x/s (dual).
struct ConicSolution {
    VectorXd x, y, s;
    double tau = 0.0;
    double kappa = 0.0;
    SolveStatus status = SolveStatus::max_iter;
    KktResiduals residuals;     // relative residuals at termination
    int iterations = 0;
};

inline KktResiduals kkt_residuals(const ConicProgram& prog, const ConicSolution& sol) {
    if (sol.tau <= 0.0) throw std::invalid_argument("kkt_residuals: not a solution (tau <= 0)");
    KktResiduals r;
    r.primal = (prog.A * sol.x + sol.s - prog.b).norm();
    r.dual = (prog.A.transpose() * sol.y + prog.c).norm();
    r.gap = std::abs(prog.c.dot(sol.x) + prog.b.dot(sol.y));
    return r;
}

/// Operator-splitting solver for the homogeneous self-dual embedding of a
/// cone program. Each iteration solves one cached quasi-definite linear
/// system and projects onto the cones; the factorization is refreshed only
/// when the constraint matrix changes.
class ConicSolver {
  public:
    struct Options {
        double tol = 1e-8;       // relative KKT residual target
        int max_iter = 50000;
        double relaxation = 1.5; // over-relaxation in (0, 2)
        int check_every = 25;
        int ruiz_iters = 10;
    };

    ConicSolver() = default;
    explicit ConicSolver(Options opt) : opt_(opt) {}

    Options& options() { return opt_; }
    const Options& options() const { return opt_; }

    ConicSolution solve(const ConicProgram& prog) {
        prog.validate();
        prepare(prog);

        const Eigen::Index p = prog.p(), d = prog.d();
        const Eigen::Index N = p + d + 1;

        const VectorXd b_hat = beta_ * (D_.asDiagonal() * prog.b);
        const VectorXd c_hat = gamma_ * (E_.asDiagonal() * prog.c);
        VectorXd g(p + d);
        g << c_hat, b_hat;
        const VectorXd Minv_g = solve_M(g);
        const double sm_denom = 1.0 + g.dot(Minv_g);

        VectorXd u = VectorXd::Zero(N), v = VectorXd::Zero(N);
        u[N - 1] = 1.0;
        v[N - 1] = 1.0;

        const double bnorm = prog.b.norm();
        const double cnorm = prog.c.norm();
        ConicSolution best;
        double best_score = std::numeric_limits<double>::infinity();
        const double alpha = opt_.relaxation;

        VectorXd w(N), ut(N), rhs(p + d), z(p + d);
        for (int iter = 1; iter <= opt_.max_iter; ++iter) {
            // linear step: (I + Q) u_tilde = u + v, via Sherman-Morrison on
            // the rank-one (c_hat, b_hat) border
            w = u + v;
            rhs.head(p) = w.head(p) - w[N - 1] * c_hat;
            rhs.tail(d) = w.segment(p, d) - w[N - 1] * b_hat;
            z = solve_M(rhs);
            z -= Minv_g * (g.dot(z) / sm_denom);
            const double z_tau = w[N - 1] + g.dot(z);

            // over-relaxation, cone projection, dual update
            ut.head(p + d) = alpha * z + (1.0 - alpha) * u.head(p + d);
            ut[N - 1] = alpha * z_tau + (1.0 - alpha) * u[N - 1];
            w = ut - v;  // reuse as projection argument
            u.head(p) = w.head(p);
            u.segment(p, d) = project_cone(w.segment(p, d), cones_, /*dual=*/true);
            u[N - 1] = std::max(w[N - 1], 0.0);
            v = u - w;

            if (iter % opt_.check_every != 0 && iter != opt_.max_iter) continue;

            const double tau = u[N - 1];
            if (tau > 1e-12) {
                ConicSolution cand = unscale(prog, u, v, tau);
                KktResiduals abs_res = kkt_residuals(prog, cand);
                const double cx = prog.c.dot(cand.x), by = prog.b.dot(cand.y);
                cand.residuals.primal = abs_res.primal / (1.0 + bnorm);
                cand.residuals.dual = abs_res.dual / (1.0 + cnorm);
                cand.residuals.gap = abs_res.gap / (1.0 + std::abs(cx) + std::abs(by));
                cand.iterations = iter;
                const double score = std::max({cand.residuals.primal, cand.residuals.dual,
                                               cand.residuals.gap});
                if (score < best_score) {
                    best_score = score;
                    best = cand;
                }
                if (score <= opt_.tol) {
                    best.status = SolveStatus::optimal;
                    return best;
                }
            }

            // infeasibility certificates
            const VectorXd y_dir = D_.asDiagonal() * u.segment(p, d) / gamma_;
            const double bty = prog.b.dot(y_dir);
            if (bnorm > 1e-12 && bty < -1e-12) {
                if ((prog.A.transpose() * y_dir).norm() * bnorm <= -opt_.tol * bty) {
                    ConicSolution sol;
                    sol.x = VectorXd::Zero(p);
                    sol.s = VectorXd::Zero(d);
                    sol.y = y_dir / (-bty);
                    sol.tau = 0.0;
                    sol.kappa = 1.0;
                    sol.status = SolveStatus::primal_infeasible;
                    sol.iterations = iter;
                    return sol;
                }
            }
            const VectorXd x_dir = E_.asDiagonal() * u.head(p) / beta_;
            const VectorXd s_dir = D_.asDiagonal().inverse() * v.segment(p, d) / beta_;
            const double ctx = prog.c.dot(x_dir);
            if (cnorm > 1e-12 && ctx < -1e-12) {
                if ((prog.A * x_dir + s_dir).norm() * cnorm <= -opt_.tol * ctx) {
                    ConicSolution sol;
                    sol.x = x_dir / (-ctx);
                    sol.s = s_dir / (-ctx);
                    sol.y = VectorXd::Zero(d);
                    sol.tau = 0.0;
                    sol.kappa = 1.0;
                    sol.status = SolveStatus::dual_infeasible;
                    sol.iterations = iter;
                    return sol;
                }
            }
        }

        if (best.x.size() == 0) best = unscale(prog, u, v, std::max(u[N - 1], 1e-30));
        best.status = SolveStatus::max_iter;
        best.iterations = opt_.max_iter;
        return best;
    }

  private:
    // Maps the scaled HSDE iterate back to a (tau-scaled) point of the
    // original problem.
    ConicSolution unscale(const ConicProgram& prog, const VectorXd& u, const VectorXd& v,
                          double tau) const {
        const Eigen::Index p = prog.p(), d = prog.d();
        ConicSolution sol;
        sol.x = E_.asDiagonal() * u.head(p) / (beta_ * tau);
        sol.y = D_.asDiagonal() * u.segment(p, d) / (gamma_ * tau);
        sol.s = D_.asDiagonal().inverse() * v.segment(p, d) / (beta_ * tau);
        sol.tau = tau;
        sol.kappa = v[u.size() - 1];
        return sol;
    }

    // Solves M z = r with M = [[I, A'],[-A, I]] through the cached
    // factorization of the symmetric quasi-definite form [[I, A'],[A, -I]].
    VectorXd solve_M(const VectorXd& r) const {
        VectorXd rhs(r.size());
        rhs.head(p_) = r.head(p_);
        rhs.tail(d_) = -r.tail(d_);
        return ldlt_.solve(rhs);
    }

    void prepare(const ConicProgram& prog) {
        if (have_factor_ && same_matrix(prog.A) && cones_equal(prog.cones)) {
            update_scalars(prog);
            return;
        }
        p_ = prog.p();
        d_ = prog.d();
        cones_ = prog.cones;
        equilibrate(prog);
        build_factorization();
        have_factor_ = true;
        cached_A_ = prog.A;
        update_scalars(prog);
    }

    void update_scalars(const ConicProgram& prog) {
        beta_ = 1.0 / std::max((D_.asDiagonal() * prog.b).norm(), 1.0);
        gamma_ = 1.0 / std::max((E_.asDiagonal() * prog.c).norm(), 1.0);
    }

    bool same_matrix(const SpMat& A) const {
        if (A.rows() != cached_A_.rows() || A.cols() != cached_A_.cols() ||
            A.nonZeros() != cached_A_.nonZeros())
            return false;
        const Eigen::Index nnz = A.nonZeros();
        return std::equal(A.valuePtr(), A.valuePtr() + nnz, cached_A_.valuePtr()) &&
               std::equal(A.innerIndexPtr(), A.innerIndexPtr() + nnz, cached_A_.innerIndexPtr()) &&
               std::equal(A.outerIndexPtr(), A.outerIndexPtr() + A.outerSize() + 1,
                          cached_A_.outerIndexPtr());
    }

    bool cones_equal(const ConeSpec& c) const {
        return c.zero_dim == cones_.zero_dim && c.nonneg_dim == cones_.nonneg_dim &&
               c.soc_dims == cones_.soc_dims;
    }

    // Ruiz equilibration of A; rows of one SOC block share a common scale so
    // the scaled cone constraints stay cones.
    void equilibrate(const ConicProgram& prog) {
        D_ = VectorXd::Ones(d_);
        E_ = VectorXd::Ones(p_);
        A_hat_ = prog.A;
        for (int it = 0; it < opt_.ruiz_iters; ++it) {
            VectorXd row_norm = VectorXd::Zero(d_);
            VectorXd col_norm = VectorXd::Zero(p_);
            for (Eigen::Index j = 0; j < A_hat_.outerSize(); ++j)
                for (SpMat::InnerIterator itA(A_hat_, j); itA; ++itA) {
                    const double a = std::abs(itA.value());
                    row_norm[itA.row()] = std::max(row_norm[itA.row()], a);
                    col_norm[j] = std::max(col_norm[j], a);
                }
            Eigen::Index at = cones_.zero_dim + cones_.nonneg_dim;
            for (auto q : cones_.soc_dims) {
                const double m = row_norm.segment(at, q).maxCoeff();
                row_norm.segment(at, q).setConstant(m);
                at += q;
            }
            VectorXd dr(d_), dc(p_);
            for (Eigen::Index i = 0; i < d_; ++i)
                dr[i] = row_norm[i] > 1e-12 ? 1.0 / std::sqrt(row_norm[i]) : 1.0;
            for (Eigen::Index j = 0; j < p_; ++j)
                dc[j] = col_norm[j] > 1e-12 ? 1.0 / std::sqrt(col_norm[j]) : 1.0;
            A_hat_ = dr.asDiagonal() * A_hat_ * dc.asDiagonal();
            D_ = D_.cwiseProduct(dr);
            E_ = E_.cwiseProduct(dc);
        }
    }

    void build_factorization() {
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<size_t>(A_hat_.nonZeros()) + p_ + d_);
        for (Eigen::Index i = 0; i < p_; ++i) trip.emplace_back(i, i, 1.0);
        for (Eigen::Index i = 0; i < d_; ++i) trip.emplace_back(p_ + i, p_ + i, -1.0);
        for (Eigen::Index j = 0; j < A_hat_.outerSize(); ++j)
            for (SpMat::InnerIterator it(A_hat_, j); it; ++it) {
                trip.emplace_back(p_ + it.row(), j, it.value());
                trip.emplace_back(j, p_ + it.row(), it.value());
            }
        SpMat K(p_ + d_, p_ + d_);
        K.setFromTriplets(trip.begin(), trip.end());
        ldlt_.compute(K);
        if (ldlt_.info() != Eigen::Success)
            throw std::runtime_error("ConicSolver: quasi-definite factorization failed");
    }

    Options opt_;
    Eigen::Index p_ = 0, d_ = 0;
    ConeSpec cones_;
    SpMat cached_A_;
    SpMat A_hat_;
    VectorXd D_, E_;
    double beta_ = 1.0, gamma_ = 1.0;
    Eigen::SimplicialLDLT<SpMat, Eigen::Lower> ldlt_;
    bool have_factor_ = false;
};

// ---------------------------------------------------------------------------
// Sparse-triplet text dump for cross-checking against external solvers.
// Format:  header line "gridse conic 1", then "p d", the cone line
// "cones <zero> <nonneg> <n_soc> <q...>", "A <nnz>" followed by
// "row col value" triplets, then "b" and "c" sections with one value per line.

inline void dump_program(const ConicProgram& prog, std::ostream& os) {
    os.precision(17);
    os << "gridse conic 1\n" << prog.p() << ' ' << prog.d() << '\n';
    os << "cones " << prog.cones.zero_dim << ' ' << prog.cones.nonneg_dim << ' '
       << prog.cones.soc_dims.size();
    for (auto q : prog.cones.soc_dims) os << ' ' << q;
    os << '\n';
    os << "A " << prog.A.nonZeros() << '\n';
    for (Eigen::Index j = 0; j < prog.A.outerSize(); ++j)
        for (SpMat::InnerIterator it(prog.A, j); it; ++it)
            os << it.row() << ' ' << j << ' ' << it.value() << '\n';
    os << "b\n";
    for (Eigen::Index i = 0; i < prog.d(); ++i) os << prog.b[i] << '\n';
    os << "c\n";
    for (Eigen::Index i = 0; i < prog.p(); ++i) os << prog.c[i] << '\n';
}

inline ConicProgram parse_program(std::istream& is) {
    std::string word, tag;
    int version;
    is >> word >> tag >> version;
    if (word != "gridse" || tag != "conic" || version != 1)
        throw std::invalid_argument("parse_program: bad header");
    Eigen::Index p, d;
    is >> p >> d;
    ConicProgram prog;
    size_t n_soc;
    is >> word >> prog.cones.zero_dim >> prog.cones.nonneg_dim >> n_soc;
    prog.cones.soc_dims.resize(n_soc);
    for (auto& q : prog.cones.soc_dims) is >> q;
    Eigen::Index nnz;
    is >> word >> nnz;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(nnz);
    for (Eigen::Index k = 0; k < nnz; ++k) {
        Eigen::Index r, c;
        double val;
        is >> r >> c >> val;
        trip.emplace_back(r, c, val);
    }
    prog.A.resize(d, p);
    prog.A.setFromTriplets(trip.begin(), trip.end());
    is >> word;
    prog.b.resize(d);
    for (Eigen::Index i = 0; i < d; ++i) is >> prog.b[i];
    is >> word;
    prog.c.resize(p);
    for (Eigen::Index i = 0; i < p; ++i) is >> prog.c[i];
    if (!is) throw std::invalid_argument("parse_program: truncated input");
    return prog;
}

}  // namespace gridse
