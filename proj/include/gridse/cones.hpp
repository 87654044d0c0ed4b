#pragma once

#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace gridse {

using Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

/// Ordered cone layout of the dual dimension: zero-cone rows first, then
/// nonnegative rows, then second-order cone blocks.
struct ConeSpec {
    Eigen::Index zero_dim = 0;
    Eigen::Index nonneg_dim = 0;
    std::vector<Eigen::Index> soc_dims;

    Eigen::Index dim() const {
        return zero_dim + nonneg_dim +
               std::accumulate(soc_dims.begin(), soc_dims.end(), Eigen::Index(0));
    }

    void validate() const {
        if (zero_dim < 0 || nonneg_dim < 0)
            throw std::invalid_argument("ConeSpec: negative block size");
        for (auto q : soc_dims)
            if (q < 2) throw std::invalid_argument("ConeSpec: SOC block size below 2");
    }
};

namespace detail {

inline void project_soc_inplace(Eigen::Ref<VectorXd> blk) {
    const double t = blk[0];
    const double r = blk.tail(blk.size() - 1).norm();
    if (r <= t) return;            // inside (or on) the cone
    if (r <= -t) {                 // inside the polar cone: projects to origin
        blk.setZero();
        return;
    }
    const double a = (t + r) / 2.0;
    blk.tail(blk.size() - 1) *= a / r;
    blk[0] = a;
}

}  // namespace detail

/// Blockwise Euclidean projection onto K (dual=false) or K* (dual=true).
/// Zero cone projects to 0 and its dual (free) is the identity; the
/// nonnegative and second-order cones are self dual.
inline VectorXd project_cone(const VectorXd& v, const ConeSpec& cones, bool dual = false) {
    if (v.size() != cones.dim()) throw std::invalid_argument("project_cone: dimension mismatch");
    VectorXd out = v;
    Eigen::Index at = 0;
    if (cones.zero_dim > 0) {
        if (!dual) out.segment(0, cones.zero_dim).setZero();
        at += cones.zero_dim;
    }
    if (cones.nonneg_dim > 0) {
        out.segment(at, cones.nonneg_dim) = out.segment(at, cones.nonneg_dim).cwiseMax(0.0);
        at += cones.nonneg_dim;
    }
    for (auto q : cones.soc_dims) {
        detail::project_soc_inplace(out.segment(at, q));
        at += q;
    }
    return out;
}

/// Jacobian of the SOC projection. Ties at the projection kinks resolve to
/// the directional derivative taken from inside the cone.
inline Eigen::MatrixXd soc_projection_jacobian(const Eigen::Ref<const VectorXd>& blk) {
    const Eigen::Index q = blk.size();
    const double t = blk[0];
    const double r = blk.tail(q - 1).norm();
    if (r <= t) return Eigen::MatrixXd::Identity(q, q);
    if (r <= -t) return Eigen::MatrixXd::Zero(q, q);
    Eigen::MatrixXd J(q, q);
    const VectorXd u_hat = blk.tail(q - 1) / r;
    J(0, 0) = 0.5;
    J.block(0, 1, 1, q - 1) = 0.5 * u_hat.transpose();
    J.block(1, 0, q - 1, 1) = 0.5 * u_hat;
    const double a = (t + r) / (2.0 * r);
    J.bottomRightCorner(q - 1, q - 1) =
        a * Eigen::MatrixXd::Identity(q - 1, q - 1) + (0.5 - a) * (u_hat * u_hat.transpose());
    return J;
}

/// Jacobian of the blockwise projection onto K or K*, as a sparse matrix.
inline SpMat cone_projection_jacobian(const VectorXd& v, const ConeSpec& cones, bool dual = false) {
    if (v.size() != cones.dim()) throw std::invalid_argument("cone_projection_jacobian: dimension mismatch");
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::Index at = 0;
    if (cones.zero_dim > 0) {
        if (dual)
            for (Eigen::Index i = 0; i < cones.zero_dim; ++i) trip.emplace_back(i, i, 1.0);
        at += cones.zero_dim;
    }
    for (Eigen::Index i = 0; i < cones.nonneg_dim; ++i) {
        if (v[at + i] >= 0.0) trip.emplace_back(at + i, at + i, 1.0);
    }
    at += cones.nonneg_dim;
    for (auto q : cones.soc_dims) {
        const Eigen::MatrixXd J = soc_projection_jacobian(v.segment(at, q));
        for (Eigen::Index r = 0; r < q; ++r)
            for (Eigen::Index c = 0; c < q; ++c)
                if (J(r, c) != 0.0) trip.emplace_back(at + r, at + c, J(r, c));
        at += q;
    }
    SpMat out(v.size(), v.size());
    out.setFromTriplets(trip.begin(), trip.end());
    return out;
}

}  // namespace gridse
