#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "sdr/error.hpp"

namespace sdr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

namespace linalg {

/// Flip the sign of `v` so that its largest-magnitude entry is positive
/// (first occurrence wins on ties).
inline void fix_sign_largest_positive(Eigen::Ref<Vector> v) {
    if (v.size() == 0) return;
    Index arg = 0;
    double best = -1.0;
    for (Index i = 0; i < v.size(); ++i) {
        const double a = std::abs(v(i));
        if (a > best) {
            best = a;
            arg = i;
        }
    }
    if (v(arg) < 0.0) v = -v;
}

struct SymmetricEigen {
    Vector values;   // descending
    Matrix vectors;  // columns matched to `values`
};

/// Dense symmetric eigendecomposition with eigenvalues in descending order.
/// Ties keep the solver's ordering; each eigenvector has its largest-magnitude
/// entry positive.
inline SymmetricEigen symmetric_eigen(const Matrix& a) {
    require(a.rows() == a.cols(), ErrorCode::dimension_mismatch, "eigendecomposition needs a square matrix");
    Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
    require(solver.info() == Eigen::Success, ErrorCode::numerical_failure, "symmetric eigensolver did not converge");

    const Index n = a.rows();
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    // The solver returns ascending values; reverse, then a stable sort keeps
    // the solver's relative order among equal eigenvalues.
    std::reverse(order.begin(), order.end());
    std::stable_sort(order.begin(), order.end(), [&](Index i, Index j) {
        return solver.eigenvalues()(i) > solver.eigenvalues()(j);
    });

    SymmetricEigen out{Vector(n), Matrix(n, n)};
    for (Index k = 0; k < n; ++k) {
        out.values(k) = solver.eigenvalues()(order[static_cast<std::size_t>(k)]);
        out.vectors.col(k) = solver.eigenvectors().col(order[static_cast<std::size_t>(k)]);
        fix_sign_largest_positive(out.vectors.col(k));
    }
    return out;
}

/// Number of eigenvalues above `rel_tol` times the largest one.
inline Index numerical_rank(const Vector& descending_values, double rel_tol = 1e-10) {
    if (descending_values.size() == 0 || !(descending_values(0) > 0.0)) return 0;
    const double cutoff = rel_tol * descending_values(0);
    Index rank = 0;
    for (Index k = 0; k < descending_values.size(); ++k)
        if (descending_values(k) > cutoff) ++rank;
    return rank;
}

struct ThinQr {
    Matrix q;    // m x k, orthonormal columns
    Matrix r;    // k x k upper triangular with nonnegative diagonal
    Index rank;  // diagonal entries of r above tolerance
};

/// Thin Householder QR with the diagonal of R made nonnegative, which makes
/// Q unique for full-column-rank input. Rank counts |R_kk| above
/// `rel_tol` times the largest column norm.
inline ThinQr thin_qr(const Matrix& a, double rel_tol = 1e-10) {
    const Index m = a.rows();
    const Index k = a.cols();
    Eigen::HouseholderQR<Matrix> qr(a);
    ThinQr out;
    out.q = qr.householderQ() * Matrix::Identity(m, k);
    out.r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    double max_norm = 0.0;
    for (Index j = 0; j < k; ++j) max_norm = std::max(max_norm, a.col(j).norm());
    out.rank = 0;
    for (Index j = 0; j < k; ++j) {
        if (out.r(j, j) < 0.0) {
            out.q.col(j) *= -1.0;
            out.r.row(j) *= -1.0;
        }
        if (max_norm > 0.0 && out.r(j, j) > rel_tol * max_norm) ++out.rank;
    }
    return out;
}

/// Symmetric positive semidefinite square root. Eigenvalues that are
/// negative only through rounding are treated as zero.
inline Matrix symmetric_sqrt(const Matrix& a) {
    const SymmetricEigen eig = symmetric_eigen(0.5 * (a + a.transpose()));
    const double scale = eig.values.size() ? std::abs(eig.values(0)) : 0.0;
    Vector roots(eig.values.size());
    for (Index k = 0; k < eig.values.size(); ++k) {
        const double v = eig.values(k);
        require(v >= -1e-10 * std::max(1.0, scale), ErrorCode::numerical_failure,
                "square root of an indefinite matrix");
        roots(k) = std::sqrt(std::max(v, 0.0));
    }
    return eig.vectors * roots.asDiagonal() * eig.vectors.transpose();
}

/// Orthonormal completion of a unit vector: the last p-1 columns of the
/// Householder reflection that maps e1 onto -sign(u_1) u.
inline Matrix householder_completion(const Vector& unit) {
    const Index p = unit.size();
    const double s = unit(0) >= 0.0 ? 1.0 : -1.0;
    Vector v = unit;
    v(0) += s;
    const Matrix h = Matrix::Identity(p, p) - 2.0 * v * v.transpose() / v.squaredNorm();
    return h.rightCols(p - 1);
}

}  // namespace linalg
}  // namespace sdr
