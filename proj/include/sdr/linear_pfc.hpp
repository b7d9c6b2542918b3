#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sdr/data_model.hpp"

namespace sdr {

namespace detail {

inline Matrix center_columns(const Matrix& x) {
    return x.rowwise() - x.colwise().mean();
}

inline ReductionBasis top_eigenvectors(const Matrix& sym, Index d, const char* what) {
    const linalg::SymmetricEigen eig = linalg::symmetric_eigen(sym);
    const Index rank = linalg::numerical_rank(eig.values);
    require(d <= rank, ErrorCode::rank_deficiency,
            std::string(what) + " has rank " + std::to_string(rank) + ", cannot extract d=" + std::to_string(d) +
                " directions");
    return ReductionBasis(eig.vectors.leftCols(d));
}

}  // namespace detail

/// Isotropic-error principal fitted components: top-d eigenvectors of the
/// covariance of the fitted values from the multivariate regression of the
/// centered predictors on f_y.
inline ReductionBasis fit_pfc(const Dataset& data, const FyMatrix& fy, Index d) {
    require(fy.n() == data.n(), ErrorCode::dimension_mismatch, "f_y rows != number of observations");
    require(d >= 1 && d <= data.p(), ErrorCode::validation, "need 1 <= d <= p");
    const Eigen::ColPivHouseholderQR<Matrix> qr(fy.f);
    require(qr.rank() == fy.r(), ErrorCode::collinear_basis, "F^T F is singular");

    const Matrix xc = detail::center_columns(data.x());
    const Matrix b = qr.solve(xc);  // r x p
    const Matrix fitted = fy.f * b;
    const Matrix sigma_fit = fitted.transpose() * fitted / static_cast<double>(data.n());
    return detail::top_eigenvectors(sigma_fit, d, "fitted covariance");
}

/// Leading principal components of the sample covariance (not correlation).
inline ReductionBasis fit_spc(const Dataset& data, Index d) {
    require(d >= 1 && d <= data.p(), ErrorCode::validation, "need 1 <= d <= p");
    const Matrix xc = detail::center_columns(data.x());
    const Matrix cov = xc.transpose() * xc / static_cast<double>(data.n());
    return detail::top_eigenvectors(cov, d, "sample covariance");
}

/// Sufficient-summary table: reduced coordinates Γ̂ᵀx_i alongside y_i.
struct SummaryTable {
    Matrix coordinates;  // n x d
    Vector y;
};

inline SummaryTable project(const Dataset& data, const ReductionBasis& basis) {
    require(basis.p() == data.p(), ErrorCode::dimension_mismatch,
            "basis has p=" + std::to_string(basis.p()) + " but data has p=" + std::to_string(data.p()));
    return SummaryTable{data.x() * basis.matrix(), data.y()};
}

/// All principal angles in degrees, ascending. Cosines come from the singular
/// values of AᵀB and sines from those of (I - AAᵀ)B; pairing them through
/// atan2 keeps both small and large angles accurate.
inline Vector principal_angles(const ReductionBasis& a, const ReductionBasis& b) {
    require(a.p() == b.p() && a.d() == b.d(), ErrorCode::dimension_mismatch,
            "principal angles need bases of equal shape");
    const Matrix& qa = a.matrix();
    const Matrix& qb = b.matrix();
    const Matrix cross = qa.transpose() * qb;
    const Matrix residual = qb - qa * cross;
    const Eigen::JacobiSVD<Matrix> svd_cos(cross);
    const Eigen::JacobiSVD<Matrix> svd_sin(residual);
    const Index d = a.d();
    Vector cosines = svd_cos.singularValues();  // descending
    Vector sines = svd_sin.singularValues();     // descending, length min(p, d)
    Vector angles(d);
    for (Index k = 0; k < d; ++k) {
        const double c = std::clamp(cosines(k), 0.0, 1.0);
        // k-th largest cosine pairs with the k-th smallest sine
        const Index s_idx = d - 1 - k;
        const double s = s_idx < sines.size() ? std::clamp(sines(s_idx), 0.0, 1.0) : 0.0;
        angles(k) = std::atan2(s, c) * 180.0 / std::numbers::pi;
    }
    return angles;
}

/// Largest principal angle, in degrees.
inline double subspace_angle(const ReductionBasis& a, const ReductionBasis& b) {
    return principal_angles(a, b).maxCoeff();
}

}  // namespace sdr
