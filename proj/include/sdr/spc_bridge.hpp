#pragma once

#include <cmath>

#include "sdr/data_model.hpp"

namespace sdr {

/// Rewrite the single-latent-factor SPC model
///   Y = β0 + β1 U + ε,  X_j = α0j + α1j U + ε_j
/// as an inverse regression X_y = μ + Γ f_y + ε* with f_y = c (y - ȳ).
inline PfcForm latent_to_pfc(const LatentSpcModel& model, double ybar) {
    model.validate();
    require(std::isfinite(ybar), ErrorCode::validation, "ybar must be finite");
    const Index p = model.p();
    const Vector gamma_raw = model.alpha1 / model.beta1;
    const double c = gamma_raw.norm();
    require(c > 0.0, ErrorCode::degenerate_latent_loading, "all latent loadings alpha1 are zero");

    PfcForm form;
    form.c = c;
    form.ybar = ybar;
    form.gamma = gamma_raw / c;
    form.mu = (model.alpha0 - model.beta0 * gamma_raw).array() + gamma_raw.array() * ybar;
    form.var_eps_star = Matrix(model.var_epsx.asDiagonal()) + model.var_eps * gamma_raw * gamma_raw.transpose();
    form.gamma0 = p > 1 ? linalg::householder_completion(form.gamma) : Matrix(p, 0);
    const Matrix sigma_x = model.var_epsx.asDiagonal();
    form.omega0 = p > 1 ? linalg::symmetric_sqrt(form.gamma0.transpose() * sigma_x * form.gamma0) : Matrix(0, 0);
    const double omega_sq = form.gamma.dot(sigma_x * form.gamma) + c * c * model.var_eps;
    form.omega = std::sqrt(std::max(omega_sq, 0.0));
    return form;
}

/// Conditional mean of X given Y = y under the latent model.
inline Vector latent_conditional_mean(const LatentSpcModel& model, double y) {
    const Vector slope = model.alpha1 / model.beta1;
    return (model.alpha0 - model.beta0 * slope) + slope * y;
}

struct MeanStructureReport {
    double max_deviation = 0.0;
    double worst_y = 0.0;
    Index worst_coordinate = 0;
};

/// Compares μ + Γ c (y - ȳ) against the latent conditional mean at each grid point.
inline MeanStructureReport verify_mean_structure(const LatentSpcModel& model, const PfcForm& form,
                                                 const Vector& y_grid) {
    require(form.mu.size() == model.p() && form.gamma.size() == model.p(), ErrorCode::dimension_mismatch,
            "form and model dimensions differ");
    MeanStructureReport rep;
    for (Index k = 0; k < y_grid.size(); ++k) {
        const double y = y_grid(k);
        const Vector pfc_mean = form.mu + form.gamma * (form.c * (y - form.ybar));
        const Vector dev = (pfc_mean - latent_conditional_mean(model, y)).cwiseAbs();
        Index arg = 0;
        const double worst = dev.maxCoeff(&arg);
        if (worst > rep.max_deviation || k == 0) {
            rep.max_deviation = worst;
            rep.worst_y = y;
            rep.worst_coordinate = arg;
        }
    }
    return rep;
}

struct CovarianceBlockReport {
    double omega_sq_deviation = 0.0;   // |Γᵀ var(ε*) Γ - Ω²|
    double omega0_sq_deviation = 0.0;  // max-abs entry of Γ0ᵀ var(ε*) Γ0 - Ω0²
    double cross_block_norm = 0.0;     // ‖Γ0ᵀ var(ε*) Γ‖₂, reported, not asserted
    bool diagonal_blocks_agree = false;
};

inline CovarianceBlockReport verify_covariance_blocks(const LatentSpcModel& model, const PfcForm& form,
                                                      double tol = 1e-10) {
    require(form.var_eps_star.rows() == model.p(), ErrorCode::dimension_mismatch, "form and model dimensions differ");
    const Matrix& v = form.var_eps_star;
    CovarianceBlockReport rep;
    rep.omega_sq_deviation = std::abs(form.gamma.dot(v * form.gamma) - form.omega * form.omega);
    if (form.gamma0.cols() > 0) {
        const Matrix block0 = form.gamma0.transpose() * v * form.gamma0;
        rep.omega0_sq_deviation = (block0 - form.omega0 * form.omega0).cwiseAbs().maxCoeff();
        rep.cross_block_norm = (form.gamma0.transpose() * v * form.gamma).norm();
    }
    rep.diagonal_blocks_agree = rep.omega_sq_deviation < tol && rep.omega0_sq_deviation < tol;
    return rep;
}

}  // namespace sdr
