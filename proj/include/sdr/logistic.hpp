#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "sdr/data_model.hpp"

namespace sdr {

namespace bernoulli {

/// Linear predictors are clamped to [-30, 30]; past the clamp a success
/// probability is within 1e-13 of 0 or 1.
inline constexpr double eta_clamp = 30.0;

inline double clamp_eta(double eta) { return std::clamp(eta, -eta_clamp, eta_clamp); }

/// log(1 + exp(t)) without overflow.
inline double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

inline double sigmoid(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

/// x * eta - log(1 + exp(eta)) at the clamped linear predictor; this equals
/// log q + x * eta with q = 1 / (1 + exp(eta)).
inline double cell_loglik(double x, double eta) {
    const double e = clamp_eta(eta);
    return x * e - softplus(e);
}

/// Derivative of `cell_loglik` in eta: x - p inside the clamp, zero outside
/// where the clamped objective is flat.
inline double cell_residual(double x, double eta) {
    if (std::abs(eta) >= eta_clamp) return 0.0;
    return x - sigmoid(eta);
}

/// Negative second derivative of `cell_loglik` in eta.
inline double cell_weight(double eta) {
    if (std::abs(eta) >= eta_clamp) return 0.0;
    const double p = sigmoid(eta);
    return p * (1.0 - p);
}

}  // namespace bernoulli

struct LogisticOptions {
    int max_iterations = 100;
    int max_halvings = 30;
    double rel_tol = 1e-10;
    double grad_tol = 1e-10;
    double coefficient_bound = 1e3;
};

struct LogisticFit {
    Vector coefficients;  // intercept first when fitted, then one per column of Z
    double loglik = 0.0;
    int iterations = 0;
    bool converged = false;
    bool separation_detected = false;
    bool capped = false;
    std::vector<double> trace;  // log-likelihood at the start and after each accepted step
};

namespace detail {

struct LogisticEval {
    double loglik = 0.0;
    Vector gradient;
    Matrix hessian;  // negative Hessian (information)
};

inline double logistic_loglik(const Vector& y01, const Matrix& design, const Vector& offset, const Vector& b) {
    const Vector eta = offset + design * b;
    double ll = 0.0;
    for (Index i = 0; i < eta.size(); ++i) ll += bernoulli::cell_loglik(y01(i), eta(i));
    return ll;
}

inline LogisticEval logistic_eval(const Vector& y01, const Matrix& design, const Vector& offset, const Vector& b) {
    const Vector eta = offset + design * b;
    LogisticEval ev;
    Vector resid(eta.size());
    Vector weight(eta.size());
    for (Index i = 0; i < eta.size(); ++i) {
        ev.loglik += bernoulli::cell_loglik(y01(i), eta(i));
        resid(i) = bernoulli::cell_residual(y01(i), eta(i));
        weight(i) = bernoulli::cell_weight(eta(i));
    }
    ev.gradient = design.transpose() * resid;
    ev.hessian = design.transpose() * weight.asDiagonal() * design;
    return ev;
}

}  // namespace detail

/// Maximum-likelihood logistic regression with a fixed offset, optional
/// intercept and through-origin columns Z, by Newton-Raphson with step
/// halving.
///
/// Separation is flagged when the coefficients leave the box
/// |b| <= coefficient_bound, when the fit stops on a flat likelihood while
/// the Newton step is still large (the likelihood keeps rising along a
/// direction), or when the final coefficients push a linear predictor into
/// the clamp. In every case the fit returns the last stable iterate, the
/// latest one whose linear predictors all stay inside the clamp (cells whose
/// offset alone is beyond it are ignored), rather than failing.
inline LogisticFit fit_logistic(const Vector& y01, const Matrix& z, const Vector& offset, bool intercept,
                                const LogisticOptions& opts = {}) {
    const Index m = y01.size();
    require(m >= 1, ErrorCode::empty_data, "logistic fit needs at least one observation");
    require(z.rows() == m && offset.size() == m, ErrorCode::dimension_mismatch,
            "logistic fit: response, design and offset lengths differ");
    for (Index i = 0; i < m; ++i)
        require(y01(i) == 0.0 || y01(i) == 1.0, ErrorCode::validation, "logistic response must be 0/1");

    const Index q = z.cols() + (intercept ? 1 : 0);
    Matrix design(m, q);
    if (intercept) design.col(0).setOnes();
    if (z.cols() > 0) design.rightCols(z.cols()) = z;

    LogisticFit fit;
    Vector b = Vector::Zero(q);
    if (q == 0) {
        fit.coefficients = b;
        fit.loglik = detail::logistic_loglik(y01, design, offset, b);
        fit.converged = true;
        fit.trace.push_back(fit.loglik);
        return fit;
    }
    {
        Eigen::ColPivHouseholderQR<Matrix> rank_check(design);
        rank_check.setThreshold(1e-10);
        require(rank_check.rank() == q, ErrorCode::collinearity, "logistic design matrix is rank deficient");
    }

    detail::LogisticEval ev = detail::logistic_eval(y01, design, offset, b);
    fit.trace.push_back(ev.loglik);
    auto inside_clamp = [&](const Vector& coef) {
        const Vector eta = offset + design * coef;
        for (Index i = 0; i < m; ++i)
            if (std::abs(eta(i)) >= bernoulli::eta_clamp && std::abs(offset(i)) < bernoulli::eta_clamp) return false;
        return true;
    };
    Vector stable = b;
    double stable_ll = ev.loglik;
    double last_rel_change = std::numeric_limits<double>::infinity();
    bool stopped = false;
    Vector delta;

    for (int iter = 0;; ++iter) {
        const double gnorm = ev.gradient.norm();
        const Eigen::LLT<Matrix> llt(ev.hessian);
        const bool hessian_ok = llt.info() == Eigen::Success;
        delta = hessian_ok ? Vector(llt.solve(ev.gradient)) : Vector(Vector::Zero(q));
        if (gnorm < opts.grad_tol || last_rel_change < opts.rel_tol) {
            stopped = gnorm < 1e-8 * (1.0 + std::abs(ev.loglik));
            break;
        }
        if (!hessian_ok || iter >= opts.max_iterations) break;

        double t = 1.0;
        bool accepted = false;
        Vector candidate;
        double cand_ll = 0.0;
        for (int h = 0; h <= opts.max_halvings; ++h) {
            candidate = b + t * delta;
            cand_ll = detail::logistic_loglik(y01, design, offset, candidate);
            if (cand_ll >= ev.loglik) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break;
        if (candidate.cwiseAbs().maxCoeff() > opts.coefficient_bound) {
            fit.separation_detected = true;
            break;
        }
        last_rel_change = std::abs(cand_ll - ev.loglik) / std::max(std::abs(ev.loglik), 1e-300);
        b = candidate;
        ev = detail::logistic_eval(y01, design, offset, b);
        fit.trace.push_back(ev.loglik);
        if (inside_clamp(b)) stable = b, stable_ll = ev.loglik;
        fit.iterations = iter + 1;
    }

    if (!fit.separation_detected && delta.size() == q &&
        delta.cwiseAbs().maxCoeff() >= 1e-3 * (1.0 + b.cwiseAbs().maxCoeff()))
        fit.separation_detected = true;
    if (!fit.separation_detected) {
        const Vector eta = offset + design * b;
        for (Index i = 0; i < m; ++i) {
            if (std::abs(eta(i)) >= bernoulli::eta_clamp && std::abs(offset(i)) < bernoulli::eta_clamp) {
                fit.separation_detected = true;
                break;
            }
        }
    }
    fit.capped = fit.separation_detected;
    fit.converged = stopped;
    if (fit.separation_detected) fit.converged = false;
    fit.coefficients = b;
    fit.loglik = ev.loglik;
    // capped fits fall back to the last iterate whose linear predictors stay
    // inside the clamp
    if (fit.separation_detected) {
        fit.coefficients = stable;
        fit.loglik = stable_ll;
    }
    return fit;
}

}  // namespace sdr
