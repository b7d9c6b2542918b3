#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "sdr/grassmann.hpp"
#include "sdr/linear_pfc.hpp"
#include "sdr/logistic.hpp"

namespace sdr {

// ---------------------------------------------------------------------------
// Log-likelihood of conditionally independent Bernoulli predictors
// ---------------------------------------------------------------------------

namespace detail {

inline void require_binary(const Matrix& x) {
    for (Index j = 0; j < x.cols(); ++j)
        for (Index i = 0; i < x.rows(); ++i)
            require(x(i, j) == 0.0 || x(i, j) == 1.0, ErrorCode::validation,
                    "non-binary entry at row " + std::to_string(i) + ", column " + std::to_string(j));
}

inline void require_shapes(const Matrix& x, const Vector& mu, const Matrix& g, const Matrix& nu) {
    require(mu.size() == x.cols() && g.rows() == x.cols() && nu.rows() == x.rows() && nu.cols() == g.cols(),
            ErrorCode::dimension_mismatch, "inconsistent shapes among X, mu, Gamma and nu");
}

/// n x p natural parameters mu_j + gamma_jᵀ nu_y.
inline Matrix natural_parameters(const Vector& mu, const Matrix& g, const Matrix& nu) {
    return (nu * g.transpose()).rowwise() + mu.transpose();
}

inline double loglik_unchecked(const Matrix& x, const Matrix& eta) {
    double ll = 0.0;
    for (Index j = 0; j < x.cols(); ++j)
        for (Index i = 0; i < x.rows(); ++i) ll += bernoulli::cell_loglik(x(i, j), eta(i, j));
    return ll;
}

inline Matrix residuals(const Matrix& x, const Matrix& eta) {
    Matrix r(x.rows(), x.cols());
    for (Index j = 0; j < x.cols(); ++j)
        for (Index i = 0; i < x.rows(); ++i) r(i, j) = bernoulli::cell_residual(x(i, j), eta(i, j));
    return r;
}

}  // namespace detail

/// Σ_y Σ_j [log q_j(y) + x_jy (μ_j + γ_jᵀν_y)], q_j(y) = 1 / (1 + exp(μ_j + γ_jᵀν_y)).
inline double bernoulli_loglik(const Matrix& x, const Vector& mu, const Matrix& g, const Matrix& nu) {
    detail::require_shapes(x, mu, g, nu);
    detail::require_binary(x);
    return detail::loglik_unchecked(x, detail::natural_parameters(mu, g, nu));
}

struct BernoulliGradients {
    Vector mu;     // p
    Matrix gamma;  // p x d, equals Rᵀ N
    Matrix nu;     // n x d, equals R Γ
};

/// Gradients of `bernoulli_loglik`, with R the n x p matrix of residuals
/// x_jy - p_j(y) and N the n x d matrix of nu rows.
inline BernoulliGradients bernoulli_gradients(const Matrix& x, const Vector& mu, const Matrix& g, const Matrix& nu) {
    detail::require_shapes(x, mu, g, nu);
    const Matrix r = detail::residuals(x, detail::natural_parameters(mu, g, nu));
    return BernoulliGradients{r.colwise().sum().transpose(), r.transpose() * nu, r * g};
}

// ---------------------------------------------------------------------------
// Block updates
// ---------------------------------------------------------------------------

struct BlockWarning {
    Index index = 0;
    std::string reason;
};

namespace detail {

inline std::optional<std::string> logistic_warning(const LogisticFit& fit) {
    if (fit.separation_detected) return std::string("separation");
    if (!fit.converged) return std::string("nonconvergence");
    return std::nullopt;
}

}  // namespace detail

struct NuStepResult {
    Matrix nu;      // n x d, columns centered
    Vector shift;   // column means removed from the raw fits
    std::vector<BlockWarning> warnings;
};

/// One through-origin logistic fit per observation: response x_y (length p),
/// design Γ, offset μ. Each fit starts from zero. When `previous` is given
/// (n x d) a row keeps its previous value if the fit ends at a lower row
/// log-likelihood, which happens when Newton stalls on a plateau of the
/// clamped likelihood. The rows are then centered; `shift` records the
/// removed column means.
inline NuStepResult nu_step(const Matrix& x, const Vector& mu, const ReductionBasis& g,
                            const Matrix& previous = Matrix()) {
    const Index n = x.rows();
    const Index d = g.d();
    require(mu.size() == x.cols() && g.p() == x.cols(), ErrorCode::dimension_mismatch,
            "nu_step: mu/Gamma do not match X");
    require(previous.size() == 0 || (previous.rows() == n && previous.cols() == d), ErrorCode::dimension_mismatch,
            "nu_step: previous nu has the wrong shape");

    NuStepResult out{Matrix(n, d), Vector::Zero(d), {}};
    LogisticOptions opts;
    for (Index i = 0; i < n; ++i) {
        const Vector response = x.row(i).transpose();
        const LogisticFit fit = fit_logistic(response, g.matrix(), mu, false, opts);
        out.nu.row(i) = fit.coefficients.transpose();
        if (previous.size() != 0) {
            const Vector before = previous.row(i).transpose();
            if (detail::logistic_loglik(response, g.matrix(), mu, before) >
                detail::logistic_loglik(response, g.matrix(), mu, fit.coefficients))
                out.nu.row(i) = before.transpose();
        }
        if (auto w = detail::logistic_warning(fit)) out.warnings.push_back({i, *w});
    }
    out.shift = out.nu.colwise().mean().transpose();
    out.nu.rowwise() -= out.shift.transpose();
    return out;
}

struct MuStepResult {
    Vector mu;
    std::vector<BlockWarning> warnings;
};

/// One intercept-only logistic fit per predictor with offsets base_j + γ_jᵀν_y.
/// The fitted intercept is an increment on `base`, so passing the previous μ
/// plus the ν-centering compensation Γ·shift starts every fit at the point
/// the ν-step left behind. With `base` empty the fits are relative to zero.
inline MuStepResult mu_step(const Matrix& x, const ReductionBasis& g, const Matrix& nu, const Vector& base = Vector()) {
    const Index p = x.cols();
    require(g.p() == p && nu.rows() == x.rows() && nu.cols() == g.d(), ErrorCode::dimension_mismatch,
            "mu_step: Gamma/nu do not match X");
    require(base.size() == 0 || base.size() == p, ErrorCode::dimension_mismatch, "mu_step: base has the wrong length");
    const Vector start = base.size() == 0 ? Vector::Zero(p) : base;

    Matrix offsets = nu * g.matrix().transpose();  // n x p
    offsets.rowwise() += start.transpose();
    const Matrix no_columns(x.rows(), 0);
    MuStepResult out{Vector(p), {}};
    LogisticOptions opts;
    for (Index j = 0; j < p; ++j) {
        const LogisticFit fit = fit_logistic(x.col(j), no_columns, offsets.col(j), true, opts);
        out.mu(j) = start(j) + fit.coefficients(0);
        if (auto w = detail::logistic_warning(fit)) out.warnings.push_back({j, *w});
    }
    return out;
}

struct GammaStepOptions {
    GrassmannOptions grassmann{.barzilai_borwein = true};
    /// When set, replaces grassmann.initial_step by 8 / λmax(NᵀN), the
    /// inverse of a bound on the objective's curvature, times two.
    bool curvature_scaled_step = true;
};

/// Grassmann ascent of the log-likelihood over Γ with μ and ν held fixed.
inline GrassmannResult gamma_step(const Matrix& x, const Vector& mu, const Matrix& nu, const ReductionBasis& current,
                                  const GammaStepOptions& opts = {}) {
    detail::require_shapes(x, mu, current.matrix(), nu);
    GrassmannOptions gopts = opts.grassmann;
    if (opts.curvature_scaled_step) {
        const double top = linalg::symmetric_eigen(nu.transpose() * nu).values(0);
        if (top > 0.0) gopts.initial_step = 8.0 / top;
    }
    const GrassmannObjective objective = [&](const Matrix& g) {
        const Matrix eta = detail::natural_parameters(mu, g, nu);
        return ObjectiveValue{detail::loglik_unchecked(x, eta), detail::residuals(x, eta).transpose() * nu};
    };
    return grassmann_maximize(objective, current, gopts);
}

// ---------------------------------------------------------------------------
// Alternating fitter
// ---------------------------------------------------------------------------

/// Start from linear PFC on X treated as continuous.
struct InitFromLinearPfc {
    BasisSpec basis = BasisSpec::linear();
};

struct InitExplicit {
    Vector mu;
    Matrix gamma;  // p x d, orthonormalized on use
    Matrix nu;     // n x d
};

using BinaryPfcInit = std::variant<InitFromLinearPfc, InitExplicit>;

struct BinaryPfcOptions {
    int max_outer = 200;
    double tol = 1e-6;
    GammaStepOptions gamma;
};

namespace detail {

class WarningLog {
public:
    void add(const char* step, const std::vector<BlockWarning>& ws, int cycle) {
        for (const auto& w : ws) {
            const auto key = std::make_tuple(std::string(step), w.index, w.reason);
            auto [it, inserted] = slot_.try_emplace(key, entries_.size());
            if (inserted) entries_.push_back(SubstepWarning{step, w.index, w.reason, cycle, 1});
            else ++entries_[it->second].count;
        }
    }
    std::vector<SubstepWarning> release() { return std::move(entries_); }

private:
    std::map<std::tuple<std::string, Index, std::string>, std::size_t> slot_;
    std::vector<SubstepWarning> entries_;
};

inline void require_fit_inputs(const Dataset& data, Index d) {
    require(data.all_binary(), ErrorCode::validation, "binary PFC needs every predictor to be 0/1");
    require(d >= 1 && d < data.p(), ErrorCode::validation, "binary PFC needs 1 <= d < p");
    std::string constant;
    for (Index j = 0; j < data.p(); ++j) {
        const auto col = data.x().col(j);
        if (col.minCoeff() == col.maxCoeff()) {
            if (!constant.empty()) constant += ", ";
            constant += data.column_names()[static_cast<std::size_t>(j)];
        }
    }
    require(constant.empty(), ErrorCode::validation, "constant predictor columns: " + constant);
}

}  // namespace detail

/// Alternating maximization of the Bernoulli log-likelihood: ν-step (n
/// through-origin fits), μ-step (p offset fits), Γ-step (Grassmann ascent),
/// until the relative improvement of a full cycle drops below `tol`.
inline BinaryPfcState fit_binary_pfc(const Dataset& data, Index d, const BinaryPfcInit& init = InitFromLinearPfc{},
                                     const BinaryPfcOptions& opts = {}) {
    detail::require_fit_inputs(data, d);
    const Matrix& x = data.x();
    const Index n = data.n();
    const Index p = data.p();

    Vector mu;
    Matrix nu;
    ReductionBasis g(Matrix::Identity(p, d));
    if (const auto* lin = std::get_if<InitFromLinearPfc>(&init)) {
        g = fit_pfc(data, build_fy(data.y(), lin->basis), d);
        const Vector means = x.colwise().mean().transpose();
        nu = (x.rowwise() - means.transpose()) * g.matrix();
        mu = means.unaryExpr([](double m) { return std::clamp(std::log(m / (1.0 - m)), -4.0, 4.0); });
    } else {
        const auto& ex = std::get<InitExplicit>(init);
        require(ex.gamma.rows() == p && ex.gamma.cols() == d && ex.mu.size() == p && ex.nu.rows() == n &&
                    ex.nu.cols() == d,
                ErrorCode::dimension_mismatch, "explicit initial state has the wrong shape");
        g = ReductionBasis(ex.gamma);
        // re-express nu against the orthonormalized basis so Γνᵀ is unchanged
        const Matrix coef = g.matrix().transpose() * ex.gamma;  // d x d, upper triangular
        nu = ex.nu * coef.transpose();
        const Vector shift = nu.colwise().mean().transpose();
        nu.rowwise() -= shift.transpose();
        mu = ex.mu + g.matrix() * shift;
    }

    BinaryPfcState state;
    detail::WarningLog log;
    double ll = detail::loglik_unchecked(x, detail::natural_parameters(mu, g.matrix(), nu));
    state.loglik_trace.push_back(ll);

    for (int cycle = 1; cycle <= opts.max_outer; ++cycle) {
        NuStepResult nu_res = nu_step(x, mu, g, nu);
        nu = std::move(nu_res.nu);
        MuStepResult mu_res = mu_step(x, g, nu, mu + g.matrix() * nu_res.shift);
        mu = std::move(mu_res.mu);
        g = gamma_step(x, mu, nu, g, opts.gamma).basis;

        log.add("nu", nu_res.warnings, cycle);
        log.add("mu", mu_res.warnings, cycle);
        if (!nu_res.warnings.empty() || !mu_res.warnings.empty()) ++state.warning_cycles;

        const double next = detail::loglik_unchecked(x, detail::natural_parameters(mu, g.matrix(), nu));
        if (next < ll - 1e-8) ++state.ascent_violations;
        state.loglik_trace.push_back(next);
        state.outer_iterations = cycle;
        const double rel = (next - ll) / std::max(std::abs(ll), 1e-300);
        ll = next;
        if (rel < opts.tol) {
            state.converged = true;
            break;
        }
    }

    state.mu = std::move(mu);
    state.gamma = std::move(g);
    state.nu = std::move(nu);
    state.loglik = ll;
    state.substep_warnings = log.release();
    return state;
}

}  // namespace sdr
