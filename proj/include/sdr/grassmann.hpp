#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "sdr/data_model.hpp"

namespace sdr {

/// Objective value and its Euclidean gradient (p x d) at a basis.
struct ObjectiveValue {
    double value = 0.0;
    Matrix gradient;
};

using GrassmannObjective = std::function<ObjectiveValue(const Matrix&)>;

enum class Retraction { qr, polar };

struct GrassmannOptions {
    int max_iters = 500;
    /// Riemannian gradient-norm tolerance; 1e-7 * (1 + |value|) when unset.
    std::optional<double> tol;
    double initial_step = 1.0;
    int max_shrinks = 25;
    /// After the first iteration, start each line search from the
    /// Barzilai-Borwein step instead of `initial_step`. A fixed initial step
    /// can zig-zag for hundreds of iterations on well-separated problems.
    bool barzilai_borwein = true;
    /// Polar (U Vᵀ from the thin SVD) commutes with right rotations of the
    /// basis, QR does not. That matters when the objective depends on the
    /// basis and not only on its span, as the Γ-step does with ν held fixed.
    Retraction retraction = Retraction::polar;
};

struct GrassmannTraceEntry {
    double value = 0.0;
    double gradient_norm = 0.0;
    double step = 0.0;  // step accepted to reach this iterate; 0 for the start
};

struct GrassmannResult {
    ReductionBasis basis;
    std::vector<GrassmannTraceEntry> trace;
    bool converged = false;
};

class NumericalFailure : public Error {
public:
    NumericalFailure(const std::string& message, std::vector<GrassmannTraceEntry> trace)
        : Error(ErrorCode::numerical_failure, message), trace_(std::move(trace)) {}

    const std::vector<GrassmannTraceEntry>& trace() const noexcept { return trace_; }

private:
    std::vector<GrassmannTraceEntry> trace_;
};

/// Projection of a Euclidean gradient onto the tangent space at G:
/// (I - G Gᵀ) grad.
inline Matrix riemannian_gradient(const Matrix& g, const Matrix& euclidean) {
    return euclidean - g * (g.transpose() * euclidean);
}

/// QR retraction of G + t * direction back onto orthonormal bases.
inline Matrix qr_retract(const Matrix& g, const Matrix& direction, double t) {
    return linalg::thin_qr(g + t * direction).q;
}

/// Polar retraction: the orthonormal factor U Vᵀ of G + t * direction.
inline Matrix polar_retract(const Matrix& g, const Matrix& direction, double t) {
    const Eigen::JacobiSVD<Matrix> svd(g + t * direction, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return svd.matrixU() * svd.matrixV().transpose();
}

/// First-order ascent over d-dimensional subspaces of R^p: projected gradient
/// step, retraction, backtracking on the step until the objective
/// increases. The objective value is non-decreasing along the trace.
inline GrassmannResult grassmann_maximize(const GrassmannObjective& objective, const ReductionBasis& start,
                                          const GrassmannOptions& opts = {}) {
    std::vector<GrassmannTraceEntry> trace;
    auto checked = [&](const Matrix& g) {
        ObjectiveValue ov = objective(g);
        if (!std::isfinite(ov.value) || !ov.gradient.allFinite())
            throw NumericalFailure("objective or gradient is not finite", trace);
        require(ov.gradient.rows() == g.rows() && ov.gradient.cols() == g.cols(), ErrorCode::dimension_mismatch,
                "objective gradient has the wrong shape");
        return ov;
    };

    Matrix g = start.matrix();
    ObjectiveValue current = checked(g);
    double last_step = 0.0;
    bool converged = false;
    Matrix prev_g;
    Matrix prev_rgrad;

    for (int iter = 0;; ++iter) {
        const Matrix rgrad = riemannian_gradient(g, current.gradient);
        const double gnorm = rgrad.norm();
        trace.push_back({current.value, gnorm, last_step});
        const double tol = opts.tol ? *opts.tol : 1e-7 * (1.0 + std::abs(current.value));
        if (gnorm < tol) {
            converged = true;
            break;
        }
        if (iter >= opts.max_iters) break;

        double t = opts.initial_step;
        if (opts.barzilai_borwein && iter > 0) {
            // previous quantities re-expressed against the current basis, so
            // the step does not depend on which basis QR returned
            const Matrix align = prev_g.transpose() * g;
            const Matrix ds = g - prev_g * align;
            const double curvature = std::abs((ds.array() * (rgrad - prev_rgrad * align).array()).sum());
            if (curvature > 0.0) t = std::clamp(ds.squaredNorm() / curvature, 1e-12, 1e12);
        }
        prev_g = g;
        prev_rgrad = rgrad;
        bool accepted = false;
        for (int s = 0; s <= opts.max_shrinks; ++s) {
            Matrix candidate =
                opts.retraction == Retraction::qr ? qr_retract(g, rgrad, t) : polar_retract(g, rgrad, t);
            ObjectiveValue cand = checked(candidate);
            if (cand.value > current.value) {
                g = std::move(candidate);
                current = std::move(cand);
                last_step = t;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        // no ascent at any trial step: stationary to working precision
        if (!accepted) break;
    }
    return GrassmannResult{ReductionBasis(g), std::move(trace), converged};
}

}  // namespace sdr
