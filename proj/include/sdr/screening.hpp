#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "sdr/data_model.hpp"
#include "sdr/stats.hpp"

namespace sdr {

/// One univariate regression. For inverse screening `slopes` holds the r
/// coefficients of X_j on f_y and `coefficient` is their max-abs value; for
/// forward screening `coefficient` is the raw slope of y on X_j and
/// `standardized` its t-statistic.
struct ScreeningRecord {
    Index index = 0;
    double statistic = 0.0;  // F (inverse) or t (forward)
    double p_value = 1.0;
    double coefficient = 0.0;
    double standardized = 0.0;
    Vector slopes;
    bool degenerate = false;
    std::string warning;
};

struct ScreeningResult {
    std::vector<Index> kept;
    std::vector<ScreeningRecord> per_predictor;
    ScreeningConfig config;
};

/// The keep rule, re-evaluable on a stored record.
inline bool passes(const ScreeningRecord& rec, const ScreeningConfig& cfg) {
    if (rec.degenerate) return false;
    if (cfg.criterion == ScreenCriterion::p_value) return rec.p_value < cfg.threshold;
    const double value = cfg.mode == ScreenMode::inverse ? rec.coefficient : std::abs(rec.standardized);
    return value > cfg.threshold;
}

class EmptyReductionError : public Error {
public:
    explicit EmptyReductionError(std::vector<ScreeningRecord> records)
        : Error(ErrorCode::empty_reduction, "no predictor passed screening"), records_(std::move(records)) {}

    const std::vector<ScreeningRecord>& records() const noexcept { return records_; }

private:
    std::vector<ScreeningRecord> records_;
};

namespace detail {

inline bool is_constant(const Vector& centered, const Vector& raw) {
    return !(centered.norm() > 64.0 * std::numeric_limits<double>::epsilon() * std::max(raw.norm(), 1e-300));
}

inline ScreeningResult finish(std::vector<ScreeningRecord> records, const ScreeningConfig& cfg) {
    ScreeningResult out;
    out.config = cfg;
    for (const auto& rec : records)
        if (passes(rec, cfg)) out.kept.push_back(rec.index);
    out.per_predictor = std::move(records);
    return out;
}

}  // namespace detail

/// Regress each X_j on [1, F] and test all r slopes jointly with an F test
/// on (r, n - r - 1) degrees of freedom.
inline ScreeningResult inverse_screen(const Dataset& data, const FyMatrix& fy, const ScreeningConfig& cfg) {
    cfg.validate();
    require(cfg.mode == ScreenMode::inverse, ErrorCode::validation, "inverse_screen needs mode = inverse");
    require(fy.n() == data.n(), ErrorCode::dimension_mismatch, "f_y rows != number of observations");
    const Index n = data.n();
    const Index r = fy.r();
    require(n > r + 1, ErrorCode::validation, "inverse screening needs n > r + 1");

    // F is centered, so the intercept is orthogonal to it and the slopes come
    // from the centered predictor alone.
    const Eigen::ColPivHouseholderQR<Matrix> qr(fy.f);
    require(qr.rank() == r, ErrorCode::collinear_basis, "f_y is rank deficient");
    const double df_num = static_cast<double>(r);
    const double df_den = static_cast<double>(n - r - 1);

    std::vector<ScreeningRecord> records(static_cast<std::size_t>(data.p()));
    for (Index j = 0; j < data.p(); ++j) {
        ScreeningRecord& rec = records[static_cast<std::size_t>(j)];
        rec.index = j;
        const Vector raw = data.x().col(j);
        const Vector xc = (raw.array() - raw.mean()).matrix();
        if (detail::is_constant(xc, raw)) {
            rec.degenerate = true;
            rec.p_value = 1.0;
            rec.slopes = Vector::Zero(r);
            rec.warning = "constant predictor dropped";
            continue;
        }
        rec.slopes = qr.solve(xc);
        const Vector fitted = fy.f * rec.slopes;
        const double ssr = fitted.squaredNorm();
        const double rss = (xc - fitted).squaredNorm();
        rec.statistic = rss > 0.0 ? (ssr / df_num) / (rss / df_den) : std::numeric_limits<double>::infinity();
        rec.p_value = stats::f_upper_tail(rec.statistic, df_num, df_den);
        rec.coefficient = rec.slopes.cwiseAbs().maxCoeff();
        rec.standardized = rec.statistic;
    }
    return detail::finish(std::move(records), cfg);
}

/// Regress y on [1, X_j] for each j; two-sided t test on the slope.
inline ScreeningResult forward_screen(const Dataset& data, const ScreeningConfig& cfg) {
    cfg.validate();
    require(cfg.mode == ScreenMode::forward, ErrorCode::validation, "forward_screen needs mode = forward");
    const Index n = data.n();
    require(n > 2, ErrorCode::validation, "forward screening needs n > 2");
    const Vector yc = (data.y().array() - data.y().mean()).matrix();
    require(!detail::is_constant(yc, data.y()), ErrorCode::validation, "response is constant");
    const double df = static_cast<double>(n - 2);

    std::vector<ScreeningRecord> records(static_cast<std::size_t>(data.p()));
    for (Index j = 0; j < data.p(); ++j) {
        ScreeningRecord& rec = records[static_cast<std::size_t>(j)];
        rec.index = j;
        const Vector raw = data.x().col(j);
        const Vector xc = (raw.array() - raw.mean()).matrix();
        rec.slopes = Vector::Zero(1);
        if (detail::is_constant(xc, raw)) {
            rec.degenerate = true;
            rec.p_value = 1.0;
            rec.warning = "constant predictor dropped";
            continue;
        }
        const double sxx = xc.squaredNorm();
        const double slope = xc.dot(yc) / sxx;
        const double rss = (yc - slope * xc).squaredNorm();
        const double se = std::sqrt(rss / df / sxx);
        double t = 0.0;
        if (se > 0.0) t = slope / se;
        else if (slope != 0.0) t = std::copysign(std::numeric_limits<double>::infinity(), slope);
        rec.coefficient = slope;
        rec.slopes(0) = slope;
        rec.standardized = t;
        rec.statistic = t;
        rec.p_value = stats::t_two_sided(t, df);
    }
    return detail::finish(std::move(records), cfg);
}

/// Keep only the screened predictor columns, in their original order.
inline Dataset reduce_columns(const Dataset& data, const ScreeningResult& result) {
    if (result.kept.empty()) throw EmptyReductionError(result.per_predictor);
    const auto k = static_cast<Index>(result.kept.size());
    Matrix x(data.n(), k);
    std::vector<std::string> names;
    std::vector<bool> flags;
    for (Index c = 0; c < k; ++c) {
        const Index j = result.kept[static_cast<std::size_t>(c)];
        require(j >= 0 && j < data.p(), ErrorCode::dimension_mismatch, "kept index out of range");
        x.col(c) = data.x().col(j);
        names.push_back(data.column_names()[static_cast<std::size_t>(j)]);
        flags.push_back(data.is_binary(j));
    }
    return Dataset::create(std::move(x), data.y(), std::move(names), std::move(flags), data.response_name());
}

}  // namespace sdr
