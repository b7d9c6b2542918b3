#pragma once

#include <boost/math/special_functions/beta.hpp>

#include <cmath>
#include <limits>

namespace sdr::stats {

/// Upper tail P(F > f) of the F(d1, d2) distribution, through the
/// regularized incomplete beta function I_x(d2/2, d1/2), x = d2 / (d2 + d1 f).
/// Evaluating the upper tail directly keeps tiny p-values accurate.
inline double f_upper_tail(double f, double d1, double d2) {
    if (std::isnan(f)) return std::numeric_limits<double>::quiet_NaN();
    if (f <= 0.0) return 1.0;
    if (std::isinf(f)) return 0.0;
    const double x = d2 / (d2 + d1 * f);
    return boost::math::ibeta(0.5 * d2, 0.5 * d1, x);
}

/// Two-sided p-value P(|T| > |t|) for Student's t with `df` degrees of freedom.
inline double t_two_sided(double t, double df) {
    if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
    if (std::isinf(t)) return 0.0;
    const double x = df / (df + t * t);
    return boost::math::ibeta(0.5 * df, 0.5, x);
}

}  // namespace sdr::stats
