#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sdr {

enum class ErrorCode {
    validation,
    degenerate_basis,
    collinear_basis,
    rank_deficiency,
    empty_reduction,
    dimension_mismatch,
    collinearity,
    empty_data,
    degenerate_latent_loading,
    numerical_failure,
    io,
};

constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::validation: return "validation";
    case ErrorCode::degenerate_basis: return "degenerate-basis";
    case ErrorCode::collinear_basis: return "collinear-basis";
    case ErrorCode::rank_deficiency: return "rank-deficiency";
    case ErrorCode::empty_reduction: return "screening-removed-everything";
    case ErrorCode::dimension_mismatch: return "dimension-mismatch";
    case ErrorCode::collinearity: return "collinearity";
    case ErrorCode::empty_data: return "empty-data";
    case ErrorCode::degenerate_latent_loading: return "degenerate-latent-loading";
    case ErrorCode::numerical_failure: return "numerical-failure";
    case ErrorCode::io: return "io";
    }
    return "unknown";
}

/// Numerical failures map to CLI exit status 2, everything else to 1.
constexpr bool is_numerical(ErrorCode code) {
    return code == ErrorCode::numerical_failure || code == ErrorCode::rank_deficiency ||
           code == ErrorCode::collinear_basis || code == ErrorCode::collinearity;
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& message) {
    if (!condition) throw Error(code, message);
}

}  // namespace sdr
