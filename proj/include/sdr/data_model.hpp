#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sdr/error.hpp"
#include "sdr/linalg.hpp"

namespace sdr {

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

/// Predictor matrix (rows are observations) plus response. Immutable once
/// built; `create` validates shape, finiteness and binary flags.
class Dataset {
public:
    /// `binary_flags` empty means "detect": a column is flagged binary when
    /// every entry is exactly 0 or 1. A flag that is set explicitly must hold.
    static Dataset create(Matrix x, Vector y, std::vector<std::string> column_names = {},
                          std::vector<bool> binary_flags = {}, std::string response_name = "y") {
        require(x.rows() == y.size(), ErrorCode::dimension_mismatch,
                "predictor rows (" + std::to_string(x.rows()) + ") != response length (" +
                    std::to_string(y.size()) + ")");
        require(x.rows() >= 2, ErrorCode::validation, "need at least 2 observations");
        require(x.cols() >= 1, ErrorCode::validation, "need at least 1 predictor");
        require(x.allFinite(), ErrorCode::validation, "predictor matrix has non-finite entries");
        require(y.allFinite(), ErrorCode::validation, "response has non-finite entries");
        const auto p = static_cast<std::size_t>(x.cols());
        if (column_names.empty()) {
            column_names.reserve(p);
            for (std::size_t j = 0; j < p; ++j) column_names.push_back("X" + std::to_string(j + 1));
        }
        require(column_names.size() == p, ErrorCode::dimension_mismatch, "column name count != predictor count");

        std::vector<bool> detected(p);
        for (Index j = 0; j < x.cols(); ++j) {
            detected[static_cast<std::size_t>(j)] =
                (x.col(j).array() == 0.0 || x.col(j).array() == 1.0).all();
        }
        if (binary_flags.empty()) {
            binary_flags = detected;
        } else {
            require(binary_flags.size() == p, ErrorCode::dimension_mismatch, "binary flag count != predictor count");
            for (std::size_t j = 0; j < p; ++j) {
                require(!binary_flags[j] || detected[j], ErrorCode::validation,
                        "column '" + column_names[j] + "' is flagged binary but has entries other than 0/1");
            }
        }
        Dataset d;
        d.x_ = std::move(x);
        d.y_ = std::move(y);
        d.names_ = std::move(column_names);
        d.binary_ = std::move(binary_flags);
        d.response_name_ = std::move(response_name);
        return d;
    }

    const Matrix& x() const noexcept { return x_; }
    const Vector& y() const noexcept { return y_; }
    Index n() const noexcept { return x_.rows(); }
    Index p() const noexcept { return x_.cols(); }
    const std::vector<std::string>& column_names() const noexcept { return names_; }
    const std::string& response_name() const noexcept { return response_name_; }
    bool is_binary(Index j) const { return binary_[static_cast<std::size_t>(j)]; }
    const std::vector<bool>& binary_flags() const noexcept { return binary_; }

    bool all_binary() const {
        for (bool b : binary_)
            if (!b) return false;
        return true;
    }

private:
    Dataset() = default;

    Matrix x_;
    Vector y_;
    std::vector<std::string> names_;
    std::vector<bool> binary_;
    std::string response_name_;
};

// ---------------------------------------------------------------------------
// Basis functions of the response
// ---------------------------------------------------------------------------

enum class BasisKind { centered_linear, centered_linear_quadratic, custom_powers };

struct BasisSpec {
    BasisKind kind = BasisKind::centered_linear;
    std::vector<int> powers;  // custom_powers only
    double multiplier = 1.0;

    static BasisSpec linear(double c = 1.0) { return {BasisKind::centered_linear, {}, c}; }
    static BasisSpec quadratic(double c = 1.0) { return {BasisKind::centered_linear_quadratic, {}, c}; }
    static BasisSpec custom(std::vector<int> exps, double c = 1.0) {
        return {BasisKind::custom_powers, std::move(exps), c};
    }

    std::vector<int> exponents() const {
        switch (kind) {
        case BasisKind::centered_linear: return {1};
        case BasisKind::centered_linear_quadratic: return {1, 2};
        case BasisKind::custom_powers: return powers;
        }
        return {};
    }
};

/// Centered basis-function matrix f_y (n x r).
struct FyMatrix {
    Matrix f;
    BasisSpec spec;

    Index n() const noexcept { return f.rows(); }
    Index r() const noexcept { return f.cols(); }
};

/// Builds columns y^k - mean(y^k) for each exponent k, times the multiplier.
inline FyMatrix build_fy(const Vector& y, const BasisSpec& spec) {
    const std::vector<int> exps = spec.exponents();
    const Index n = y.size();
    const auto r = static_cast<Index>(exps.size());
    require(r >= 1, ErrorCode::validation, "basis needs at least one power");
    for (int e : exps) require(e >= 1, ErrorCode::validation, "basis powers must be >= 1");
    require(std::isfinite(spec.multiplier) && spec.multiplier != 0.0, ErrorCode::validation,
            "basis multiplier must be finite and nonzero");
    require(y.allFinite(), ErrorCode::validation, "response has non-finite entries");
    require(n >= r + 1, ErrorCode::validation,
            "need n >= r + 1 (n=" + std::to_string(n) + ", r=" + std::to_string(r) + ")");

    const double spread = y.maxCoeff() - y.minCoeff();
    require(spread > 0.0 && (y.array() - y.mean()).matrix().norm() > 64.0 * std::numeric_limits<double>::epsilon() * y.norm(),
            ErrorCode::degenerate_basis, "response is constant");

    Matrix f(n, r);
    for (Index k = 0; k < r; ++k) {
        const int e = exps[static_cast<std::size_t>(k)];
        Vector col = y.array().pow(static_cast<double>(e)).matrix();
        col.array() -= col.mean();
        // a second pass removes the residual mean left by rounding
        col.array() -= col.mean();
        f.col(k) = spec.multiplier * col;
    }
    require(linalg::thin_qr(f).rank == r, ErrorCode::collinear_basis, "basis columns are linearly dependent");
    return FyMatrix{std::move(f), spec};
}

// ---------------------------------------------------------------------------
// Reduction subspace
// ---------------------------------------------------------------------------

/// p x d matrix with orthonormal columns. Construction orthonormalizes its
/// input through a sign-fixed thin QR, so an already orthonormal input is
/// returned unchanged up to rounding.
class ReductionBasis {
public:
    explicit ReductionBasis(const Matrix& raw) {
        require(raw.cols() >= 1 && raw.cols() <= raw.rows(), ErrorCode::validation,
                "reduction basis needs 1 <= d <= p (got p=" + std::to_string(raw.rows()) +
                    ", d=" + std::to_string(raw.cols()) + ")");
        require(raw.allFinite(), ErrorCode::numerical_failure, "reduction basis has non-finite entries");
        const linalg::ThinQr qr = linalg::thin_qr(raw);
        require(qr.rank == raw.cols(), ErrorCode::rank_deficiency, "reduction basis input is not full column rank");
        g_ = qr.q;
    }

    const Matrix& matrix() const noexcept { return g_; }
    Index p() const noexcept { return g_.rows(); }
    Index d() const noexcept { return g_.cols(); }

private:
    Matrix g_;
};

// ---------------------------------------------------------------------------
// Screening configuration
// ---------------------------------------------------------------------------

enum class ScreenMode { forward, inverse };
enum class ScreenCriterion { p_value, abs_coefficient };

struct ScreeningConfig {
    ScreenMode mode = ScreenMode::inverse;
    ScreenCriterion criterion = ScreenCriterion::p_value;
    double threshold = 0.05;  // alpha for p_value, theta for abs_coefficient

    static ScreeningConfig p_value(ScreenMode mode, double alpha = 0.05) {
        return {mode, ScreenCriterion::p_value, alpha};
    }
    static ScreeningConfig coefficient(ScreenMode mode, double theta) {
        return {mode, ScreenCriterion::abs_coefficient, theta};
    }

    void validate() const {
        if (criterion == ScreenCriterion::p_value)
            require(threshold > 0.0 && threshold < 1.0, ErrorCode::validation, "alpha must lie in (0,1)");
        else
            require(threshold > 0.0 && std::isfinite(threshold), ErrorCode::validation, "theta must be positive");
    }
};

// ---------------------------------------------------------------------------
// Binary PFC state
// ---------------------------------------------------------------------------

struct SubstepWarning {
    std::string step;    // "nu", "mu" or "gamma"
    Index index = 0;     // observation (nu) or predictor (mu)
    std::string reason;
    int first_cycle = 0;
    int count = 1;
};

struct BinaryPfcState {
    Vector mu;
    ReductionBasis gamma{Matrix::Identity(1, 1)};
    Matrix nu;  // n x d, row y is nu_y
    double loglik = 0.0;
    int outer_iterations = 0;
    bool converged = false;
    std::vector<double> loglik_trace;  // after initialization, then after each cycle
    std::vector<SubstepWarning> substep_warnings;
    int warning_cycles = 0;      // cycles in which any sub-fit warned
    int ascent_violations = 0;   // cycles whose log-likelihood dropped by more than 1e-8

    long total_warnings() const {
        long total = 0;
        for (const auto& w : substep_warnings) total += w.count;
        return total;
    }
};

// ---------------------------------------------------------------------------
// Latent SPC model and its PFC form
// ---------------------------------------------------------------------------

struct LatentSpcModel {
    double beta0 = 0.0;
    double beta1 = 1.0;
    Vector alpha0;
    Vector alpha1;
    double var_eps = 0.0;
    Vector var_epsx;  // diagonal of Sigma_{eps_x}

    Index p() const noexcept { return alpha1.size(); }

    void validate() const {
        require(beta1 != 0.0 && std::isfinite(beta1), ErrorCode::validation, "beta1 must be finite and nonzero");
        require(std::isfinite(beta0), ErrorCode::validation, "beta0 must be finite");
        require(alpha1.size() >= 1, ErrorCode::validation, "alpha1 must be nonempty");
        require(alpha0.size() == alpha1.size() && var_epsx.size() == alpha1.size(), ErrorCode::dimension_mismatch,
                "alpha0, alpha1 and var_epsx must share length p");
        require(alpha0.allFinite() && alpha1.allFinite() && var_epsx.allFinite(), ErrorCode::validation,
                "model has non-finite entries");
        require(var_eps >= 0.0 && std::isfinite(var_eps), ErrorCode::validation, "var_eps must be >= 0");
        require((var_epsx.array() >= 0.0).all(), ErrorCode::validation, "var_epsx entries must be >= 0");
    }
};

struct PfcForm {
    Vector mu;
    Vector gamma;    // unit p-vector
    double c = 0.0;  // norm of the raw inverse slopes
    double ybar = 0.0;
    Matrix var_eps_star;  // p x p
    Matrix gamma0;        // p x (p-1)
    Matrix omega0;        // (p-1) x (p-1)
    double omega = 0.0;
};

// ---------------------------------------------------------------------------
// Simulation configuration
// ---------------------------------------------------------------------------

enum class GammaPreset { g1, g2, g3, g4, custom };

inline std::string_view to_string(GammaPreset g) {
    switch (g) {
    case GammaPreset::g1: return "G1";
    case GammaPreset::g2: return "G2";
    case GammaPreset::g3: return "G3";
    case GammaPreset::g4: return "G4";
    case GammaPreset::custom: return "custom";
    }
    return "custom";
}

inline GammaPreset parse_gamma_preset(std::string_view name) {
    if (name == "G1") return GammaPreset::g1;
    if (name == "G2") return GammaPreset::g2;
    if (name == "G3") return GammaPreset::g3;
    if (name == "G4") return GammaPreset::g4;
    throw Error(ErrorCode::validation, "unknown gamma preset '" + std::string(name) + "' (expected G1..G4)");
}

/// Unnormalized preset directions. G1/G2 need p >= 10, G3/G4 need p >= 20;
/// extra coordinates are zero.
inline Matrix gamma_preset_matrix(GammaPreset preset, Index p) {
    switch (preset) {
    case GammaPreset::g1: {
        require(p >= 10, ErrorCode::validation, "G1 needs p >= 10");
        Matrix g = Matrix::Zero(p, 1);
        g.topRows(10).setOnes();
        return g / std::sqrt(10.0);
    }
    case GammaPreset::g2: {
        require(p >= 10, ErrorCode::validation, "G2 needs p >= 10");
        Matrix g = Matrix::Zero(p, 1);
        const double head[10] = {1, 1, 1, 0.5, 0.5, -0.5, -0.5, -1, -1, -1};
        for (Index i = 0; i < 10; ++i) g(i, 0) = head[i];
        return g / std::sqrt(7.0);
    }
    case GammaPreset::g3: {
        require(p >= 20, ErrorCode::validation, "G3 needs p >= 20");
        Matrix g = Matrix::Zero(p, 1);
        const double level[4] = {1.0, 0.5, -0.5, -1.0};
        for (Index i = 0; i < 20; ++i) g(i, 0) = level[i / 5];
        return g / std::sqrt(12.5);
    }
    case GammaPreset::g4: {
        require(p >= 20, ErrorCode::validation, "G4 needs p >= 20");
        Matrix g = Matrix::Zero(p, 2);
        g.block(0, 0, 10, 1).setOnes();
        g.block(10, 1, 10, 1).setOnes();
        return g / std::sqrt(10.0);
    }
    case GammaPreset::custom: break;
    }
    throw Error(ErrorCode::validation, "custom gamma has no preset matrix");
}

/// One cell of the binary-predictor angle study.
struct SimulationConfig {
    GammaPreset preset = GammaPreset::g1;
    Matrix custom_truth;  // p x d, used when preset == custom
    Matrix beta = Matrix::Ones(1, 1);  // d x r
    BasisSpec basis = BasisSpec::linear();
    double sigma_y = 1.0;
    Index n = 200;
    Index p = 20;
    int replications = 50;
    std::uint64_t seed = 0;

    /// Reference design: G1-G3 with beta = 1 and a centered linear basis;
    /// G4 with beta = diag(1, 0.1) and a centered (y, y^2) basis.
    static SimulationConfig table1(GammaPreset preset, double sigma_y, int reps, std::uint64_t seed) {
        SimulationConfig cfg;
        cfg.preset = preset;
        cfg.sigma_y = sigma_y;
        cfg.replications = reps;
        cfg.seed = seed;
        if (preset == GammaPreset::g4) {
            cfg.beta = Matrix::Zero(2, 2);
            cfg.beta(0, 0) = 1.0;
            cfg.beta(1, 1) = 0.1;
            cfg.basis = BasisSpec::quadratic();
        }
        return cfg;
    }

    ReductionBasis truth() const {
        if (preset == GammaPreset::custom) return ReductionBasis(custom_truth);
        return ReductionBasis(gamma_preset_matrix(preset, p));
    }

    void validate() const {
        require(n >= 2 && p >= 1, ErrorCode::validation, "simulation needs n >= 2 and p >= 1");
        require(replications >= 1, ErrorCode::validation, "replications must be >= 1");
        require(sigma_y > 0.0 && std::isfinite(sigma_y), ErrorCode::validation, "sigma_y must be positive");
        const ReductionBasis g = truth();
        require(g.p() == p, ErrorCode::dimension_mismatch, "truth basis row count != p");
        const auto r = static_cast<Index>(basis.exponents().size());
        require(beta.rows() == g.d() && beta.cols() == r, ErrorCode::dimension_mismatch,
                "beta must be d x r (d=" + std::to_string(g.d()) + ", r=" + std::to_string(r) + ")");
    }
};

}  // namespace sdr
