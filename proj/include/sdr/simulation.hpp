#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "sdr/binary_pfc.hpp"
#include "sdr/linear_pfc.hpp"

namespace sdr {

/// Pseudo-random stream keyed by (seed, stream, substream). mt19937_64 and
/// seed_seq are fully specified by the standard, and the uniform and normal
/// transforms below are written out, so a key yields the same draws on every
/// platform and regardless of which thread consumes the stream.
class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream = 0) {
        std::seed_seq seq{lo(seed), hi(seed), lo(stream), hi(stream), lo(substream), hi(substream)};
        engine_.seed(seq);
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Standard normal by the Marsaglia polar method.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u = 0.0, v = 0.0, s = 0.0;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double factor = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * factor;
        has_spare_ = true;
        return u * factor;
    }

    bool bernoulli(double prob) { return uniform() < prob; }

private:
    static std::uint32_t lo(std::uint64_t x) { return static_cast<std::uint32_t>(x); }
    static std::uint32_t hi(std::uint64_t x) { return static_cast<std::uint32_t>(x >> 32); }

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Binary data from X | Y=y ~ Bernoulli(logit⁻¹(Γ β f_y)), Y ~ N(0, σ_Y²),
/// with f_y centered within the generated sample.
inline Dataset gen_binary_data(const SimulationConfig& cfg, std::uint64_t replicate_index) {
    cfg.validate();
    const ReductionBasis truth = cfg.truth();
    Rng rng(cfg.seed, replicate_index);
    Vector y(cfg.n);
    for (Index i = 0; i < cfg.n; ++i) y(i) = cfg.sigma_y * rng.normal();
    const FyMatrix fy = build_fy(y, cfg.basis);
    const Matrix eta = fy.f * cfg.beta.transpose() * truth.matrix().transpose();  // n x p
    Matrix x(cfg.n, cfg.p);
    for (Index i = 0; i < cfg.n; ++i)
        for (Index j = 0; j < cfg.p; ++j) x(i, j) = rng.bernoulli(bernoulli::sigmoid(eta(i, j))) ? 1.0 : 0.0;
    return Dataset::create(std::move(x), std::move(y));
}

enum class ScreeningScenario { linear, inverse_quadratic_no_linear, forward_quadratic_no_linear };

/// One signal predictor (X1) plus p-1 standard-normal noise columns.
///  linear:                       Y ~ N(0,1), X1 = Y + e
///  inverse_quadratic_no_linear:  Y ~ N(0,1), X1 = standardized (Y - Ȳ)² + e
///  forward_quadratic_no_linear:  X1 ~ N(0,1), Y = (X1 - X̄1)² + e
inline Dataset gen_screening_scenario(ScreeningScenario kind, Index n, Index p, std::uint64_t seed) {
    require(n >= 50, ErrorCode::validation, "screening scenarios need n >= 50");
    require(p >= 1, ErrorCode::validation, "screening scenarios need p >= 1");
    Rng rng(seed, 0x5c2eeULL);
    Matrix x(n, p);
    Vector y(n);
    switch (kind) {
    case ScreeningScenario::linear:
        for (Index i = 0; i < n; ++i) y(i) = rng.normal();
        for (Index i = 0; i < n; ++i) x(i, 0) = y(i) + rng.normal();
        break;
    case ScreeningScenario::inverse_quadratic_no_linear: {
        for (Index i = 0; i < n; ++i) y(i) = rng.normal();
        Vector sq = (y.array() - y.mean()).square().matrix();
        sq.array() -= sq.mean();
        sq /= std::sqrt(sq.squaredNorm() / static_cast<double>(n - 1));
        for (Index i = 0; i < n; ++i) x(i, 0) = sq(i) + rng.normal();
        break;
    }
    case ScreeningScenario::forward_quadratic_no_linear: {
        for (Index i = 0; i < n; ++i) x(i, 0) = rng.normal();
        const double mean = x.col(0).mean();
        for (Index i = 0; i < n; ++i) y(i) = (x(i, 0) - mean) * (x(i, 0) - mean) + rng.normal();
        break;
    }
    }
    for (Index j = 1; j < p; ++j)
        for (Index i = 0; i < n; ++i) x(i, j) = rng.normal();
    return Dataset::create(std::move(x), std::move(y));
}

// ---------------------------------------------------------------------------
// Angle study
// ---------------------------------------------------------------------------

struct ReplicateOutcome {
    int index = 0;
    bool failed = false;
    std::string error;
    double angle = 0.0;     // largest principal angle, degrees
    Vector all_angles;      // every principal angle, ascending
    long warnings = 0;      // sub-fit warnings, counted with multiplicity
    bool converged = false;
    int outer_iterations = 0;
    double loglik = 0.0;
};

struct StudyReport {
    SimulationConfig config;
    std::vector<ReplicateOutcome> replicates;  // ordered by index
    double mean_angle = 0.0;
    double sd_angle = 0.0;  // sample standard deviation, 0 for a single replicate
    long n_warnings = 0;
    int n_failed = 0;
    double wall_seconds = 0.0;

    /// Monte Carlo standard error of `mean_angle`.
    double standard_error() const {
        const int ok = static_cast<int>(replicates.size()) - n_failed;
        return ok > 0 ? sd_angle / std::sqrt(static_cast<double>(ok)) : 0.0;
    }
};

inline unsigned default_thread_count() {
    if (const char* env = std::getenv("PFC_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v >= 1) return static_cast<unsigned>(v);
        } catch (...) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

struct AngleStudyOptions {
    BinaryPfcOptions fit;
    unsigned threads = 0;  // 0 = default_thread_count()
};

inline ReplicateOutcome run_replicate(const SimulationConfig& cfg, const ReductionBasis& truth, int index,
                                      const BinaryPfcOptions& fit_opts) {
    ReplicateOutcome out;
    out.index = index;
    try {
        const Dataset data = gen_binary_data(cfg, static_cast<std::uint64_t>(index));
        const BinaryPfcState state = fit_binary_pfc(data, truth.d(), InitFromLinearPfc{cfg.basis}, fit_opts);
        out.all_angles = principal_angles(truth, state.gamma);
        out.angle = out.all_angles.maxCoeff();
        out.warnings = state.total_warnings();
        out.converged = state.converged;
        out.outer_iterations = state.outer_iterations;
        out.loglik = state.loglik;
    } catch (const std::exception& e) {
        out.failed = true;
        out.error = e.what();
    }
    return out;
}

/// Generates and fits every replicate, in parallel when threads > 1. Each
/// replicate draws from its own stream and writes its own slot, so results do
/// not depend on scheduling.
inline StudyReport run_angle_study(const SimulationConfig& cfg, const AngleStudyOptions& opts = {}) {
    cfg.validate();
    const auto started = std::chrono::steady_clock::now();
    const ReductionBasis truth = cfg.truth();
    StudyReport report;
    report.config = cfg;
    report.replicates.resize(static_cast<std::size_t>(cfg.replications));

    const unsigned threads =
        std::min<unsigned>(opts.threads ? opts.threads : default_thread_count(), static_cast<unsigned>(cfg.replications));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int k = next++; k < cfg.replications; k = next++)
            report.replicates[static_cast<std::size_t>(k)] = run_replicate(cfg, truth, k, opts.fit);
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }

    double sum = 0.0;
    int ok = 0;
    for (const auto& r : report.replicates) {
        report.n_warnings += r.warnings;
        if (r.failed) {
            ++report.n_failed;
            continue;
        }
        sum += r.angle;
        ++ok;
    }
    if (ok > 0) {
        report.mean_angle = sum / ok;
        double ss = 0.0;
        for (const auto& r : report.replicates)
            if (!r.failed) ss += (r.angle - report.mean_angle) * (r.angle - report.mean_angle);
        report.sd_angle = ok > 1 ? std::sqrt(ss / (ok - 1)) : 0.0;
    } else {
        report.mean_angle = std::numeric_limits<double>::quiet_NaN();
    }
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

/// Seed for one (preset, sigma_y) cell, so every cell draws independent data
/// and a cell's draws do not depend on which other cells share the run.
inline std::uint64_t cell_seed(std::uint64_t seed, GammaPreset preset, double sigma_y) {
    std::uint64_t bits = 0;
    static_assert(sizeof bits == sizeof sigma_y);
    std::memcpy(&bits, &sigma_y, sizeof bits);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(preset), static_cast<std::uint32_t>(bits),
                      static_cast<std::uint32_t>(bits >> 32)};
    std::uint32_t words[2];
    seq.generate(words, words + 2);
    return (static_cast<std::uint64_t>(words[1]) << 32) | words[0];
}

}  // namespace sdr
