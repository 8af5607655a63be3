#pragma once

// Squeezed-state quadrature statistics: closed-form covariance of the
// Wigner Gaussian, Monte Carlo sampling of quadrature pairs, and the
// P >= 0 classical benchmark used as the comparison ensemble.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "rng.hpp"

namespace sqhhg {

/// Quadrature variance of the vacuum (standard quantum limit).
inline constexpr double kVacuumVariance = 0.5;

struct SqueezeParams {
    double r = 0.0;
    double theta = 0.0;      // reduced to [0, pi)
    double alpha_mag = 0.0;
    double phi = 0.0;

    static SqueezeParams make(double r, double theta, double alpha_mag = 0.0, double phi = 0.0);
};

/// Reduces an angle to [0, pi); the squeezed covariance is pi-periodic.
inline double reduce_angle_mod_pi(double theta)
{
    constexpr double pi = 3.14159265358979323846;
    double reduced = std::fmod(theta, pi);
    if (reduced < 0.0) reduced += pi;
    if (reduced >= pi) reduced = 0.0;
    return reduced;
}

inline SqueezeParams SqueezeParams::make(double r, double theta, double alpha_mag, double phi)
{
    require(std::isfinite(r) && std::isfinite(theta) && std::isfinite(alpha_mag) && std::isfinite(phi),
            ErrorKind::invalid_parameter, "squeeze parameters must be finite");
    require(r >= 0.0, ErrorKind::invalid_parameter, "squeezing magnitude r must be >= 0");
    require(alpha_mag >= 0.0, ErrorKind::invalid_parameter, "displacement magnitude must be >= 0");
    return {r, reduce_angle_mod_pi(theta), alpha_mag, phi};
}

struct QuadratureCovariance {
    double sxx = kVacuumVariance;
    double spp = kVacuumVariance;
    double sxp = 0.0;

    /// sxx*spp - sxp^2 evaluated with an FMA-compensated product so the
    /// result is accurate to a few ulp even when both terms are large.
    double det() const noexcept
    {
        const double cross = sxp * sxp;
        const double cross_err = std::fma(-sxp, sxp, cross);  // cross - sxp^2, exact
        return std::fma(sxx, spp, -cross) + cross_err;
    }

    /// Variance of X cos(a) + P sin(a).
    double rotated_variance(double angle) const noexcept
    {
        const double c = std::cos(angle);
        const double s = std::sin(angle);
        return c * c * sxx + s * s * spp + 2.0 * s * c * sxp;
    }
};

struct QuadratureSample {
    double x = 0.0;
    double p = 0.0;
    std::uint64_t shot_index = 0;
};

namespace detail {

inline double step_ulps(double value, int steps)
{
    const double direction = steps > 0 ? HUGE_VAL : -HUGE_VAL;
    for (int i = 0; i < std::abs(steps); ++i) value = std::nextafter(value, direction);
    return value;
}

/// Among representable triples within two ulp of the rounded closed form,
/// picks the one whose determinant is closest to the minimum-uncertainty
/// value 1/4. Rounding the three entries independently otherwise leaves the
/// determinant off by up to ~2e-12 once e^{2r} reaches a few hundred.
inline QuadratureCovariance snap_to_minimum_uncertainty(QuadratureCovariance cov)
{
    if (cov.sxp == 0.0) return cov;
    QuadratureCovariance best = cov;
    double best_err = std::abs(cov.det() - 0.25);
    for (int dp = -2; dp <= 2; ++dp) {
        for (int dq = -2; dq <= 2; ++dq) {
            QuadratureCovariance trial{cov.sxx, step_ulps(cov.spp, dp), step_ulps(cov.sxp, dq)};
            const double err = std::abs(trial.det() - 0.25);
            if (err < best_err) {
                best = trial;
                best_err = err;
            }
        }
    }
    return best;
}

}  // namespace detail

/// Covariance of the squeezed Wigner Gaussian at squeezing (r, theta).
/// theta = 0 squeezes X (amplitude squeezing), theta = pi/2 squeezes P.
inline QuadratureCovariance covariance_of(double r, double theta)
{
    require(std::isfinite(r) && std::isfinite(theta), ErrorKind::invalid_parameter, "r and theta must be finite");
    require(r >= 0.0, ErrorKind::invalid_parameter, "squeezing magnitude r must be >= 0");
    const long double th = reduce_angle_mod_pi(theta);
    const long double squeezed = std::exp(-2.0L * r);
    const long double stretched = std::exp(2.0L * r);
    const long double c = std::cos(th);
    const long double s = std::sin(th);
    // sin(pi/2) cos(pi/2) is not exactly zero in floating point.
    const bool principal = th == 0.0L || th == static_cast<long double>(3.14159265358979323846 / 2.0);
    QuadratureCovariance cov;
    if (principal && th != 0.0L) {
        cov.sxx = static_cast<double>(0.5L * stretched);
        cov.spp = static_cast<double>(0.5L * squeezed);
        cov.sxp = 0.0;
        return cov;
    }
    cov.sxx = static_cast<double>(0.5L * (c * c * squeezed + s * s * stretched));
    cov.spp = static_cast<double>(0.5L * (s * s * squeezed + c * c * stretched));
    cov.sxp = static_cast<double>(0.5L * s * c * (stretched - squeezed));
    return detail::snap_to_minimum_uncertainty(cov);
}

/// Covariance of the most permissive P >= 0 single-mode field matching the
/// squeezed amplitude variance: X variance clipped at the vacuum level,
/// P pinned at the vacuum level, no cross-correlation.
inline QuadratureCovariance classical_benchmark_covariance(double r, double theta)
{
    const auto quantum = covariance_of(r, theta);
    return {std::max(quantum.sxx, kVacuumVariance), kVacuumVariance, 0.0};
}

/// Draws n samples from the bivariate Gaussian (mean, cov). Sample k comes
/// from substream (seed.master_seed, seed.shot_index + k).
inline std::vector<QuadratureSample> sample_gaussian(const QuadratureCovariance& cov, std::array<double, 2> mean,
                                                     std::size_t n, SeedSpec seed)
{
    require(n >= 1, ErrorKind::invalid_parameter, "sample count must be >= 1");
    require(cov.sxx > 0.0 && cov.spp > 0.0, ErrorKind::invalid_parameter, "variances must be positive");
    const double schur = cov.spp - cov.sxp * cov.sxp / cov.sxx;
    require(schur >= 0.0, ErrorKind::invalid_parameter, "covariance is not positive semidefinite");
    const double l11 = std::sqrt(cov.sxx);
    const double l21 = cov.sxp / l11;
    const double l22 = std::sqrt(schur);

    std::vector<QuadratureSample> samples;
    samples.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::uint64_t index = seed.shot_index + k;
        RandomStream stream({seed.master_seed, index});
        const double z1 = stream.next_normal();
        const double z2 = stream.next_normal();
        samples.push_back({mean[0] + l11 * z1, mean[1] + l21 * z1 + l22 * z2, index});
    }
    return samples;
}

/// Mean of the displaced state in quadrature space.
inline std::array<double, 2> displacement_mean(const SqueezeParams& params)
{
    return {params.alpha_mag * std::cos(params.phi), params.alpha_mag * std::sin(params.phi)};
}

inline std::vector<QuadratureSample> sample_wigner(const SqueezeParams& params, std::array<double, 2> mean,
                                                   std::size_t n, SeedSpec seed)
{
    return sample_gaussian(covariance_of(params.r, params.theta), mean, n, seed);
}

inline std::vector<QuadratureSample> sample_classical_benchmark(double r, double theta, std::array<double, 2> mean,
                                                                std::size_t n, SeedSpec seed)
{
    return sample_gaussian(classical_benchmark_covariance(r, theta), mean, n, seed);
}

/// Unbiased (n - 1) sample covariance.
inline QuadratureCovariance estimate_covariance(std::span<const QuadratureSample> samples)
{
    const std::size_t n = samples.size();
    require(n >= 2, ErrorKind::insufficient_data, "covariance estimate needs at least two samples");
    double mx = 0.0;
    double mp = 0.0;
    for (const auto& s : samples) {
        mx += s.x;
        mp += s.p;
    }
    mx /= static_cast<double>(n);
    mp /= static_cast<double>(n);
    double cxx = 0.0;
    double cpp = 0.0;
    double cxp = 0.0;
    for (const auto& s : samples) {
        const double dx = s.x - mx;
        const double dp = s.p - mp;
        cxx += dx * dx;
        cpp += dp * dp;
        cxp += dx * dp;
    }
    const double denom = static_cast<double>(n - 1);
    return {cxx / denom, cpp / denom, cxp / denom};
}

}  // namespace sqhhg
