#pragma once

// Closed-form layer: ADK statistics over the Gaussian field marginal, the
// cumulant yield formula, classical and rate-weighted cutoff laws, leading
// order variance ratio, classical three-step trajectories, and the
// two-channel cutoff-variance model.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "error.hpp"
#include "fieldgen.hpp"
#include "quadrature.hpp"
#include "units.hpp"

namespace sqhhg {

/// Coefficient of the classical cutoff law Ip + 3.17 Up.
inline constexpr double kCutoffLawCoefficient = 3.17;

inline double ponderomotive_energy(double e_abs, double omega_au) { return e_abs * e_abs / (4.0 * omega_au * omega_au); }

// ---------------------------------------------------------------------------
// Gauss-Hermite quadrature
// ---------------------------------------------------------------------------

struct GaussHermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;  // for integral of exp(-z^2) f(z)
};

/// Nodes by Newton iteration on orthonormal Hermite functions (polynomials
/// times exp(-z^2/2), which keeps the recurrence finite for large n).
inline GaussHermiteRule gauss_hermite(std::size_t n)
{
    require(n >= 1, ErrorKind::invalid_parameter, "Gauss-Hermite rule needs at least one node");
    constexpr double pi_quarter = 0.7511255444649425;  // pi^{-1/4}
    GaussHermiteRule rule;
    rule.nodes.assign(n, 0.0);
    rule.weights.assign(n, 0.0);
    const double nd = static_cast<double>(n);
    const std::size_t half = (n + 1) / 2;
    double z = 0.0;
    for (std::size_t i = 0; i < half; ++i) {
        if (i == 0) z = std::sqrt(2.0 * nd + 1.0) - 1.85575 * std::pow(2.0 * nd + 1.0, -1.0 / 6.0);
        else if (i == 1) z -= 1.14 * std::pow(nd, 0.426) / z;
        else if (i == 2) z = 1.86 * z - 0.86 * rule.nodes[0];
        else if (i == 3) z = 1.91 * z - 0.91 * rule.nodes[1];
        else z = 2.0 * z - rule.nodes[i - 2];
        double derivative = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p1 = pi_quarter * std::exp(-0.5 * z * z);
            double p2 = 0.0;
            for (std::size_t j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                const double jd = static_cast<double>(j);
                p1 = z * std::sqrt(2.0 / jd) * p2 - std::sqrt((jd - 1.0) / jd) * p3;
            }
            derivative = std::sqrt(2.0 * nd) * p2;
            const double previous = z;
            z = previous - p1 / (derivative - z * p1);
            if (std::abs(z - previous) <= 1e-15 * std::max(1.0, std::abs(z))) break;
        }
        rule.nodes[i] = z;
        rule.nodes[n - 1 - i] = -z;
        rule.weights[i] = 2.0 * std::exp(-z * z) / (derivative * derivative);
        rule.weights[n - 1 - i] = rule.weights[i];
    }
    return rule;
}

/// E[f(E)] for E ~ Normal(mean, variance) with an n-node rule.
template <class F>
double gaussian_expectation(F&& f, double mean, double variance, std::size_t nodes)
{
    if (variance == 0.0) return f(mean);
    const auto rule = gauss_hermite(nodes);
    const double scale = std::sqrt(2.0 * variance);
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes; ++i) sum += rule.weights[i] * f(mean + scale * rule.nodes[i]);
    return sum / std::sqrt(units::kPi);
}

/// Relative change tolerated when the node count is doubled.
inline constexpr double kQuadratureTolerance = 1e-6;

template <class F>
double converged_gaussian_expectation(F&& f, double mean, double variance, std::size_t nodes)
{
    const double coarse = gaussian_expectation(f, mean, variance, nodes);
    if (variance == 0.0) return coarse;
    const double fine = gaussian_expectation(f, mean, variance, 2 * nodes);
    if (std::abs(fine - coarse) > kQuadratureTolerance * std::abs(fine)) {
        fail(ErrorKind::convergence, "Gauss-Hermite quadrature changed under node doubling");
    }
    return fine;
}

// ---------------------------------------------------------------------------
// ADK statistics
// ---------------------------------------------------------------------------

struct AdkParams {
    double ip_au = 0.0;
    double b_au = 0.0;  // (2/3)(2 Ip)^{3/2}

    static AdkParams make(double ip_au)
    {
        require(ip_au > 0.0, ErrorKind::invalid_parameter, "ionization potential must be positive");
        return {ip_au, 2.0 / 3.0 * std::pow(2.0 * ip_au, 1.5)};
    }
};

/// Tunnelling rate with a constant prefactor: exp(-B / |E|).
inline double adk_rate(double e_abs, const AdkParams& params)
{
    require(e_abs > 0.0, ErrorKind::invalid_parameter, "ADK rate requires a positive field");
    return std::exp(-params.b_au / e_abs);
}

namespace detail {
inline double adk_rate_or_zero(double e, const AdkParams& params)
{
    return e > 0.0 ? std::exp(-params.b_au / e) : 0.0;
}
}  // namespace detail

/// Gaussian field distribution at the pulse crest.
struct FieldMarginal {
    double mean_e0_au = 0.0;
    double var_au = 0.0;
    double e_vac_au = 0.0;

    double vacuum_var() const { return e_vac_au * e_vac_au * kVacuumVariance; }
};

inline FieldMarginal field_marginal(double r, double theta, double e0_au, double e_vac_au)
{
    return {e0_au, e_vac_au * e_vac_au * covariance_of(r, theta).sxx, e_vac_au};
}

inline constexpr std::size_t kDefaultQuadratureNodes = 64;

/// <Gamma> over the marginal divided by <Gamma> at vacuum amplitude variance.
inline double yield_numeric(const FieldMarginal& marginal, const AdkParams& adk,
                            std::size_t nodes = kDefaultQuadratureNodes)
{
    require(marginal.var_au >= 0.0, ErrorKind::invalid_parameter, "field variance must be non-negative");
    require(nodes >= 64, ErrorKind::invalid_parameter, "yield quadrature uses at least 64 nodes");
    auto rate = [&](double e) { return detail::adk_rate_or_zero(e, adk); };
    const double squeezed = converged_gaussian_expectation(rate, marginal.mean_e0_au, marginal.var_au, nodes);
    const double vacuum = converged_gaussian_expectation(rate, marginal.mean_e0_au, marginal.vacuum_var(), nodes);
    return squeezed / vacuum;
}

struct CumulantCoeffs {
    double e0_au = 0.0;
    double e_vac_au = 0.0;
    double sigma_vac_sq = 0.0;  // E_vac^2 / 2
    double eta = 0.0;           // sigma_vac^2 (B^2 / 2E0^4 - B / E0^3)

    static CumulantCoeffs make(double e0_au, double e_vac_au, const AdkParams& adk)
    {
        require(e0_au > 0.0 && e_vac_au > 0.0, ErrorKind::invalid_parameter, "fields must be positive");
        const double b = adk.b_au;
        const double sigma_vac_sq = 0.5 * e_vac_au * e_vac_au;
        const double bracket = b * b / (2.0 * std::pow(e0_au, 4)) - b / std::pow(e0_au, 3);
        return {e0_au, e_vac_au, sigma_vac_sq, sigma_vac_sq * bracket};
    }
};

/// Small parameter: amplitude-quadrature standard deviation of the field
/// relative to E0.
inline double fluctuation_epsilon(double r, double theta, double e_vac_au, double e0_au)
{
    return std::sqrt(covariance_of(r, theta).sxx) * e_vac_au / e0_au;
}

/// Guard on the small-parameter expansions.
inline constexpr double kEpsilonValidityLimit = 0.2;

struct AnalyticYield {
    double ratio = 1.0;
    double epsilon = 0.0;
    bool outside_validity = false;
};

/// exp[eta (2 sigma_X^2 - 1)], the second-order cumulant yield.
inline AnalyticYield yield_analytic(double r, double theta, const CumulantCoeffs& coeffs)
{
    const double sxx = covariance_of(r, theta).sxx;
    const double eps = fluctuation_epsilon(r, theta, coeffs.e_vac_au, coeffs.e0_au);
    return {std::exp(coeffs.eta * (2.0 * sxx - 1.0)), eps, eps > kEpsilonValidityLimit};
}

inline double classical_cutoff(double e_abs, double ip_au, double omega_au)
{
    return ip_au + kCutoffLawCoefficient * ponderomotive_energy(e_abs, omega_au);
}

/// Ip + 3.17 <Gamma Up> / <Gamma> over the field marginal.
inline double rate_weighted_cutoff_numeric(const FieldMarginal& marginal, const AdkParams& adk, double ip_au,
                                           double omega_au, std::size_t nodes = kDefaultQuadratureNodes)
{
    require(marginal.var_au >= 0.0, ErrorKind::invalid_parameter, "field variance must be non-negative");
    if (marginal.var_au == 0.0) return classical_cutoff(marginal.mean_e0_au, ip_au, omega_au);
    auto rate = [&](double e) { return detail::adk_rate_or_zero(e, adk); };
    auto weighted = [&](double e) { return detail::adk_rate_or_zero(e, adk) * ponderomotive_energy(e, omega_au); };
    const double num = converged_gaussian_expectation(weighted, marginal.mean_e0_au, marginal.var_au, nodes);
    const double den = converged_gaussian_expectation(rate, marginal.mean_e0_au, marginal.var_au, nodes);
    return ip_au + kCutoffLawCoefficient * num / den;
}

struct CutoffShiftPrediction {
    double cutoff_au = 0.0;
    double shift_au = 0.0;
    double epsilon = 0.0;
    bool outside_validity = false;
};

/// Ip + 3.17 Up(E0) [1 + eps^2 (1 + 2B/E0)] with eps from the amplitude
/// quadrature at angle theta.
inline CutoffShiftPrediction cutoff_shift_analytic(double r, double theta, const PulseSpec& pulse, double e_vac_au,
                                                   const AdkParams& adk)
{
    const double eps = fluctuation_epsilon(r, theta, e_vac_au, pulse.e0_au);
    const double base = kCutoffLawCoefficient * ponderomotive_energy(pulse.e0_au, pulse.omega_au);
    const double shift = base * eps * eps * (1.0 + 2.0 * adk.b_au / pulse.e0_au);
    return {adk.ip_au + base + shift, shift, eps, eps > kEpsilonValidityLimit};
}

/// sigma_X^2(r, theta) / (1/2): the cutoff-variance ratio at leading order.
inline double variance_ratio_leading(double r, double theta)
{
    return covariance_of(r, theta).sxx / kVacuumVariance;
}

// ---------------------------------------------------------------------------
// Three-step trajectories in E(t) = E0 cos(wt)
// ---------------------------------------------------------------------------

struct TrajectoryResult {
    double ionization_phase = 0.0;  // rad, relative to the field crest
    bool returned = false;
    double return_phase = std::numeric_limits<double>::quiet_NaN();
    double return_energy_over_up = std::numeric_limits<double>::quiet_NaN();
    double harmonic_energy_au = std::numeric_limits<double>::quiet_NaN();  // Ip + return kinetic energy
    double dreturn_denergy = std::numeric_limits<double>::quiet_NaN();     // dH/dE0 at fixed phase
    double dreturn_dtion = std::numeric_limits<double>::quiet_NaN();       // dH/dt_ion
};

/// Latest return searched for, in optical cycles after ionization.
inline constexpr double kMaxReturnCycles = 1.25;

namespace detail {

/// Electron position in units of E0/w^2 for birth at phase phi0 at rest.
inline double excursion(double phase, double phi0)
{
    return std::cos(phase) - std::cos(phi0) + std::sin(phi0) * (phase - phi0);
}

inline std::optional<double> first_return_phase(double phi0)
{
    constexpr double step = 1e-3;
    const double limit = phi0 + kMaxReturnCycles * 2.0 * units::kPi;
    double a = phi0 + step;
    double fa = excursion(a, phi0);
    if (fa == 0.0) return std::nullopt;
    for (double b = a + step; b <= limit; b += step) {
        const double fb = excursion(b, phi0);
        if ((fa < 0.0) != (fb < 0.0)) {
            double lo = a;
            double hi = b;
            double flo = fa;
            for (int iter = 0; iter < 200 && hi - lo > 1e-15; ++iter) {
                const double mid = 0.5 * (lo + hi);
                const double fm = excursion(mid, phi0);
                if ((fm < 0.0) == (flo < 0.0)) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            return 0.5 * (lo + hi);
        }
        a = b;
        fa = fb;
    }
    return std::nullopt;
}

}  // namespace detail

/// Return kinetic energy / Up for birth at phase phi0, or NaN if no return.
inline double return_energy_over_up(double phi0)
{
    const auto ret = detail::first_return_phase(phi0);
    if (!ret) return std::numeric_limits<double>::quiet_NaN();
    const double dv = std::sin(*ret) - std::sin(phi0);
    return 2.0 * dv * dv;
}

inline std::vector<TrajectoryResult> three_step_trajectories(double e0_au, double omega_au, double ip_au,
                                                             std::span<const double> phase_grid)
{
    require(e0_au > 0.0 && omega_au > 0.0 && ip_au >= 0.0, ErrorKind::invalid_parameter,
            "trajectory parameters must be positive");
    const double up = ponderomotive_energy(e0_au, omega_au);
    std::vector<TrajectoryResult> out(phase_grid.size());
    for (std::size_t i = 0; i < phase_grid.size(); ++i) {
        auto& tr = out[i];
        tr.ionization_phase = phase_grid[i];
        const auto ret = detail::first_return_phase(phase_grid[i]);
        if (!ret) continue;
        tr.returned = true;
        tr.return_phase = *ret;
        const double dv = std::sin(*ret) - std::sin(phase_grid[i]);
        tr.return_energy_over_up = 2.0 * dv * dv;
        tr.harmonic_energy_au = ip_au + tr.return_energy_over_up * up;
        tr.dreturn_denergy = 2.0 * tr.return_energy_over_up * up / e0_au;
    }
    for (std::size_t i = 1; i + 1 < out.size(); ++i) {
        if (!(out[i - 1].returned && out[i].returned && out[i + 1].returned)) continue;
        const double dphi = phase_grid[i + 1] - phase_grid[i - 1];
        const double slope = (out[i + 1].return_energy_over_up - out[i - 1].return_energy_over_up) / dphi;
        out[i].dreturn_dtion = slope * up * omega_au;
    }
    return out;
}

/// Trajectory with the maximal return energy, refined by golden-section
/// search over birth phases in [0, pi/2).
inline TrajectoryResult cutoff_trajectory(double e0_au, double omega_au, double ip_au)
{
    const double golden = 0.5 * (std::sqrt(5.0) - 1.0);
    double lo = 0.05;
    double hi = 1.2;
    double c = hi - golden * (hi - lo);
    double d = lo + golden * (hi - lo);
    double fc = return_energy_over_up(c);
    double fd = return_energy_over_up(d);
    while (hi - lo > 1e-10) {
        if (fc > fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - golden * (hi - lo);
            fc = return_energy_over_up(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + golden * (hi - lo);
            fd = return_energy_over_up(d);
        }
    }
    const double phase = 0.5 * (lo + hi);
    const std::vector<double> grid{phase - 1e-5, phase, phase + 1e-5};
    return three_step_trajectories(e0_au, omega_au, ip_au, grid)[1];
}

// ---------------------------------------------------------------------------
// Two-channel cutoff variance
// ---------------------------------------------------------------------------

struct VariancePoint {
    double r = 0.0;
    double variance = 0.0;
    double weight = 1.0;
};

struct TwoChannelModel {
    double c_x = 0.0;
    double c_p = 0.0;
    std::optional<double> r_opt;
    double residual = 0.0;   // RMS residual / RMS of data
    bool poor_fit = false;   // residual above kPoorFitResidual
    bool at_boundary = false;  // a coefficient clamped at zero or r_opt outside the data span
};

inline constexpr double kPoorFitResidual = 0.30;

inline double two_channel_predict(double r, const TwoChannelModel& model)
{
    return model.c_x * std::exp(-2.0 * r) + model.c_p * std::exp(2.0 * r);
}

/// Weighted least squares for C_X e^{-2r} + C_P e^{2r} with C_X, C_P >= 0.
inline TwoChannelModel two_channel_fit(std::span<const VariancePoint> points)
{
    std::vector<double> distinct;
    for (const auto& p : points) {
        require(std::isfinite(p.r) && std::isfinite(p.variance) && p.weight > 0.0, ErrorKind::invalid_parameter,
                "two-channel data must be finite with positive weights");
        if (std::none_of(distinct.begin(), distinct.end(), [&](double r) { return r == p.r; })) distinct.push_back(p.r);
    }
    require(distinct.size() >= 4, ErrorKind::insufficient_data, "two-channel fit needs at least four distinct r values");

    double suu = 0.0, suv = 0.0, svv = 0.0, suy = 0.0, svy = 0.0;
    for (const auto& p : points) {
        const double u = std::exp(-2.0 * p.r);
        const double v = std::exp(2.0 * p.r);
        suu += p.weight * u * u;
        suv += p.weight * u * v;
        svv += p.weight * v * v;
        suy += p.weight * u * p.variance;
        svy += p.weight * v * p.variance;
    }
    auto sse = [&](double cx, double cp) {
        double s = 0.0;
        for (const auto& p : points) {
            const double resid = p.variance - cx * std::exp(-2.0 * p.r) - cp * std::exp(2.0 * p.r);
            s += p.weight * resid * resid;
        }
        return s;
    };

    TwoChannelModel model;
    const double det = suu * svv - suv * suv;
    const double cx = (svv * suy - suv * svy) / det;
    const double cp = (suu * svy - suv * suy) / det;
    if (det > 0.0 && cx >= 0.0 && cp >= 0.0) {
        model.c_x = cx;
        model.c_p = cp;
    } else {
        const double only_x = std::max(0.0, suy / suu);
        const double only_p = std::max(0.0, svy / svv);
        if (sse(only_x, 0.0) <= sse(0.0, only_p)) model.c_x = only_x;
        else model.c_p = only_p;
        model.at_boundary = true;
    }

    if (model.c_x > 0.0 && model.c_p > 0.0) {
        model.r_opt = 0.25 * std::log(model.c_x / model.c_p);
        const auto [lo, hi] = std::minmax_element(distinct.begin(), distinct.end());
        if (*model.r_opt < *lo || *model.r_opt > *hi) model.at_boundary = true;
    }

    double resid2 = 0.0;
    double data2 = 0.0;
    for (const auto& p : points) {
        const double resid = p.variance - two_channel_predict(p.r, model);
        resid2 += resid * resid;
        data2 += p.variance * p.variance;
    }
    model.residual = data2 > 0.0 ? std::sqrt(resid2 / data2) : 0.0;
    model.poor_fit = model.residual > kPoorFitResidual;
    return model;
}

}  // namespace sqhhg
