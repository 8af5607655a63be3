#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include <sqhhg/analytics.hpp>

using namespace sqhhg;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double pi = std::numbers::pi;
const PulseSpec pulse = PulseSpec::make(1500.0, 1.0e14, 2.0);
const double ip = units::ev_to_au(15.76);
const double e_vac = 1e-2 * pulse.e0_au;

std::vector<VariancePoint> synthetic_points(double cx, double cp)
{
    std::vector<VariancePoint> pts;
    for (double r : {0.5, 1.0, 1.5, 2.0, 2.5}) pts.push_back({r, cx * std::exp(-2.0 * r) + cp * std::exp(2.0 * r), 1.0});
    return pts;
}

}  // namespace

TEST_CASE("Gauss-Hermite rule integrates Gaussian moments")
{
    for (std::size_t n : {64u, 128u, 200u}) {
        const auto rule = gauss_hermite(n);
        double w = 0.0, z2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            w += rule.weights[i];
            z2 += rule.weights[i] * rule.nodes[i] * rule.nodes[i];
        }
        CHECK_THAT(w, WithinRel(std::sqrt(pi), 1e-12));
        CHECK_THAT(z2, WithinRel(std::sqrt(pi) / 2.0, 1e-12));
    }
    const double m4 = gaussian_expectation([](double x) { return x * x * x * x; }, 1.0, 2.0, 64);
    CHECK_THAT(m4, WithinRel(1.0 + 6.0 * 2.0 + 3.0 * 4.0, 1e-12));
}

TEST_CASE("ADK exponent")
{
    const auto adk = AdkParams::make(0.5792);
    CHECK_THAT(adk.b_au, WithinAbs(0.83119, 1e-5));
    const double e = 0.04;
    CHECK_THAT(std::log(adk_rate(2 * e, adk)) - std::log(adk_rate(e, adk)), WithinRel(adk.b_au / (2 * e), 1e-12));
    CHECK(adk_rate(1e-4, adk) < 1e-300);
    CHECK_THROWS_AS(adk_rate(0.0, adk), Error);
}

TEST_CASE("numeric yield ratio")
{
    const auto adk = AdkParams::make(ip);
    const auto coeffs = CumulantCoeffs::make(pulse.e0_au, e_vac, adk);
    CHECK(yield_numeric(field_marginal(0.0, 0.0, pulse.e0_au, e_vac), adk) == 1.0);

    const auto ps2 = yield_analytic(2.0, pi / 2, coeffs);
    CHECK_THAT(ps2.ratio, WithinRel(std::exp(coeffs.eta * (std::exp(4.0) - 1.0)), 1e-12));
    CHECK_THAT(yield_numeric(field_marginal(2.0, pi / 2, pulse.e0_au, e_vac), adk), WithinRel(ps2.ratio, 0.05));

    const double floor = yield_numeric(field_marginal(4.0, 0.0, pulse.e0_au, e_vac), adk);
    CHECK(std::abs(floor - std::exp(-coeffs.eta)) < 0.25 * coeffs.eta);

    double previous = 0.0;
    for (double r = 0.0; r <= 3.0; r += 0.25) {
        const double y = yield_numeric(field_marginal(r, pi / 2, pulse.e0_au, e_vac), adk);
        CHECK(y > previous);
        previous = y;
        CHECK(yield_numeric(field_marginal(r, 0.0, pulse.e0_au, e_vac), adk) <= 1.0);
    }
    CHECK_THROWS_AS(yield_numeric(field_marginal(1.0, 0.0, pulse.e0_au, e_vac), adk, 32), Error);
}

TEST_CASE("cumulant coefficient")
{
    const auto adk = AdkParams::make(ip);
    const double b = 2.0 / 3.0 * std::pow(2.0 * ip, 1.5);
    const double e0 = pulse.e0_au;
    const auto coeffs = CumulantCoeffs::make(e0, e_vac, adk);
    CHECK_THAT(coeffs.eta, WithinRel(0.5 * e_vac * e_vac * (b * b / (2 * std::pow(e0, 4)) - b / std::pow(e0, 3)), 1e-12));
    // The vacuum amplitude quoted for V_eff = (lambda/300)^3 gives eta of about 4e-3.
    CHECK_THAT(CumulantCoeffs::make(e0, 4.67e-4, adk).eta, WithinAbs(4.0e-3, 1e-4));
    CHECK(yield_analytic(0.0, 0.3, coeffs).ratio == 1.0);
}

TEST_CASE("cumulant yield tracks the quadrature inside the expansion domain")
{
    const auto adk = AdkParams::make(ip);
    const auto coeffs = CumulantCoeffs::make(pulse.e0_au, e_vac, adk);
    for (double r = 0.0; r <= 3.0; r += 0.1) {
        for (double theta = 0.0; theta < pi; theta += pi / 16) {
            const double sxx = covariance_of(r, theta).sxx;
            if (coeffs.eta * std::abs(2 * sxx - 1) > 0.4) continue;
            const double num = yield_numeric(field_marginal(r, theta, pulse.e0_au, e_vac), adk);
            CHECK_THAT(yield_analytic(r, theta, coeffs).ratio, WithinRel(num, 0.05));
        }
    }
}

TEST_CASE("classical and rate-weighted cutoffs")
{
    const double e0 = 0.05338, w = 0.030378, ip0 = 0.5792;
    const double h = classical_cutoff(e0, ip0, w);
    CHECK_THAT(units::au_to_ev(h), WithinAbs(82.3, 0.05));
    CHECK_THAT(h / w, WithinAbs(99.6, 0.1));
    CHECK(classical_cutoff(0.0, ip0, w) == ip0);
    CHECK_THAT(classical_cutoff(2 * e0, ip0, w) - ip0, WithinRel(4 * (h - ip0), 1e-12));

    const auto adk = AdkParams::make(ip);
    const FieldMarginal delta{pulse.e0_au, 0.0, e_vac};
    CHECK(rate_weighted_cutoff_numeric(delta, adk, ip, pulse.omega_au) == classical_cutoff(pulse.e0_au, ip, pulse.omega_au));

    const auto pred = cutoff_shift_analytic(1.5, pi / 2, pulse, e_vac, adk);
    CHECK_THAT(units::au_to_ev(pred.shift_au), WithinAbs(2.1, 0.1));
    const double numeric = rate_weighted_cutoff_numeric(field_marginal(1.5, pi / 2, pulse.e0_au, e_vac), adk, ip, pulse.omega_au);
    const double classical = classical_cutoff(pulse.e0_au, ip, pulse.omega_au);
    CHECK_THAT(numeric - classical, WithinRel(pred.shift_au, 0.10));
    CHECK(units::au_to_ev(cutoff_shift_analytic(1.5, 0.0, pulse, e_vac, adk).shift_au) < 0.1);
}

TEST_CASE("small parameter")
{
    CHECK_THAT(fluctuation_epsilon(1.5, pi / 2, e_vac, pulse.e0_au), WithinAbs(3.2e-2, 1e-3));
    CHECK_THAT(fluctuation_epsilon(3.0, pi / 2, e_vac, pulse.e0_au), WithinAbs(1.4e-1, 5e-3));
    CHECK_THAT(fluctuation_epsilon(0.0, 0.7, e_vac, pulse.e0_au), WithinRel(1e-2 / std::sqrt(2.0), 1e-12));
    const auto adk = AdkParams::make(ip);
    CHECK(cutoff_shift_analytic(3.5, pi / 2, pulse, e_vac, adk).outside_validity);
    CHECK(!cutoff_shift_analytic(1.5, pi / 2, pulse, e_vac, adk).outside_validity);
}

TEST_CASE("leading-order variance ratio")
{
    CHECK_THAT(variance_ratio_leading(1.5, 0.0), WithinAbs(0.049787, 5e-7));
    CHECK_THAT(variance_ratio_leading(1.0, pi / 2), WithinAbs(7.389056, 5e-7));
    CHECK(variance_ratio_leading(0.0, 1.0) == 1.0);
    for (double r = 0.0; r <= 3.0; r += 0.2) {
        CHECK_THAT(variance_ratio_leading(r, 0.0) * variance_ratio_leading(r, pi / 2), WithinAbs(1.0, 1e-12));
    }
}

TEST_CASE("three-step cutoff law")
{
    std::vector<double> phases(10000);
    for (std::size_t i = 0; i < phases.size(); ++i) phases[i] = 0.5 * pi * static_cast<double>(i) / phases.size();
    for (auto [e0, w] : {std::pair{pulse.e0_au, pulse.omega_au}, std::pair{0.1, 0.057}}) {
        const auto traj = three_step_trajectories(e0, w, ip, phases);
        double best = 0.0;
        for (const auto& t : traj) {
            if (t.returned) best = std::max(best, t.return_energy_over_up);
        }
        CHECK_THAT(best, WithinAbs(3.17, 0.01));
    }
    const auto cut = cutoff_trajectory(pulse.e0_au, pulse.omega_au, ip);
    const double degrees = cut.ionization_phase * 180.0 / pi;
    CHECK(degrees > 17.0);
    CHECK(degrees < 18.0);
    const double up = ponderomotive_energy(pulse.e0_au, pulse.omega_au);
    CHECK(std::abs(cut.dreturn_dtion) < 1e-4 * up * pulse.omega_au);
    CHECK_THAT(cut.dreturn_denergy, WithinRel(2.0 * cut.return_energy_over_up * up / pulse.e0_au, 1e-12));

    const std::vector<double> early{-0.3};
    CHECK(!three_step_trajectories(pulse.e0_au, pulse.omega_au, ip, early).front().returned);
}

TEST_CASE("two-channel model")
{
    TwoChannelModel m{600.0, 1.0, {}, 0.0, false, false};
    CHECK_THAT(two_channel_predict(0.0, m), WithinRel(601.0, 1e-15));
    CHECK_THAT(two_channel_predict(1.6, m), WithinAbs(48.99, 0.005));
    const double r_opt = 0.25 * std::log(600.0);
    CHECK_THAT(two_channel_predict(r_opt, m), WithinRel(2.0 * std::sqrt(600.0), 1e-12));

    const auto pts = synthetic_points(600.0, 1.0);
    const auto fit = two_channel_fit(pts);
    REQUIRE(fit.r_opt.has_value());
    CHECK_THAT(*fit.r_opt, WithinAbs(r_opt, 1e-6));
    CHECK(!fit.poor_fit);
    CHECK(!fit.at_boundary);

    auto scaled = pts;
    for (auto& p : scaled) p.variance *= 7.5;
    const auto fit_scaled = two_channel_fit(scaled);
    CHECK_THAT(fit_scaled.c_x, WithinRel(7.5 * fit.c_x, 1e-9));
    CHECK_THAT(*fit_scaled.r_opt, WithinAbs(*fit.r_opt, 1e-9));

    const auto doubled = two_channel_fit(synthetic_points(4 * 600.0, 4 * 1.0));
    CHECK_THAT(*doubled.r_opt, WithinAbs(*fit.r_opt, 1e-9));

    const auto pure = two_channel_fit(synthetic_points(600.0, 0.0));
    CHECK((pure.poor_fit || pure.at_boundary));

    CHECK_THROWS_AS(two_channel_fit(std::span(pts).first(3)), Error);
}
