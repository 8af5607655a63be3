#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include <sqhhg/spectral.hpp>

using namespace sqhhg;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

AccelerationTrace uniform_trace(std::size_t n, double dt, auto&& f)
{
    AccelerationTrace tr;
    tr.t_au.resize(n);
    tr.a_au.resize(n);
    tr.norm_history.assign(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        tr.t_au[i] = static_cast<double>(i) * dt;
        tr.a_au[i] = f(tr.t_au[i]);
    }
    return tr;
}

// Spectrum on a harmonic-order grid from a log10 profile.
Spectrum synthetic(double d_order, double max_order, auto&& log_profile)
{
    Spectrum s;
    s.omega_carrier_au = 1.0;
    s.dt = 0.1;
    for (double h = 0.0; h <= max_order + 1e-9; h += d_order) {
        s.harmonic_order.push_back(h);
        s.omega_au.push_back(h);
        s.s.push_back(std::pow(10.0, log_profile(h)));
    }
    s.n_fft = 2 * s.s.size();
    return s;
}

}  // namespace

TEST_CASE("Blackman window")
{
    CHECK_THAT(window_value(WindowKind::blackman, 0, 101), WithinAbs(0.0, 1e-15));
    CHECK_THAT(window_value(WindowKind::blackman, 50, 101), WithinAbs(1.0, 1e-15));
    CHECK_THAT(window_value(WindowKind::blackman, 25, 101), WithinAbs(0.34, 1e-12));
    CHECK_THAT(window_value(WindowKind::hann, 50, 101), WithinAbs(1.0, 1e-15));
}

TEST_CASE("a pure cosine gives one peak at its frequency")
{
    const double w0 = 0.057;
    const double dt = 0.1;
    const auto tr = uniform_trace(40000, dt, [&](double t) { return std::cos(w0 * t); });
    const auto s = hhg_spectrum(tr, w0);
    std::size_t peak = 0;
    for (std::size_t k = 1; k < s.size(); ++k) {
        if (s.s[k] > s.s[peak]) peak = k;
    }
    CHECK(std::abs(s.omega_au[peak] - w0) <= s.d_omega());
    CHECK(s.d_order() <= kMaxBinWidthOrders);
}

TEST_CASE("zero acceleration gives a zero spectrum")
{
    const auto tr = uniform_trace(1000, 0.1, [](double) { return 0.0; });
    for (double v : hhg_spectrum(tr, 0.057).s) REQUIRE(v == 0.0);
}

TEST_CASE("Parseval identity in the one-sided convention")
{
    const double dt = 0.05;
    const std::size_t n = 5000;
    const auto tr = uniform_trace(n, dt, [](double t) { return std::sin(0.3 * t) * std::exp(-1e-4 * t * t) + 0.2 * std::cos(2.1 * t); });
    const auto s = hhg_spectrum(tr, 0.057);
    const std::size_t last = s.size() - 1;
    REQUIRE(last == s.n_fft / 2);
    double lhs = s.s[0] + s.s[last];
    for (std::size_t k = 1; k < last; ++k) lhs += 2.0 * s.s[k];
    lhs *= s.d_omega();
    double rhs = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double aw = tr.a_au[i] * window_value(WindowKind::blackman, i, n);
        rhs += aw * aw;
    }
    rhs *= 2.0 * units::kPi * dt;
    CHECK_THAT(lhs, WithinRel(rhs, 1e-8));
}

TEST_CASE("non-uniform sampling is rejected")
{
    auto tr = uniform_trace(100, 0.1, [](double t) { return t; });
    tr.t_au[50] += 0.03;
    CHECK_THROWS_AS(hhg_spectrum(tr, 0.057), Error);
}

TEST_CASE("cutoff of a piecewise plateau-and-slope spectrum")
{
    const double plateau = -2.0;
    const auto s = synthetic(0.05, 200.0, [&](double h) { return h <= 100.0 ? plateau : plateau - (h - 100.0); });
    const auto c = extract_cutoff(s, CutoffProtocol{}, 100.0);
    CHECK(c.valid());
    CHECK_THAT(c.plateau_level_log10, WithinAbs(plateau, 1e-12));
    CHECK_THAT(c.h_ho, WithinAbs(103.0, 1.0));

    // Scale invariance: multiplying S by a constant leaves the cutoff unchanged.
    auto scaled = s;
    for (auto& v : scaled.s) v *= 1e7;
    CHECK_THAT(extract_cutoff(scaled, CutoffProtocol{}, 100.0).h_ho, WithinAbs(c.h_ho, 1e-9));
}

TEST_CASE("cutoff extraction flags")
{
    const auto flat = synthetic(0.05, 200.0, [](double) { return 1.0; });
    CHECK(extract_cutoff(flat, CutoffProtocol{}, 100.0).flags.no_drop);

    const auto revival = synthetic(0.05, 200.0, [](double h) {
        if (h <= 100.0) return 0.0;
        if (h <= 130.0) return -5.0;
        if (h <= 140.0) return 0.0;
        return -6.0;
    });
    const auto noisy = extract_cutoff(revival, CutoffProtocol{}, 100.0);
    CHECK(noisy.flags.noisy);
    CHECK(!noisy.valid());

    const auto coarse = synthetic(1.0, 10.0, [](double h) { return h < 3.0 ? 0.0 : -6.0; });
    CHECK(extract_cutoff(coarse, CutoffProtocol{}, 3.0).flags.no_plateau);

    CHECK_THROWS_AS(extract_cutoff(flat, CutoffProtocol{}, 150.0), Error);
    CutoffProtocol bad;
    bad.plateau_lo = 0.9;
    CHECK_THROWS_AS(extract_cutoff(flat, bad, 100.0), Error);
}

TEST_CASE("persistence skips short dips")
{
    const auto dip = synthetic(0.05, 200.0, [](double h) {
        if (h >= 90.0 && h <= 91.0) return -5.0;
        return h <= 110.0 ? 0.0 : -(h - 110.0);
    });
    CutoffProtocol p;
    p.smooth_width_ho = 0.1;
    const auto c = extract_cutoff(dip, p, 100.0);
    CHECK(c.valid());
    CHECK_THAT(c.h_ho, WithinAbs(113.0, 0.2));
}
