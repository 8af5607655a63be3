#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include <sqhhg/fieldgen.hpp>

using namespace sqhhg;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
const PulseSpec pulse = PulseSpec::make(1500.0, 1.0e14, 2.0);
}

TEST_CASE("vacuum field amplitude")
{
    const double side_au = 1500.0 / 300.0 / units::kLengthAuInNm;
    const double e_vac = vacuum_field_amplitude(pulse.omega_au, side_au * side_au * side_au);
    CHECK_THAT(e_vac * units::kFieldAuInVPerM, WithinRel(2.4e8, 0.025));

    const double v = 1.0e6;
    CHECK_THAT(vacuum_field_amplitude(pulse.omega_au, v / 4.0), WithinRel(2.0 * vacuum_field_amplitude(pulse.omega_au, v), 1e-14));
    CHECK_THAT(vacuum_field_amplitude(2.0 * pulse.omega_au, v),
               WithinRel(std::sqrt(2.0) * vacuum_field_amplitude(pulse.omega_au, v), 1e-14));
    CHECK_THROWS_AS(vacuum_field_amplitude(pulse.omega_au, 0.0), Error);

    CHECK_THAT(resolve_vacuum_field({AmplitudeRatio{1e-2}}, pulse), WithinRel(1e-2 * pulse.e0_au, 1e-15));
    CHECK(resolve_vacuum_field({ExplicitAmplitude{3e-4}}, pulse) == 3e-4);
}

TEST_CASE("field synthesis from quadratures")
{
    const double e_vac = 1e-2 * pulse.e0_au;
    const auto grid = default_time_grid(pulse, 0.05);
    const std::size_t n = grid.size();
    const std::size_t mid = (n - 1) / 2;
    REQUIRE(grid.at(mid) == 0.0);

    const auto zero = synthesize_field({0.0, 0.0, 0}, pulse, e_vac, grid);
    for (double e : zero.e_au) REQUIRE(e == 0.0);

    const auto mean = mean_field(pulse, e_vac, grid);
    CHECK_THAT(mean.e_au[mid], WithinRel(pulse.e0_au, 1e-12));
    double peak = 0.0;
    double dc = 0.0;
    for (double e : mean.e_au) {
        peak = std::max(peak, std::abs(e));
        dc += e * grid.dt;
    }
    CHECK_THAT(peak, WithinRel(pulse.e0_au, 1e-12));
    CHECK(std::abs(dc) < 1e-6 * pulse.e0_au * pulse.period_au());

    const auto sine = synthesize_field({0.0, 1.0, 0}, pulse, e_vac, grid);
    CHECK(sine.e_au[mid] == 0.0);
    const double quarter = pulse.period_au() / 4.0;
    const auto k = static_cast<std::size_t>(std::llround(quarter / grid.dt));
    const double t = grid.at(mid + k);
    CHECK_THAT(sine.e_au[mid + k], WithinRel(e_vac * pulse.envelope(t) * std::sin(pulse.omega_au * t), 1e-12));
    CHECK_THAT(sine.e_au[mid + k], WithinRel(-sine.e_au[mid - k], 1e-12));
}

TEST_CASE("envelope")
{
    CHECK(pulse.envelope(0.0) == 1.0);
    // |E|^2 envelope falls to one half at t = N T / 2
    const double half = pulse.n_cycles * pulse.period_au() / 2.0;
    CHECK_THAT(pulse.envelope(half) * pulse.envelope(half), WithinRel(0.5, 1e-12));
    const auto wide = PulseSpec::make(1500.0, 1.0e14, 1.0e6);
    CHECK_THAT(wide.envelope(500.0), WithinAbs(1.0, 1e-9));
}

TEST_CASE("time grid guards")
{
    const double e_vac = 1e-2 * pulse.e0_au;
    TimeGridSpec coarse = default_time_grid(pulse, pulse.period_au() / 20.0);
    try {
        synthesize_field({1.0, 0.0, 0}, pulse, e_vac, coarse);
        FAIL("expected a resolution error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::resolution);
    }
    const TimeGridSpec narrow{-100.0, 100.0, 0.1};
    CHECK_THROWS_AS(synthesize_field({1.0, 0.0, 0}, pulse, e_vac, narrow), Error);
    const TimeGridSpec ragged{0.0, 1.05, 0.1};
    CHECK_THROWS_AS(ragged.size(), Error);
    CHECK_THROWS_AS(synthesize_field({std::nan(""), 0.0, 0}, pulse, e_vac, default_time_grid(pulse, 0.1)), Error);
}

TEST_CASE("Keldysh parameter")
{
    CHECK_THAT(keldysh_gamma(0.5792, 0.05338, 0.030378), WithinAbs(0.61, 0.005));
    CHECK_THAT(keldysh_gamma(0.5792, 2 * 0.05338, 0.030378), WithinRel(0.5 * keldysh_gamma(0.5792, 0.05338, 0.030378), 1e-14));
}
