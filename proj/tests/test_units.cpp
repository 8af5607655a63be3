#include <catch2/catch_amalgamated.hpp>

#include <sqhhg/fieldgen.hpp>
#include <sqhhg/units.hpp>

using namespace sqhhg;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("carrier frequency and photon energy at 1500 nm")
{
    const double w = units::wavelength_nm_to_omega_au(1500.0);
    CHECK_THAT(w, WithinAbs(0.030378, 5e-6));
    CHECK_THAT(units::au_to_ev(w), WithinAbs(0.8266, 5e-4));
    // hc = 1239.84 eV nm
    CHECK_THAT(units::au_to_ev(w), WithinRel(1239.84198 / 1500.0, 1e-5));
}

TEST_CASE("peak field from intensity")
{
    CHECK_THAT(units::intensity_to_field_au(1.0e14), WithinAbs(0.05338, 5e-6));
    CHECK_THAT(units::convert(1.0, units::Unit::energy_au, units::Unit::energy_ev), WithinRel(27.2114, 1e-12));
    const double e = units::intensity_to_field_au(3.0e14);
    CHECK_THAT(units::convert(e, units::Unit::field_au, units::Unit::intensity_w_per_cm2), WithinRel(3.0e14, 1e-12));
    CHECK_THAT(units::convert(units::convert(2.5, units::Unit::field_au, units::Unit::field_v_per_m),
                              units::Unit::field_v_per_m, units::Unit::field_au),
               WithinRel(2.5, 1e-15));
}

TEST_CASE("ponderomotive energy against the laboratory formula")
{
    // Up[eV] = 9.33e-14 I[W/cm^2] lambda[um]^2
    const auto pulse = PulseSpec::make(1500.0, 1.0e14, 2.0);
    CHECK_THAT(units::au_to_ev(pulse.ponderomotive_au()), WithinRel(9.33e-14 * 1.0e14 * 1.5 * 1.5, 2e-3));
}

TEST_CASE("unknown units are rejected")
{
    CHECK_THROWS_AS(units::parse_unit("furlong"), Error);
    try {
        units::convert(1.0, units::Unit::time_fs, units::Unit::energy_ev);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::unknown_unit);
    }
    CHECK(units::parse_unit("eV") == units::Unit::energy_ev);
}
