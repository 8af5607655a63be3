#pragma once

// Driver pulse description and per-shot field synthesis. A quadrature pair
// (X, P) maps onto one deterministic time-domain field
//   E(t) = E_vac * exp[-2 ln2 (w t / 2 pi N)^2] * (X cos wt + P sin wt).

#include <cmath>
#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "error.hpp"
#include "quadrature.hpp"
#include "units.hpp"

namespace sqhhg {

struct PulseSpec {
    double wavelength_nm = 1500.0;
    double peak_intensity_wcm2 = 1.0e14;
    double n_cycles = 2.0;
    double omega_au = 0.0;
    double e0_au = 0.0;

    static PulseSpec make(double wavelength_nm, double peak_intensity_wcm2, double n_cycles)
    {
        require(wavelength_nm > 0.0 && std::isfinite(wavelength_nm), ErrorKind::invalid_parameter,
                "wavelength must be positive");
        require(peak_intensity_wcm2 > 0.0 && std::isfinite(peak_intensity_wcm2), ErrorKind::invalid_parameter,
                "peak intensity must be positive");
        require(n_cycles >= 1.0, ErrorKind::invalid_parameter, "pulse must span at least one optical cycle");
        return {wavelength_nm, peak_intensity_wcm2, n_cycles, units::wavelength_nm_to_omega_au(wavelength_nm),
                units::intensity_to_field_au(peak_intensity_wcm2)};
    }

    double period_au() const { return 2.0 * units::kPi / omega_au; }
    double photon_ev() const { return units::au_to_ev(omega_au); }
    double ponderomotive_au() const { return e0_au * e0_au / (4.0 * omega_au * omega_au); }

    /// Gaussian field envelope; its square has an FWHM of n_cycles periods.
    double envelope(double t_au) const
    {
        const double u = omega_au * t_au / (2.0 * units::kPi * n_cycles);
        return std::exp(-2.0 * std::log(2.0) * u * u);
    }
};

struct ExplicitVolume {
    double v_eff_au;
};
struct ExplicitAmplitude {
    double e_vac_au;
};
struct AmplitudeRatio {
    double ratio;  // E_vac / E0
};

struct ModeVolumeSpec {
    std::variant<ExplicitVolume, ExplicitAmplitude, AmplitudeRatio> mode = AmplitudeRatio{1.0e-2};
};

/// Per-photon field scale sqrt(2 pi w / V_eff), atomic units.
inline double vacuum_field_amplitude(double omega_au, double v_eff_au)
{
    require(omega_au > 0.0 && std::isfinite(omega_au), ErrorKind::invalid_parameter, "omega must be positive");
    require(v_eff_au > 0.0 && std::isfinite(v_eff_au), ErrorKind::invalid_parameter,
            "effective mode volume must be positive");
    return std::sqrt(2.0 * units::kPi * omega_au / v_eff_au);
}

inline double resolve_vacuum_field(const ModeVolumeSpec& spec, const PulseSpec& pulse)
{
    const double e_vac = std::visit(
        [&](const auto& mode) -> double {
            using T = std::decay_t<decltype(mode)>;
            if constexpr (std::is_same_v<T, ExplicitVolume>) return vacuum_field_amplitude(pulse.omega_au, mode.v_eff_au);
            else if constexpr (std::is_same_v<T, ExplicitAmplitude>) return mode.e_vac_au;
            else return mode.ratio * pulse.e0_au;
        },
        spec.mode);
    require(e_vac > 0.0 && std::isfinite(e_vac), ErrorKind::invalid_parameter, "vacuum field amplitude must be positive");
    return e_vac;
}

struct TimeGridSpec {
    double t_min = 0.0;
    double t_max = 0.0;
    double dt = 0.0;

    std::size_t size() const
    {
        require(dt > 0.0 && std::isfinite(dt), ErrorKind::invalid_parameter, "time step must be positive");
        require(t_max > t_min, ErrorKind::invalid_parameter, "time grid must have t_max > t_min");
        const double steps = (t_max - t_min) / dt;
        const double rounded = std::round(steps);
        require(std::abs(steps - rounded) <= 1e-6 * std::max(1.0, rounded), ErrorKind::invalid_parameter,
                "time window is not an integral number of steps");
        return static_cast<std::size_t>(rounded) + 1;
    }

    double at(std::size_t i) const { return t_min + static_cast<double>(i) * dt; }
};

/// Largest envelope value tolerated at the grid edges.
inline constexpr double kEnvelopeEdgeTolerance = 1e-5;
/// Coarsest time step (in optical periods) accepted for field synthesis.
inline constexpr double kMaxStepPerPeriod = 1.0 / 40.0;

/// Symmetric grid of +-half_width_cycles * N periods around the pulse peak,
/// with t = 0 on the grid.
inline TimeGridSpec default_time_grid(const PulseSpec& pulse, double dt, double half_width_in_n = 3.0)
{
    require(dt > 0.0, ErrorKind::invalid_parameter, "time step must be positive");
    const double half = half_width_in_n * pulse.n_cycles * pulse.period_au();
    const double half_steps = std::ceil(half / dt - 1e-9);
    return {-half_steps * dt, half_steps * dt, dt};
}

struct FieldRealization {
    TimeGridSpec grid;
    std::vector<double> t_au;
    std::vector<double> e_au;
    QuadratureSample sample;
    double e_vac_au = 0.0;
};

inline FieldRealization synthesize_field(const QuadratureSample& sample, const PulseSpec& pulse, double e_vac_au,
                                         const TimeGridSpec& grid)
{
    require(e_vac_au > 0.0, ErrorKind::invalid_parameter, "vacuum field amplitude must be positive");
    require(std::isfinite(sample.x) && std::isfinite(sample.p), ErrorKind::invalid_parameter,
            "quadrature sample must be finite");
    const std::size_t n = grid.size();
    if (grid.dt > kMaxStepPerPeriod * pulse.period_au()) {
        fail(ErrorKind::resolution, "time step exceeds period/40");
    }
    require(pulse.envelope(grid.t_min) <= kEnvelopeEdgeTolerance && pulse.envelope(grid.t_max) <= kEnvelopeEdgeTolerance,
            ErrorKind::invalid_parameter, "time grid does not cover the pulse envelope");

    FieldRealization field;
    field.grid = grid;
    field.sample = sample;
    field.e_vac_au = e_vac_au;
    field.t_au.resize(n);
    field.e_au.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = grid.at(i);
        const double phase = pulse.omega_au * t;
        field.t_au[i] = t;
        field.e_au[i] = e_vac_au * pulse.envelope(t) * (sample.x * std::cos(phase) + sample.p * std::sin(phase));
    }
    return field;
}

/// Deterministic reference drive: X = E0 / E_vac, P = 0.
inline FieldRealization mean_field(const PulseSpec& pulse, double e_vac_au, const TimeGridSpec& grid)
{
    return synthesize_field({pulse.e0_au / e_vac_au, 0.0, 0}, pulse, e_vac_au, grid);
}

inline double keldysh_gamma(double ip_au, double e0_au, double omega_au)
{
    return omega_au * std::sqrt(2.0 * ip_au) / e0_au;
}

}  // namespace sqhhg
